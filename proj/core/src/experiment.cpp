#include "cyberbm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "cyberbm/errors.hpp"

namespace cyberbm {

using nlohmann::json;

namespace {

constexpr double kClassTolerance = 1e-6;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

double number_at(const json& j, const std::string& key, const std::string& path) {
    return number(require(j, key, path), path + "." + key);
}

int level_key(const std::string& key, const std::string& path) {
    try {
        std::size_t used = 0;
        const int level = std::stoi(key, &used);
        if (used == key.size()) return level;
    } catch (const std::exception&) {
    }
    fail(path, "'" + key + "' is not a level");
}

std::vector<double> year_values(const json& j, int horizon, const std::string& path) {
    if (j.is_number()) return std::vector<double>(static_cast<std::size_t>(horizon), j.get<double>());
    if (!j.is_array()) fail(path, "expected a number or an array of " + std::to_string(horizon));
    if (static_cast<int>(j.size()) != horizon) {
        fail(path, "expected " + std::to_string(horizon) + " yearly values, got " +
                       std::to_string(j.size()));
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
}

LevelSchedule level_schedule(const json& j, int min_level, int max_level, int horizon,
                             const std::string& path) {
    LevelSchedule out;
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            out[level_key(key, path)] = year_values(value, horizon, path + "." + key);
        }
        return out;
    }
    const std::vector<double> row = year_values(j, horizon, path);
    for (int b = min_level; b <= max_level; ++b) out[b] = row;
    return out;
}

std::optional<ContractState> parse_status(const std::string& text, int level) {
    if (text == "no") return ContractState::never_insured(level);
    if (text == "on") return ContractState::insured(level);
    if (text.rfind("off_", 0) == 0) {
        try {
            std::size_t used = 0;
            const int y = std::stoi(text.substr(4), &used);
            if (used == text.size() - 4) return ContractState::lapsed(level, y);
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

std::string family_name(SeveritySpec::Family f) {
    switch (f) {
        case SeveritySpec::Family::tr_g_and_h: return "tr_g_and_h";
        case SeveritySpec::Family::lognormal: return "lognormal";
        case SeveritySpec::Family::lognormal_matched: return "lognormal_matched";
    }
    return "";
}

template <typename F>
auto rethrow_as_config(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(field, e.what());
    }
}

std::vector<InactiveTransition> materialize_inactive(const ContractTemplate& tpl, int horizon,
                                                     bool flat) {
    std::vector<InactiveTransition> out;
    for (std::size_t k = 0; k < tpl.inactive_transition.size(); ++k) {
        const InactiveSpec& e = tpl.inactive_transition[k];
        const std::string path = "contract.inactive_transition[" + std::to_string(k) + "]";
        if (flat && e.level != 0) continue;
        const int to_level = flat ? 0 : e.to_level;
        const auto to = parse_status(e.to_status, to_level);
        if (!to) fail(path + ".to_status", "unknown status '" + e.to_status + "'");
        if (e.status == "off") {
            for (int y = 1; y <= horizon; ++y) {
                out.push_back({ContractState::lapsed(e.level, y), *to});
            }
            continue;
        }
        const auto from = parse_status(e.status, e.level);
        if (!from) fail(path + ".status", "unknown status '" + e.status + "'");
        out.push_back({*from, *to});
    }
    return out;
}

std::vector<double> schedule_row(const LevelSchedule& s, int level, const std::string& field) {
    const auto it = s.find(level);
    if (it == s.end()) fail(field, "no entry for level " + std::to_string(level));
    return it->second;
}

}  // namespace

std::vector<double> SweepSpec::grid() const {
    std::vector<double> out;
    for (long k = 0;; ++k) {
        const double p = premium_min + static_cast<double>(k) * premium_step;
        if (p > premium_max + 1e-9) break;
        out.push_back(p);
    }
    return out;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    const auto disc = [](const DiscretizationConfig& d) {
        return std::tuple(d.l_bar, d.k_gr, d.theta);
    };
    return horizon == o.horizon && discount_factor == o.discount_factor &&
           frequency_rate == o.frequency_rate && severity == o.severity &&
           mitigation == o.mitigation && disc(discretization) == disc(o.discretization) &&
           contract == o.contract && sweep == o.sweep && output_dir == o.output_dir &&
           mc_validation == o.mc_validation;
}

Variant parse_variant(const std::string& name) {
    if (name == "bm") return Variant::bonus_malus;
    if (name == "flat") return Variant::flat;
    throw ConfigError("variant: expected 'bm' or 'flat', got '" + name + "'");
}

std::string variant_name(Variant v) { return v == Variant::bonus_malus ? "bm" : "flat"; }

ExperimentConfig emit_experiment_defaults() {
    ExperimentConfig cfg;
    const int T = 20;
    cfg.horizon = T;
    cfg.discount_factor = 0.95;
    cfg.frequency_rate = 0.8;
    cfg.severity = SeveritySpec{};
    cfg.mitigation = {MeasureSpec{0.0, 0.0, std::nullopt}, MeasureSpec{0.5, std::nullopt, 0.7}};
    cfg.discretization = DiscretizationConfig::with_default_theta(1e4, 20);

    ContractTemplate& c = cfg.contract;
    c.min_level = -2;
    c.max_level = 1;
    c.claim_transition = {{-2, {-2, {{0.0, 1}}}},
                          {-1, {-2, {{0.0, 1}}}},
                          {0, {-1, {{0.0, 1}}}},
                          {1, {0, {{0.0, 1}}}}};
    c.inactive_transition = {
        {-2, "on", -2, "off_1"}, {-1, "on", -1, "off_1"}, {0, "on", 0, "off_1"},
        {1, "on", 1, "off_1"},   {-2, "off", -1, "off_1"}, {-1, "off", 0, "off_1"},
        {0, "off", 0, "off_1"},  {1, "off", 0, "off_1"},
    };
    c.premium_multiplier = {{-2, 0.6}, {-1, 0.8}, {0, 1.0}, {1, 1.5}};
    std::vector<double> dtb(T, 0.5);
    dtb.back() = 5.0;
    for (int b = c.min_level; b <= c.max_level; ++b) {
        c.deductible[b] = dtb;
        c.max_compensation[b] = std::vector<double>(T, 1000.0);
    }
    for (int t = 1; t <= T; ++t) {
        c.fee_in.push_back(0.75 * std::max(t - 16, 0));
        c.fee_out.push_back(3.0 + 5.0 / 19.0 * (t - 1));
    }
    c.fee_re = 3.0;

    cfg.sweep = SweepSpec{0.0, 7.0, 0.005};
    cfg.output_dir = "results";
    cfg.mc_validation = McValidationSpec{};
    return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("config", "expected an object");
    const json& schema = require(root, "schema", "config");
    if (!schema.is_string() || schema.get<std::string>() != kConfigSchema) {
        fail("config.schema", std::string("expected '") + kConfigSchema + "'");
    }

    ExperimentConfig cfg;
    cfg.horizon = integer(require(root, "horizon", "config"), "config.horizon");
    if (cfg.horizon < 1) fail("config.horizon", "must be >= 1");
    const int T = cfg.horizon;
    cfg.discount_factor = number_at(root, "discount_factor", "config");

    const json& freq = require(root, "frequency", "config");
    const json& dist = require(freq, "distribution", "config.frequency");
    if (dist != "poisson") fail("config.frequency.distribution", "only 'poisson' is supported");
    cfg.frequency_rate = number_at(freq, "rate", "config.frequency");

    const json& sev = require(root, "severity", "config");
    const json& fam = require(sev, "family", "config.severity");
    if (fam == "tr_g_and_h" || fam == "lognormal_matched") {
        cfg.severity.family = fam == "tr_g_and_h" ? SeveritySpec::Family::tr_g_and_h
                                                  : SeveritySpec::Family::lognormal_matched;
        cfg.severity.alpha = number_at(sev, "alpha", "config.severity");
        cfg.severity.sigma = number_at(sev, "sigma", "config.severity");
        cfg.severity.g = number_at(sev, "g", "config.severity");
        cfg.severity.h = number_at(sev, "h", "config.severity");
    } else if (fam == "lognormal") {
        cfg.severity.family = SeveritySpec::Family::lognormal;
        cfg.severity.mu = number_at(sev, "mu", "config.severity");
        cfg.severity.s = number_at(sev, "s", "config.severity");
    } else {
        fail("config.severity.family",
             "expected 'tr_g_and_h', 'lognormal' or 'lognormal_matched'");
    }

    const json& mit = require(root, "mitigation", "config");
    if (!mit.is_array()) fail("config.mitigation", "expected an array");
    for (std::size_t d = 0; d < mit.size(); ++d) {
        const std::string path = "config.mitigation[" + std::to_string(d) + "]";
        MeasureSpec m;
        m.beta = number_at(mit[d], "beta", path);
        if (mit[d].contains("gamma")) m.gamma = number(mit[d]["gamma"], path + ".gamma");
        if (mit[d].contains("gamma_quantile")) {
            m.gamma_quantile = number(mit[d]["gamma_quantile"], path + ".gamma_quantile");
        }
        cfg.mitigation.push_back(m);
    }

    const json& disc = require(root, "discretization", "config");
    cfg.discretization.l_bar = number_at(disc, "l_bar", "config.discretization");
    cfg.discretization.k_gr =
        integer(require(disc, "k_gr", "config.discretization"), "config.discretization.k_gr");
    cfg.discretization.theta =
        disc.contains("theta") ? number(disc["theta"], "config.discretization.theta")
                               : DiscretizationConfig::default_theta(cfg.discretization.k_gr);

    const json& con = require(root, "contract", "config");
    ContractTemplate& c = cfg.contract;
    const json& levels = require(con, "levels", "config.contract");
    if (!levels.is_array() || levels.empty()) fail("config.contract.levels", "expected a list");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const int b = integer(levels[k], "config.contract.levels[" + std::to_string(k) + "]");
        if (k == 0) c.min_level = b;
        else if (b != c.max_level + 1) {
            fail("config.contract.levels", "levels must be consecutive integers");
        }
        c.max_level = b;
    }
    const json& claim = require(con, "claim_transition", "config.contract");
    if (!claim.is_object()) fail("config.contract.claim_transition", "expected an object");
    for (const auto& [key, value] : claim.items()) {
        const std::string path = "config.contract.claim_transition." + key;
        ClaimTransition ct;
        ct.zero_level = integer(require(value, "zero_claim", path), path + ".zero_claim");
        if (value.contains("pieces")) {
            const json& pieces = value["pieces"];
            if (!pieces.is_array()) fail(path + ".pieces", "expected an array");
            for (std::size_t k = 0; k < pieces.size(); ++k) {
                const std::string pp = path + ".pieces[" + std::to_string(k) + "]";
                ct.pieces.push_back({number_at(pieces[k], "above", pp),
                                     integer(require(pieces[k], "level", pp), pp + ".level")});
            }
        }
        c.claim_transition[level_key(key, "config.contract.claim_transition")] = ct;
    }
    const json& inactive = require(con, "inactive_transition", "config.contract");
    if (!inactive.is_array()) fail("config.contract.inactive_transition", "expected an array");
    for (std::size_t k = 0; k < inactive.size(); ++k) {
        const std::string path = "config.contract.inactive_transition[" + std::to_string(k) + "]";
        const json& e = inactive[k];
        const auto text = [&](const char* key) {
            const json& v = require(e, key, path);
            if (!v.is_string()) fail(path + "." + key, "expected a string");
            return v.get<std::string>();
        };
        c.inactive_transition.push_back(
            {integer(require(e, "level", path), path + ".level"), text("status"),
             integer(require(e, "to_level", path), path + ".to_level"), text("to_status")});
    }
    const json& mult = require(con, "premium_multiplier", "config.contract");
    if (!mult.is_object()) fail("config.contract.premium_multiplier", "expected an object");
    for (const auto& [key, value] : mult.items()) {
        c.premium_multiplier[level_key(key, "config.contract.premium_multiplier")] =
            number(value, "config.contract.premium_multiplier." + key);
    }
    c.deductible = level_schedule(require(con, "deductible", "config.contract"), c.min_level,
                                  c.max_level, T, "config.contract.deductible");
    c.max_compensation =
        level_schedule(require(con, "max_compensation", "config.contract"), c.min_level,
                       c.max_level, T, "config.contract.max_compensation");
    c.fee_in = year_values(require(con, "fee_in", "config.contract"), T, "config.contract.fee_in");
    c.fee_out =
        year_values(require(con, "fee_out", "config.contract"), T, "config.contract.fee_out");
    c.fee_re = number_at(con, "fee_re", "config.contract");

    const json& sweep = require(root, "sweep", "config");
    cfg.sweep.premium_min = number_at(sweep, "premium_min", "config.sweep");
    cfg.sweep.premium_max = number_at(sweep, "premium_max", "config.sweep");
    cfg.sweep.premium_step = number_at(sweep, "premium_step", "config.sweep");

    if (root.contains("output")) {
        const json& dir = require(root["output"], "directory", "config.output");
        if (!dir.is_string()) fail("config.output.directory", "expected a string");
        cfg.output_dir = dir.get<std::string>();
    }
    if (root.contains("mc_validation")) {
        const json& mc = root["mc_validation"];
        McValidationSpec spec;
        spec.base_premium = number_at(mc, "base_premium", "config.mc_validation");
        const json& variant = require(mc, "variant", "config.mc_validation");
        if (!variant.is_string()) fail("config.mc_validation.variant", "expected a string");
        spec.variant = variant.get<std::string>();
        const json& paths = require(mc, "paths", "config.mc_validation");
        if (!paths.is_number_unsigned()) fail("config.mc_validation.paths", "expected a count");
        spec.paths = paths.get<std::size_t>();
        const json& seed = require(mc, "seed", "config.mc_validation");
        if (!seed.is_number_unsigned()) fail("config.mc_validation.seed", "expected an integer");
        spec.seed = seed.get<std::uint64_t>();
        cfg.mc_validation = spec;
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json root;
    root["schema"] = kConfigSchema;
    root["horizon"] = cfg.horizon;
    root["discount_factor"] = cfg.discount_factor;
    root["frequency"] = {{"distribution", "poisson"}, {"rate", cfg.frequency_rate}};
    json sev = {{"family", family_name(cfg.severity.family)}};
    if (cfg.severity.family == SeveritySpec::Family::lognormal) {
        sev["mu"] = cfg.severity.mu;
        sev["s"] = cfg.severity.s;
    } else {
        sev["alpha"] = cfg.severity.alpha;
        sev["sigma"] = cfg.severity.sigma;
        sev["g"] = cfg.severity.g;
        sev["h"] = cfg.severity.h;
    }
    root["severity"] = sev;
    json mit = json::array();
    for (const auto& m : cfg.mitigation) {
        json e = {{"beta", m.beta}};
        if (m.gamma) e["gamma"] = *m.gamma;
        if (m.gamma_quantile) e["gamma_quantile"] = *m.gamma_quantile;
        mit.push_back(e);
    }
    root["mitigation"] = mit;
    root["discretization"] = {{"l_bar", cfg.discretization.l_bar},
                              {"k_gr", cfg.discretization.k_gr},
                              {"theta", cfg.discretization.theta}};

    const ContractTemplate& c = cfg.contract;
    json con;
    json levels = json::array();
    for (int b = c.min_level; b <= c.max_level; ++b) levels.push_back(b);
    con["levels"] = levels;
    json claim = json::object();
    for (const auto& [b, ct] : c.claim_transition) {
        json pieces = json::array();
        for (const auto& p : ct.pieces) pieces.push_back({{"above", p.threshold}, {"level", p.level}});
        claim[std::to_string(b)] = {{"zero_claim", ct.zero_level}, {"pieces", pieces}};
    }
    con["claim_transition"] = claim;
    json inactive = json::array();
    for (const auto& e : c.inactive_transition) {
        inactive.push_back({{"level", e.level},
                            {"status", e.status},
                            {"to_level", e.to_level},
                            {"to_status", e.to_status}});
    }
    con["inactive_transition"] = inactive;
    json mult = json::object();
    for (const auto& [b, m] : c.premium_multiplier) mult[std::to_string(b)] = m;
    con["premium_multiplier"] = mult;
    const auto schedule = [](const LevelSchedule& s) {
        json out = json::object();
        for (const auto& [b, row] : s) out[std::to_string(b)] = row;
        return out;
    };
    con["deductible"] = schedule(c.deductible);
    con["max_compensation"] = schedule(c.max_compensation);
    con["fee_in"] = c.fee_in;
    con["fee_out"] = c.fee_out;
    con["fee_re"] = c.fee_re;
    root["contract"] = con;

    root["sweep"] = {{"premium_min", cfg.sweep.premium_min},
                     {"premium_max", cfg.sweep.premium_max},
                     {"premium_step", cfg.sweep.premium_step}};
    root["output"] = {{"directory", cfg.output_dir}};
    if (cfg.mc_validation) {
        root["mc_validation"] = {{"base_premium", cfg.mc_validation->base_premium},
                                 {"variant", cfg.mc_validation->variant},
                                 {"paths", cfg.mc_validation->paths},
                                 {"seed", cfg.mc_validation->seed}};
    }
    return root.dump(2) + "\n";
}

std::shared_ptr<const Severity> make_severity(const SeveritySpec& spec) {
    switch (spec.family) {
        case SeveritySpec::Family::tr_g_and_h:
            return std::make_shared<TruncatedGAndH>(spec.alpha, spec.sigma, spec.g, spec.h);
        case SeveritySpec::Family::lognormal:
            return std::make_shared<Lognormal>(LognormalParams{spec.mu, spec.s});
        case SeveritySpec::Family::lognormal_matched:
            return std::make_shared<Lognormal>(lognormal_moment_match(
                TruncatedGAndH(spec.alpha, spec.sigma, spec.g, spec.h)));
    }
    throw ConfigError("severity.family: unknown");
}

MitigationMenu make_menu(const ExperimentConfig& cfg, const Severity& severity) {
    std::vector<MitigationMeasure> measures;
    for (std::size_t d = 0; d < cfg.mitigation.size(); ++d) {
        const MeasureSpec& m = cfg.mitigation[d];
        const std::string path = "mitigation[" + std::to_string(d) + "]";
        if (m.gamma.has_value() == m.gamma_quantile.has_value()) {
            fail(path, "give exactly one of gamma and gamma_quantile");
        }
        double gamma = 0.0;
        if (m.gamma) {
            gamma = *m.gamma;
        } else {
            const double q = *m.gamma_quantile;
            if (!(q > 0.0 && q < 1.0)) fail(path + ".gamma_quantile", "must lie in (0, 1)");
            gamma = rethrow_as_config(path + ".gamma_quantile",
                                      [&] { return severity.quantile(q); });
        }
        measures.push_back({m.beta, gamma});
    }
    return MitigationMenu(std::move(measures));
}

CompoundLossModel make_loss_model(const ExperimentConfig& cfg) {
    auto severity = rethrow_as_config("severity", [&] { return make_severity(cfg.severity); });
    MitigationMenu menu = make_menu(cfg, *severity);
    const FrequencyModel freq =
        rethrow_as_config("frequency.rate", [&] { return FrequencyModel::poisson(cfg.frequency_rate); });
    return CompoundLossModel(std::move(severity), freq, std::move(menu));
}

Contract make_contract(const ExperimentConfig& cfg, Variant variant, double base_premium) {
    const ContractTemplate& tpl = cfg.contract;
    const int T = cfg.horizon;
    const bool flat = variant == Variant::flat;
    const int lo = flat ? 0 : tpl.min_level;
    const int hi = flat ? 0 : tpl.max_level;
    if (tpl.min_level > 0 || tpl.max_level < 0) fail("contract.levels", "must contain level 0");

    std::vector<ClaimTransition> claim;
    ContractSchedules sched;
    for (int b = lo; b <= hi; ++b) {
        if (flat) {
            claim.push_back({0, {}});
        } else {
            const auto it = tpl.claim_transition.find(b);
            if (it == tpl.claim_transition.end()) {
                fail("contract.claim_transition", "no entry for level " + std::to_string(b));
            }
            claim.push_back(it->second);
        }
        double mult = 1.0;
        if (!flat) {
            const auto it = tpl.premium_multiplier.find(b);
            if (it == tpl.premium_multiplier.end()) {
                fail("contract.premium_multiplier", "no entry for level " + std::to_string(b));
            }
            mult = it->second;
        }
        sched.premium.push_back(std::vector<double>(static_cast<std::size_t>(T), mult * base_premium));
        sched.deductible.push_back(schedule_row(tpl.deductible, b, "contract.deductible"));
        sched.max_compensation.push_back(
            schedule_row(tpl.max_compensation, b, "contract.max_compensation"));
    }
    sched.fee_in = tpl.fee_in;
    sched.fee_out = tpl.fee_out;
    sched.fee_re = tpl.fee_re;
    sched.discount_factor = cfg.discount_factor;

    const std::vector<InactiveTransition> inactive = materialize_inactive(tpl, T, flat);
    return rethrow_as_config("contract", [&] {
        BonusMalusRule rule(lo, hi, T, std::move(claim), inactive);
        return Contract(std::move(rule), std::move(sched));
    });
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.horizon < 1) fail("horizon", "must be >= 1");
    if (!(cfg.discount_factor > 0.0 && cfg.discount_factor <= 1.0)) {
        fail("discount_factor", "must lie in (0, 1]");
    }
    if (!(cfg.frequency_rate >= 0.0) || !std::isfinite(cfg.frequency_rate)) {
        fail("frequency.rate", "must be finite and >= 0");
    }
    if (cfg.mitigation.empty()) fail("mitigation", "must list at least measure 0");
    rethrow_as_config("discretization", [&] { cfg.discretization.validate(); return 0; });
    const CompoundLossModel model = make_loss_model(cfg);
    (void)model;

    const ContractTemplate& c = cfg.contract;
    const auto check_levels = [&](const LevelSchedule& s, const std::string& field) {
        for (const auto& [b, row] : s) {
            if (b < c.min_level || b > c.max_level) {
                fail(field, "level " + std::to_string(b) + " is not a contract level");
            }
            (void)row;
        }
    };
    check_levels(c.deductible, "contract.deductible");
    check_levels(c.max_compensation, "contract.max_compensation");
    for (const auto& [b, m] : c.premium_multiplier) {
        if (!(m >= 0.0) || !std::isfinite(m)) {
            fail("contract.premium_multiplier." + std::to_string(b), "must be finite and >= 0");
        }
    }
    if (static_cast<int>(c.fee_in.size()) != cfg.horizon) fail("contract.fee_in", "need T values");
    if (static_cast<int>(c.fee_out.size()) != cfg.horizon) fail("contract.fee_out", "need T values");

    const SweepSpec& s = cfg.sweep;
    if (!(s.premium_step > 0.0) || !std::isfinite(s.premium_step)) {
        fail("sweep.premium_step", "must be > 0");
    }
    if (!(s.premium_min >= 0.0)) fail("sweep.premium_min", "must be >= 0");
    if (!(s.premium_min <= s.premium_max) || !std::isfinite(s.premium_max)) {
        fail("sweep.premium_max", "must be finite and >= premium_min");
    }
    make_contract(cfg, Variant::bonus_malus, s.premium_max);
    make_contract(cfg, Variant::flat, s.premium_max);
    if (cfg.output_dir.empty()) fail("output.directory", "must not be empty");
    if (cfg.mc_validation) {
        const auto& mc = *cfg.mc_validation;
        if (mc.paths < 1) fail("mc_validation.paths", "must be >= 1");
        if (!(mc.base_premium >= 0.0)) fail("mc_validation.base_premium", "must be >= 0");
        rethrow_as_config("mc_validation.variant", [&] { return parse_variant(mc.variant); });
    }
}

SweepRow summarize(const PolicySolution& solution, double base_premium,
                   const std::vector<int>& levels) {
    const OccupancySummary occ = occupancy_summaries(solution);
    const BonusMalusRule& rule = solution.contract.rule();
    SweepRow row;
    row.base_premium = base_premium;
    row.v0 = solution.optimal_value();
    row.retention = occ.retention;
    for (int b : levels) {
        row.years_per_level.push_back(
            rule.has_level(b) ? occ.years_per_level[static_cast<std::size_t>(b - rule.min_level())]
                              : 0.0);
    }
    row.years_uninsured = occ.years_uninsured;
    row.mitigation_years = occ.mitigation_years;
    const int lp = solution.find_qoi(qoi::loss_prevented);
    row.loss_prevented = lp < 0 ? 0.0 : solution.qoi_aggregate[static_cast<std::size_t>(lp)];
    row.insurer_profit = insurer_profit(solution);
    return row;
}

PolicySolution solve_premium(const ExperimentConfig& cfg, Variant variant,
                             const LossModel& losses, double base_premium) {
    const Contract contract = make_contract(cfg, variant, base_premium);
    const auto severity = make_severity(cfg.severity);
    const MitigationMenu menu = make_menu(cfg, *severity);
    const auto quantities = standard_quantities(menu);
    return solve(contract, menu, losses, quantities);
}

SweepResult run_sweep(const ExperimentConfig& cfg, Variant variant, const LossModel& losses,
                      unsigned jobs) {
    validate(cfg);
    const auto severity = make_severity(cfg.severity);
    const MitigationMenu menu = make_menu(cfg, *severity);
    const auto quantities = standard_quantities(menu);

    SweepResult result;
    result.variant = variant;
    result.horizon = cfg.horizon;
    for (int b = cfg.contract.min_level; b <= cfg.contract.max_level; ++b) {
        result.levels.push_back(b);
    }
    const std::vector<double> grid = cfg.sweep.grid();
    result.rows.resize(grid.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= grid.size()) return;
            try {
                const Contract contract = make_contract(cfg, variant, grid[k]);
                const PolicySolution sol = solve(contract, menu, losses, quantities);
                result.rows[k] = summarize(sol, grid[k], result.levels);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(grid.size());
                return;
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return result;
}

Regime classify(const SweepRow& row, int horizon) {
    Regime r{RetentionClass::partial, MitigationClass::partial};
    if (row.retention >= 1.0 - kClassTolerance) r.retention = RetentionClass::full;
    else if (row.retention <= kClassTolerance) r.retention = RetentionClass::none;
    if (row.mitigation_years >= horizon - kClassTolerance) r.mitigation = MitigationClass::always;
    else if (row.mitigation_years <= kClassTolerance) r.mitigation = MitigationClass::never;
    return r;
}

std::string describe(const Regime& regime) {
    std::string out;
    switch (regime.retention) {
        case RetentionClass::full: out = "full retention"; break;
        case RetentionClass::partial: out = "partial retention"; break;
        case RetentionClass::none: out = "zero retention"; break;
    }
    switch (regime.mitigation) {
        case MitigationClass::always: out += ", always mitigate"; break;
        case MitigationClass::partial: out += ", partial mitigation"; break;
        case MitigationClass::never: out += ", never mitigate"; break;
    }
    return out;
}

std::vector<RegimeChange> regime_changes(const SweepResult& result) {
    std::vector<RegimeChange> out;
    for (std::size_t k = 1; k < result.rows.size(); ++k) {
        const Regime a = classify(result.rows[k - 1], result.horizon);
        const Regime b = classify(result.rows[k], result.horizon);
        if (!(a == b)) {
            out.push_back({result.rows[k - 1].base_premium, result.rows[k].base_premium, a, b});
        }
    }
    return out;
}

std::string level_column(int level) {
    return "years_bm_" + (level < 0 ? "m" + std::to_string(-level) : std::to_string(level));
}

std::string format_number(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    if (std::abs(x) < 1e-12) return "0";
    const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(x))));
    const int decimals = std::max(0, 5 - magnitude);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    std::string s = buf;
    if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) return "0";
    return s;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << "base_premium,V0,retention";
    for (int b : result.levels) os << ',' << level_column(b);
    os << ",years_uninsured,mitigation_years,loss_prevented,insurer_profit\n";
    for (const SweepRow& r : result.rows) {
        os << format_number(r.base_premium) << ',' << format_number(r.v0) << ','
           << format_number(r.retention);
        for (double y : r.years_per_level) os << ',' << format_number(y);
        os << ',' << format_number(r.years_uninsured) << ',' << format_number(r.mitigation_years)
           << ',' << format_number(r.loss_prevented) << ',' << format_number(r.insurer_profit)
           << '\n';
    }
}

void write_threshold_summary(std::ostream& os, const SweepResult& result) {
    os << "variant: " << variant_name(result.variant) << '\n';
    if (result.rows.empty()) return;
    os << "regime at " << format_number(result.rows.front().base_premium) << ": "
       << describe(classify(result.rows.front(), result.horizon)) << '\n';
    for (const RegimeChange& c : regime_changes(result)) {
        os << format_number(c.last_premium) << " -> " << format_number(c.next_premium) << ": "
           << describe(c.before) << " => " << describe(c.after) << '\n';
    }
}

std::filesystem::path write_sweep_outputs(const std::filesystem::path& dir,
                                          const SweepResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string tag = variant_name(result.variant);
    const fs::path csv = dir / ("sweep_" + tag + ".csv");
    const fs::path summary = dir / ("thresholds_" + tag + ".txt");
    const auto write_atomically = [](const fs::path& target, const auto& body) {
        fs::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw Error("cannot write " + tmp.string());
            body(out);
            if (!out) throw Error("failed writing " + tmp.string());
        }
        fs::rename(tmp, target);
    };
    write_atomically(csv, [&](std::ostream& os) { write_sweep_csv(os, result); });
    write_atomically(summary, [&](std::ostream& os) { write_threshold_summary(os, result); });
    return csv;
}

}  // namespace cyberbm
