#include "cyberbm/contract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cyberbm/errors.hpp"

namespace cyberbm {

namespace {

int status_slot(const ContractState& s) {
    switch (s.coverage) {
        case Coverage::no: return 0;
        case Coverage::on: return 1;
        case Coverage::off: return 1 + s.off_years;
    }
    return -1;
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

MitigationMenu::MitigationMenu(std::vector<MitigationMeasure> measures)
    : measures_(std::move(measures)) {
    if (measures_.empty()) throw ConfigError("mitigation: menu must contain measure 0");
    if (measures_.front().beta != 0.0 || measures_.front().gamma != 0.0) {
        throw ConfigError("mitigation[0]: measure 0 must have beta = gamma = 0");
    }
    for (std::size_t d = 0; d < measures_.size(); ++d) {
        const auto& m = measures_[d];
        if (!(m.beta >= 0.0) || !std::isfinite(m.beta)) {
            throw ConfigError("mitigation[" + std::to_string(d) + "].beta: must be finite and >= 0");
        }
        if (!(m.gamma >= 0.0) || !std::isfinite(m.gamma)) {
            throw ConfigError("mitigation[" + std::to_string(d) +
                              "].gamma: must be finite and >= 0");
        }
    }
}

std::string ContractState::to_string() const {
    std::string out = "(" + std::to_string(level) + ", ";
    switch (coverage) {
        case Coverage::no: out += "no"; break;
        case Coverage::on: out += "on"; break;
        case Coverage::off: out += "off_" + std::to_string(off_years); break;
    }
    return out + ")";
}

int ClaimTransition::apply(double claim) const {
    int level = zero_level;
    for (const auto& piece : pieces) {
        if (claim > piece.threshold) level = piece.level;
        else break;
    }
    return level;
}

int ClaimTransition::highest_level() const {
    return pieces.empty() ? zero_level : pieces.back().level;
}

Interval ClaimTransition::region(int target) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Segment -1 is [0, t_0]; segment k is (t_k, t_{k+1}] (or (t_k, inf)).
    bool found = false;
    Interval out = Interval::empty_set();
    const auto segment_level = [&](int k) { return k < 0 ? zero_level : pieces[k].level; };
    const int last = static_cast<int>(pieces.size()) - 1;
    for (int k = -1; k <= last; ++k) {
        if (segment_level(k) != target) continue;
        const double hi = k < last ? pieces[k + 1].threshold : inf;
        const bool hi_open = k >= last;
        if (!found) {
            out.lo = k < 0 ? 0.0 : pieces[k].threshold;
            out.lo_open = k >= 0;
            found = true;
        }
        out.hi = hi;
        out.hi_open = hi_open;
    }
    return out;
}

BonusMalusRule::BonusMalusRule(int min_level, int max_level, int horizon,
                               std::vector<ClaimTransition> claim,
                               std::span<const InactiveTransition> inactive)
    : min_level_(min_level), max_level_(max_level), horizon_(horizon), claim_(std::move(claim)) {
    if (min_level_ > 0 || max_level_ < 0) {
        throw ConfigError("contract.levels: must contain level 0");
    }
    if (horizon_ < 1) throw ConfigError("horizon: must be >= 1");
    if (static_cast<int>(claim_.size()) != n_levels()) {
        throw ConfigError("contract.claim_transition: need one rule per level");
    }
    for (int b = min_level_; b <= max_level_; ++b) {
        const auto& rule = claim_[static_cast<std::size_t>(b - min_level_)];
        const std::string where = "contract.claim_transition[" + std::to_string(b) + "]";
        if (!has_level(rule.zero_level)) throw ConfigError(where + ".zero_level: unknown level");
        int prev_level = rule.zero_level;
        double prev_threshold = -1.0;
        for (const auto& piece : rule.pieces) {
            if (!finite_nonneg(piece.threshold) || piece.threshold <= prev_threshold) {
                throw ConfigError(where + ": thresholds must be >= 0 and increasing");
            }
            if (!has_level(piece.level)) throw ConfigError(where + ": unknown target level");
            if (piece.level < prev_level) {
                throw ConfigError(where + ": transition must be nondecreasing in the claim");
            }
            prev_level = piece.level;
            prev_threshold = piece.threshold;
        }
    }

    const std::size_t n = static_cast<std::size_t>(n_states());
    std::vector<bool> given(n, false);
    inactive_.resize(n);
    for (std::size_t idx = 0; idx < n; ++idx) inactive_[idx] = state_at(idx);
    for (const auto& entry : inactive) {
        const auto check = [&](const ContractState& s, const char* what) {
            const bool ok = has_level(s.level) &&
                            (s.coverage == Coverage::off
                                 ? s.off_years >= 1 && s.off_years <= horizon_
                                 : s.off_years == 0);
            if (!ok) {
                throw ConfigError(std::string("contract.inactive_transition: invalid ") + what +
                                  " state " + s.to_string());
            }
        };
        check(entry.from, "source");
        check(entry.to, "target");
        if (entry.from.coverage == Coverage::no && !(entry.to == entry.from)) {
            throw ConfigError("contract.inactive_transition: BM0(b, no) must equal (b, no), got " +
                              entry.from.to_string() + " -> " + entry.to.to_string());
        }
        const std::size_t idx = state_index(entry.from);
        inactive_[idx] = entry.to;
        given[idx] = true;
    }
    for (std::size_t idx = 0; idx < n; ++idx) {
        const ContractState s = state_at(idx);
        if (s.coverage != Coverage::no && !given[idx]) {
            throw ConfigError("contract.inactive_transition: missing entry for " + s.to_string());
        }
    }
}

int BonusMalusRule::claim_transition(int level, double claim) const {
    return claim_rule(level).apply(claim);
}

const ClaimTransition& BonusMalusRule::claim_rule(int level) const {
    if (!has_level(level)) throw DomainError("unknown level " + std::to_string(level));
    return claim_[static_cast<std::size_t>(level - min_level_)];
}

const ContractState& BonusMalusRule::inactive_transition(const ContractState& s) const {
    return inactive_[state_index(s)];
}

std::size_t BonusMalusRule::state_index(const ContractState& s) const {
    const int slot = status_slot(s);
    if (!has_level(s.level) || slot < 0 || slot >= n_status() ||
        (s.coverage == Coverage::off && s.off_years < 1)) {
        throw DomainError("state outside the state space: " + s.to_string());
    }
    return static_cast<std::size_t>((s.level - min_level_) * n_status() + slot);
}

ContractState BonusMalusRule::state_at(std::size_t index) const {
    const int idx = static_cast<int>(index);
    if (idx < 0 || idx >= n_states()) throw DomainError("state index out of range");
    const int level = min_level_ + idx / n_status();
    const int slot = idx % n_status();
    if (slot == 0) return ContractState::never_insured(level);
    if (slot == 1) return ContractState::insured(level);
    return ContractState::lapsed(level, slot - 1);
}

Contract::Contract(BonusMalusRule rule, ContractSchedules schedules)
    : rule_(std::move(rule)), schedules_(std::move(schedules)) {
    const auto T = static_cast<std::size_t>(rule_.horizon());
    const auto L = static_cast<std::size_t>(rule_.n_levels());
    const auto check_table = [&](const std::vector<std::vector<double>>& table,
                                 const std::string& name) {
        if (table.size() != L) throw ConfigError(name + ": need one row per level");
        for (const auto& row : table) {
            if (row.size() != T) throw ConfigError(name + ": need one value per year");
            for (double x : row) {
                if (!finite_nonneg(x)) throw ConfigError(name + ": values must be finite and >= 0");
            }
        }
    };
    const auto check_row = [&](const std::vector<double>& row, const std::string& name) {
        if (row.size() != T) throw ConfigError(name + ": need one value per year");
        for (double x : row) {
            if (!finite_nonneg(x)) throw ConfigError(name + ": values must be finite and >= 0");
        }
    };
    check_table(schedules_.premium, "premium");
    check_table(schedules_.deductible, "deductible");
    check_table(schedules_.max_compensation, "max_compensation");
    check_row(schedules_.fee_in, "fee_in");
    check_row(schedules_.fee_out, "fee_out");
    if (!finite_nonneg(schedules_.fee_re)) throw ConfigError("fee_re: must be finite and >= 0");
    if (!(schedules_.discount_factor > 0.0 && schedules_.discount_factor <= 1.0)) {
        throw ConfigError("discount_factor: must lie in (0, 1]");
    }
    for (std::size_t b = 1; b < L; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            if (schedules_.premium[b][t] < schedules_.premium[b - 1][t]) {
                throw ConfigError("premium: must be nondecreasing in the level (year " +
                                  std::to_string(t + 1) + ")");
            }
        }
    }
}

std::size_t Contract::level_row(int level) const {
    if (!rule_.has_level(level)) throw DomainError("unknown level " + std::to_string(level));
    return static_cast<std::size_t>(level - rule_.min_level());
}

void Contract::check_year(int t) const {
    if (t < 1 || t > horizon()) throw DomainError("year " + std::to_string(t) + " out of range");
}

double Contract::premium(int level, int t) const {
    check_year(t);
    return schedules_.premium[level_row(level)][static_cast<std::size_t>(t - 1)];
}

double Contract::deductible(int level, int t) const {
    check_year(t);
    return schedules_.deductible[level_row(level)][static_cast<std::size_t>(t - 1)];
}

double Contract::max_compensation(int level, int t) const {
    check_year(t);
    return schedules_.max_compensation[level_row(level)][static_cast<std::size_t>(t - 1)];
}

double Contract::fee_in(int t) const {
    check_year(t);
    return schedules_.fee_in[static_cast<std::size_t>(t - 1)];
}

double Contract::fee_out(int t) const {
    check_year(t);
    return schedules_.fee_out[static_cast<std::size_t>(t - 1)];
}

double Contract::contract_payment(const ContractState& s, int t, int insure) const {
    if (insure == 1) {
        double pay = premium(s.level, t);
        if (s.coverage == Coverage::no) pay += fee_in(t);
        if (s.coverage == Coverage::off) pay += fee_re();
        return pay;
    }
    return s.coverage == Coverage::on ? fee_out(t) : 0.0;
}

double aggregate_loss(const MitigationMenu& menu, std::size_t d, YearLoss w) {
    const double gamma = menu.gamma(d);
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw DomainError("event losses must be non-negative");
        total += std::max(x - gamma, 0.0);
    }
    return total;
}

double compensation(const Contract& contract, int level, int t, double loss) {
    if (!(loss >= 0.0)) throw DomainError("loss must be non-negative");
    return layer_payout(loss, contract.deductible(level, t), contract.max_compensation(level, t));
}

namespace {

void check_decision(int insure, int claim) {
    if ((insure != 0 && insure != 1) || (claim != 0 && claim != 1)) {
        throw DomainError("insurance and claim decisions must be 0 or 1");
    }
    if (insure == 0 && claim == 1) {
        throw AdmissibilityViolation("claim requested in a year without coverage");
    }
}

}  // namespace

ContractState step_after_loss(const Contract& contract, const ContractState& s, int t,
                              int insure, int claim, double loss) {
    check_decision(insure, claim);
    if (insure == 1) {
        const double c = claim == 1 ? compensation(contract, s.level, t, loss) : 0.0;
        return ContractState::insured(contract.rule().claim_transition(s.level, c));
    }
    return contract.rule().inactive_transition(s);
}

ContractState step(const Contract& contract, const MitigationMenu& menu, const ContractState& s,
                   int t, std::size_t d, int insure, int claim, YearLoss w) {
    check_decision(insure, claim);
    return step_after_loss(contract, s, t, insure, claim, aggregate_loss(menu, d, w));
}

double stage_cost_after_loss(const Contract& contract, const MitigationMenu& menu,
                             const ContractState& s, int t, std::size_t d, int insure, int claim,
                             double loss) {
    check_decision(insure, claim);
    const double refund = insure * claim * compensation(contract, s.level, t, loss);
    const double cost = menu.beta(d) + contract.contract_payment(s, t, insure) + loss - refund;
    return std::max(cost, 0.0);
}

double stage_cost(const Contract& contract, const MitigationMenu& menu, const ContractState& s,
                  int t, std::size_t d, int insure, int claim, YearLoss w) {
    check_decision(insure, claim);
    return stage_cost_after_loss(contract, menu, s, t, d, insure, claim,
                                 aggregate_loss(menu, d, w));
}

}  // namespace cyberbm
