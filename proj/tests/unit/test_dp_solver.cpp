#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cyberbm/dp_solver.hpp"
#include "cyberbm/errors.hpp"
#include "cyberbm/experiment.hpp"
#include "brute_force.hpp"

using namespace cyberbm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Single level, no fees, constant premium.
Contract single_level(int T, double premium, double delta, double dtb = 0.0, double cap = 1e3) {
    std::vector<InactiveTransition> inactive{
        {ContractState::insured(0), ContractState::lapsed(0, 1)}};
    for (int y = 1; y <= T; ++y) {
        inactive.push_back({ContractState::lapsed(0, y), ContractState::lapsed(0, std::min(y + 1, T))});
    }
    BonusMalusRule rule(0, 0, T, {{0, {}}}, inactive);
    ContractSchedules s;
    const auto n = static_cast<std::size_t>(T);
    s.premium = {std::vector<double>(n, premium)};
    s.deductible = {std::vector<double>(n, dtb)};
    s.max_compensation = {std::vector<double>(n, cap)};
    s.fee_in.assign(n, 0.0);
    s.fee_out.assign(n, 0.0);
    s.discount_factor = delta;
    return Contract(std::move(rule), std::move(s));
}

DiscreteLossDistribution two_atoms() { return DiscreteLossDistribution({0.0, 10.0}, {0.6, 0.4}); }

/// Experiment instance on a coarse grid.
struct Coarse {
    ExperimentConfig cfg = emit_experiment_defaults();
    CompoundLossModel model = make_loss_model(cfg);
    LossModel losses;
    Coarse() {
        cfg.discretization = DiscretizationConfig::with_default_theta(2e3, 15);
        losses = LossModel::from_compound(model, cfg.discretization);
    }
    PolicySolution solve_at(double base, Variant v = Variant::bonus_malus) const {
        const auto q = standard_quantities(model.menu());
        return solve(make_contract(cfg, v, base), model.menu(), losses, q);
    }
};

const Coarse& coarse() {
    static const Coarse c;
    return c;
}

}  // namespace

TEST_CASE("one year, insurance dominated", "[dp]") {
    const MitigationMenu menu({{0.0, 0.0}, {0.5, 0.0}});
    const auto dist = two_atoms();
    const LossModel losses = LossModel::from_distributions({dist, dist});
    const Contract c = single_level(1, 50.0, 0.95);
    const auto q = standard_quantities(menu);
    const PolicySolution sol = solve(c, menu, losses, q);
    CHECK(sol.insure_at(1, ContractState::never_insured(0)) == 0);
    CHECK(sol.mitigation_at(1, ContractState::never_insured(0)) == 0);
    CHECK_THAT(sol.optimal_value(), WithinAbs(0.95 * 4.0, 1e-12));
    CHECK(insurer_profit(sol) == 0.0);
}

TEST_CASE("toy two-year instance", "[dp]") {
    // Claims move 0 -> 1 and raise next year's premium.
    const int T = 2;
    std::vector<InactiveTransition> inactive;
    for (int b = 0; b <= 1; ++b) {
        inactive.push_back({ContractState::insured(b), ContractState::lapsed(b, 1)});
        inactive.push_back({ContractState::lapsed(b, 1), ContractState::lapsed(b, 2)});
        inactive.push_back({ContractState::lapsed(b, 2), ContractState::lapsed(b, 2)});
    }
    BonusMalusRule rule(0, 1, T, {{0, {{0.0, 1}}}, {0, {{0.0, 1}}}}, inactive);
    ContractSchedules s;
    s.premium = {{3.0, 3.0}, {3.0, 7.5}};
    s.deductible = {{1.0, 1.0}, {1.0, 1.0}};
    s.max_compensation = {{8.0, 8.0}, {8.0, 8.0}};
    s.fee_in = {0.0, 0.5};
    s.fee_out = {1.0, 1.0};
    s.fee_re = 2.0;
    s.discount_factor = 0.9;
    oracle::TinyInstance inst{Contract(std::move(rule), std::move(s)),
                              MitigationMenu({{0.0, 0.0}, {1.0, 4.0}}),
                              {two_atoms(), DiscreteLossDistribution({0.0, 6.0}, {0.6, 0.4})}};
    const LossModel losses = LossModel::from_distributions(inst.losses);
    const auto q = standard_quantities(inst.menu);
    const PolicySolution sol = solve(inst.contract, inst.menu, losses, q);
    const auto enumerated = oracle::enumerate_policies(inst);
    REQUIRE(enumerated.n_policies > 0);
    CHECK_THAT(sol.optimal_value(), WithinAbs(enumerated.best, 1e-9));
    CHECK_THAT(sol.optimal_value(), WithinAbs(oracle::expectimin_value(inst), 1e-9));

    // Claim iff compensation exceeds the value gap.
    for (int t = 1; t <= T; ++t) {
        const ContractState st = ContractState::insured(0);
        if (sol.insure_at(t, st) != 1) continue;
        const double gap = sol.value(t, ContractState::insured(1)) -
                           sol.value(t, ContractState::insured(0));
        const double lam = compensation(inst.contract, 0, t, 10.0);
        CHECK(claim_rule(sol, st, t, 10.0) == (lam > gap ? 1 : 0));
    }
}

TEST_CASE("solver matches brute force on random instances", "[dp]") {
    std::mt19937_64 rng(7);
    int compared = 0;
    for (int k = 0; k < 300; ++k) {
        const auto inst = oracle::random_instance(rng, 3, 3, 3);
        const LossModel losses = LossModel::from_distributions(inst.losses);
        const PolicySolution sol = solve(inst.contract, inst.menu, losses, {});
        const double ref = oracle::expectimin_value(inst);
        CHECK_THAT(sol.optimal_value(), WithinAbs(ref, 1e-9 * std::max(1.0, ref)));
        const auto e = oracle::enumerate_policies(inst);
        if (e.n_policies > 0) {
            ++compared;
            CHECK_THAT(e.best, WithinAbs(ref, 1e-9 * std::max(1.0, ref)));
        }
    }
    CHECK(compared > 0);
}

TEST_CASE("solution invariants", "[dp]") {
    const auto& c = coarse();
    for (double base : {0.0, 3.0, 4.7, 5.2}) {
        for (Variant v : {Variant::bonus_malus, Variant::flat}) {
            const PolicySolution sol = c.solve_at(base, v);
            const int T = sol.horizon();
            const std::size_t n = sol.n_states;
            for (double x : sol.values[static_cast<std::size_t>(T)]) CHECK(x == 0.0);
            for (const auto& row : sol.values) {
                for (double x : row) CHECK(x >= 0.0);
            }
            CHECK(sol.marginal(0, ContractState::never_insured(0)) == 1.0);
            for (int t = 1; t <= T; ++t) {
                const auto& k = sol.kernels[static_cast<std::size_t>(t - 1)];
                for (std::size_t i = 0; i < n; ++i) {
                    double row = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        CHECK(k[i * n + j] >= 0.0);
                        row += k[i * n + j];
                    }
                    CHECK_THAT(row, WithinAbs(1.0, 1e-9));
                }
                const auto& prev = sol.marginals[static_cast<std::size_t>(t - 1)];
                const auto& cur = sol.marginals[static_cast<std::size_t>(t)];
                double total = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    double pushed = 0.0;
                    for (std::size_t i = 0; i < n; ++i) pushed += prev[i] * k[i * n + j];
                    CHECK_THAT(cur[j], WithinAbs(pushed, 1e-12));
                    total += cur[j];
                }
                CHECK_THAT(total, WithinAbs(1.0, 1e-9));
            }
            CHECK(insurer_profit(sol) <= 1e-9);
        }
    }
}

TEST_CASE("value is monotone in the premium", "[dp]") {
    const auto& c = coarse();
    double prev = -1.0;
    for (double base = 0.0; base <= 7.0; base += 0.25) {
        const double v = c.solve_at(base).optimal_value();
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("claim rule is the one-stage minimizer", "[dp]") {
    const auto& c = coarse();
    const PolicySolution sol = c.solve_at(4.7);
    const Contract& con = sol.contract;
    const BonusMalusRule& rule = con.rule();
    const auto& menu = c.model.menu();
    for (int t = 1; t <= sol.horizon(); ++t) {
        for (std::size_t si = 0; si < sol.n_states; ++si) {
            const ContractState s = rule.state_at(si);
            if (sol.insure_at(t, s) != 1) continue;
            const auto d = static_cast<std::size_t>(sol.mitigation_at(t, s));
            const auto& layers = *c.losses.measures[d].layers;
            for (std::size_t a = 0; a < layers.distribution().size(); a += 97) {
                const double l = layers.distribution().atom(a);
                const auto total = [&](int j) {
                    const ContractState next = step_after_loss(con, s, t, 1, j, l);
                    return stage_cost_after_loss(con, menu, s, t, d, 1, j, l) +
                           sol.value(t, next);
                };
                const int j = claim_rule(sol, s, t, l);
                CHECK(total(j) <= std::min(total(0), total(1)) + 1e-9);
            }
        }
    }
}

TEST_CASE("bonus hunger", "[dp]") {
    const auto& c = coarse();
    const PolicySolution sol = c.solve_at(4.7);
    const Contract& con = sol.contract;
    for (int t = 1; t <= sol.horizon(); ++t) {
        for (int b = con.rule().min_level(); b <= con.rule().max_level(); ++b) {
            const ContractState s = ContractState::insured(b);
            if (sol.insure_at(t, s) != 1) continue;
            double min_alpha = std::numeric_limits<double>::infinity();
            for (const auto& ci : sol.claims_at(t, b)) {
                if (ci.target_level != con.rule().claim_transition(b, 0.0)) {
                    min_alpha = std::min(min_alpha, ci.alpha);
                }
            }
            if (!(min_alpha > 0.0) || !std::isfinite(min_alpha)) continue;
            const double dtb = con.deductible(b, t);
            for (double f : {0.01, 0.25, 0.5, 0.99, 1.0}) {
                const double loss = dtb + f * min_alpha;
                if (compensation(con, b, t, loss) > min_alpha) continue;
                CHECK(claim_rule(sol, s, t, loss) == 0);
            }
            CHECK(claim_rule(sol, s, t, 0.0) == 0);
        }
        for (std::size_t si = 0; si < sol.n_states; ++si) {
            const ContractState s = con.rule().state_at(si);
            if (sol.insure_at(t, s) == 0) CHECK(claim_rule(sol, s, t, 50.0) == 0);
        }
    }
}

TEST_CASE("free insurance is always bought", "[dp]") {
    const PolicySolution sol = coarse().solve_at(0.0);
    const auto occ = occupancy_summaries(sol);
    CHECK_THAT(occ.retention, WithinAbs(1.0, 1e-12));
}

TEST_CASE("prohibitive premium is never bought", "[dp]") {
    const PolicySolution sol = coarse().solve_at(50.0);
    const auto occ = occupancy_summaries(sol);
    CHECK(occ.retention == 0.0);
    CHECK(insurer_profit(sol) == 0.0);
    CHECK_THAT(occ.mitigation_years, WithinAbs(20.0, 1e-12));
}

TEST_CASE("insurer profit needs the quantities", "[dp]") {
    const auto& c = coarse();
    const PolicySolution sol =
        solve(make_contract(c.cfg, Variant::flat, 4.0), c.model.menu(), c.losses, {});
    CHECK_THROWS_AS(insurer_profit(sol), DomainError);
}

TEST_CASE("experiment at base premium 4.70", "[dp][slow]") {
    const ExperimentConfig cfg = emit_experiment_defaults();
    const CompoundLossModel model = make_loss_model(cfg);
    const LossModel losses = LossModel::from_compound(model, cfg.discretization);
    const auto q = standard_quantities(model.menu());
    const PolicySolution sol =
        solve(make_contract(cfg, Variant::bonus_malus, 4.70), model.menu(), losses, q);
    const BonusMalusRule& rule = sol.contract.rule();
    for (int t = 1; t <= sol.horizon(); ++t) {
        for (std::size_t s = 0; s < sol.n_states; ++s) {
            if (sol.marginals[static_cast<std::size_t>(t - 1)][s] <= 0.0) continue;
            INFO("t=" << t << " state " << rule.state_at(s).to_string());
            CHECK(sol.insure[static_cast<std::size_t>(t - 1)][s] == 1);
            CHECK(sol.mitigation[static_cast<std::size_t>(t - 1)][s] == 1);
        }
    }
    const auto occ = occupancy_summaries(sol);
    CHECK_THAT(occ.retention, WithinAbs(1.0, 1e-12));
    CHECK_THAT(occ.mitigation_years, WithinAbs(20.0, 1e-9));
    CHECK(insurer_profit(sol) <= 0.0);
}
