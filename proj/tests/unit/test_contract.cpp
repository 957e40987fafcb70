#include <catch_amalgamated.hpp>

#include <vector>

#include "cyberbm/contract.hpp"
#include "cyberbm/errors.hpp"
#include "cyberbm/experiment.hpp"

using namespace cyberbm;
using Catch::Matchers::WithinAbs;

namespace {

Contract experiment_contract(double base = 4.0) {
    return make_contract(emit_experiment_defaults(), Variant::bonus_malus, base);
}

MitigationMenu menu_with_gamma(double gamma) { return MitigationMenu({{0.0, 0.0}, {0.5, gamma}}); }

}  // namespace

TEST_CASE("mitigation menu invariants", "[contract]") {
    CHECK_THROWS_AS(MitigationMenu({}), ConfigError);
    CHECK_THROWS_AS(MitigationMenu({{0.1, 0.0}}), ConfigError);
    CHECK_THROWS_AS(MitigationMenu({{0.0, 0.0}, {-1.0, 1.0}}), ConfigError);
    const auto m = menu_with_gamma(1.0);
    CHECK(m.size() == 2);
    CHECK(m.beta(1) == 0.5);
}

TEST_CASE("aggregate loss", "[contract]") {
    const auto menu = menu_with_gamma(1.0);
    const std::vector<double> w{1.0, 2.5};
    CHECK(aggregate_loss(menu, 0, w) == 3.5);
    CHECK(aggregate_loss(menu, 1, w) == 1.5);
    CHECK(aggregate_loss(menu, 0, std::vector<double>{}) == 0.0);
    CHECK_THROWS_AS(aggregate_loss(menu, 0, std::vector<double>{-1.0}), DomainError);
}

TEST_CASE("compensation", "[contract]") {
    const Contract c = experiment_contract();
    CHECK(compensation(c, 0, 1, 0.0) == 0.0);
    CHECK(compensation(c, 0, 1, 3.0) == 2.5);
    CHECK(compensation(c, 0, 1, 2000.0) == 1000.0);
    CHECK(compensation(c, 0, 20, 3.0) == 0.0);
    double prev = 0.0;
    for (double l = 0.0; l < 1100.0; l += 0.37) {
        const double v = compensation(c, -1, 3, l);
        CHECK(v >= prev);
        CHECK(v - prev <= 0.37 + 1e-12);
        CHECK(v <= l);
        prev = v;
    }
}

TEST_CASE("experiment transition table", "[contract]") {
    const Contract contract = experiment_contract();
    const BonusMalusRule& rule = contract.rule();
    const int zero_claim[] = {-2, -2, -1, 0};
    for (int b = -2; b <= 1; ++b) {
        CHECK(rule.claim_transition(b, 0.0) == zero_claim[b + 2]);
        CHECK(rule.claim_transition(b, 1e-9) == 1);
        CHECK(rule.claim_transition(b, 500.0) == 1);
    }
    const int from_on[] = {-2, -1, 0, 1};
    const int from_off[] = {-1, 0, 0, 0};
    for (int b = -2; b <= 1; ++b) {
        CHECK(rule.inactive_transition(ContractState::insured(b)) ==
              ContractState::lapsed(from_on[b + 2], 1));
        CHECK(rule.inactive_transition(ContractState::lapsed(b, 1)) ==
              ContractState::lapsed(from_off[b + 2], 1));
        CHECK(rule.inactive_transition(ContractState::never_insured(b)) ==
              ContractState::never_insured(b));
    }
}

TEST_CASE("claim regions", "[contract]") {
    const ClaimTransition ct{-1, {{0.0, 0}, {5.0, 0}, {10.0, 1}}};
    CHECK(ct.region(-1) == Interval::closed(0.0, 0.0));
    CHECK(ct.region(0) == Interval::left_open(0.0, 10.0));
    CHECK(ct.region(1) == Interval::above(10.0));
    CHECK(ct.region(-2).is_empty());
    CHECK(ct.apply(10.0) == 0);
    CHECK(ct.apply(10.5) == 1);
    for (double c = 0.0; c < 20.0; c += 0.25) {
        CHECK(ct.region(ct.apply(c)).contains(c));
    }
}

TEST_CASE("rule validation", "[contract]") {
    const std::vector<InactiveTransition> inactive{
        {ContractState::insured(0), ContractState::lapsed(0, 1)},
        {ContractState::lapsed(0, 1), ContractState::lapsed(0, 1)}};
    CHECK_NOTHROW(BonusMalusRule(0, 0, 1, {{0, {}}}, inactive));
    // Missing inactive entry.
    CHECK_THROWS_AS(BonusMalusRule(0, 0, 1, {{0, {}}}, std::vector<InactiveTransition>{}),
                    ConfigError);
    // BM0(b, no) must be (b, no).
    auto bad = inactive;
    bad.push_back({ContractState::never_insured(0), ContractState::lapsed(0, 1)});
    CHECK_THROWS_AS(BonusMalusRule(0, 0, 1, {{0, {}}}, bad), ConfigError);
    // Decreasing claim transition.
    const std::vector<InactiveTransition> two{
        {ContractState::insured(0), ContractState::lapsed(0, 1)},
        {ContractState::lapsed(0, 1), ContractState::lapsed(0, 1)},
        {ContractState::insured(1), ContractState::lapsed(0, 1)},
        {ContractState::lapsed(1, 1), ContractState::lapsed(0, 1)}};
    CHECK_THROWS_AS(BonusMalusRule(0, 1, 1, {{1, {{0.0, 0}}}, {1, {}}}, two), ConfigError);
    // Off counter beyond the horizon.
    auto far = inactive;
    far.push_back({ContractState::insured(0), ContractState::lapsed(0, 2)});
    CHECK_THROWS_AS(BonusMalusRule(0, 0, 1, {{0, {}}}, far), ConfigError);
    // Level 0 must exist.
    CHECK_THROWS_AS(BonusMalusRule(1, 2, 1, {{1, {}}, {2, {}}}, inactive), ConfigError);
}

TEST_CASE("state indexing", "[contract]") {
    const Contract contract = experiment_contract();
    const BonusMalusRule& rule = contract.rule();
    CHECK(rule.n_status() == 22);
    CHECK(rule.n_states() == 88);
    for (std::size_t k = 0; k < 88; ++k) CHECK(rule.state_index(rule.state_at(k)) == k);
    CHECK_THROWS_AS(rule.state_index(ContractState::lapsed(0, 21)), DomainError);
}

TEST_CASE("step", "[contract]") {
    const Contract c = experiment_contract();
    const auto menu = menu_with_gamma(1.0);
    const std::vector<double> w{3.0};
    CHECK(step(c, menu, ContractState::insured(0), 5, 0, 1, 1, w) == ContractState::insured(1));
    CHECK(step(c, menu, ContractState::insured(-1), 5, 0, 1, 0, w) == ContractState::insured(-2));
    CHECK(step(c, menu, ContractState::never_insured(0), 5, 0, 0, 0, w) ==
          ContractState::never_insured(0));
    CHECK(step(c, menu, ContractState::insured(1), 5, 0, 0, 0, w) == ContractState::lapsed(1, 1));
    CHECK_THROWS_AS(step(c, menu, ContractState::insured(0), 5, 0, 0, 1, w), AdmissibilityViolation);
    // A claim with zero compensation is a zero claim.
    const std::vector<double> small{0.4};
    CHECK(step(c, menu, ContractState::insured(0), 5, 0, 1, 1, small) == ContractState::insured(-1));
    // Monotone in the claim.
    int prev = -3;
    for (double x = 0.0; x < 10.0; x += 0.1) {
        const std::vector<double> wx{x};
        const int level = step(c, menu, ContractState::insured(-1), 3, 0, 1, 1, wx).level;
        CHECK(level >= prev);
        CHECK(level >= -2);
        CHECK(level <= 1);
        prev = level;
    }
}

TEST_CASE("stage cost", "[contract]") {
    const double base = 4.2;
    const Contract c = experiment_contract(base);
    const auto menu = menu_with_gamma(1.0);
    const std::vector<double> none{};
    CHECK(stage_cost(c, menu, ContractState::never_insured(0), 1, 0, 0, 0, none) == 0.0);
    CHECK_THAT(stage_cost(c, menu, ContractState::never_insured(0), 1, 1, 1, 0, none),
               WithinAbs(0.5 + base, 1e-12));
    CHECK_THAT(c.fee_out(20), WithinAbs(8.0, 1e-12));
    const std::vector<double> w{3.0};
    CHECK_THAT(stage_cost(c, menu, ContractState::insured(0), 20, 0, 0, 0, w),
               WithinAbs(8.0 + 3.0, 1e-12));
    // Entry fee after year 16, re-entry fee from off.
    CHECK_THAT(stage_cost(c, menu, ContractState::never_insured(0), 18, 0, 1, 0, none),
               WithinAbs(base + 1.5, 1e-12));
    CHECK_THAT(stage_cost(c, menu, ContractState::lapsed(-1, 1), 3, 0, 1, 0, none),
               WithinAbs(0.8 * base + 3.0, 1e-12));
    // Claiming refunds the compensation.
    CHECK_THAT(stage_cost(c, menu, ContractState::insured(1), 3, 0, 1, 1, w),
               WithinAbs(1.5 * base + 3.0 - 2.5, 1e-12));
    CHECK_THROWS_AS(stage_cost(c, menu, ContractState::insured(0), 3, 0, 0, 1, w),
                    AdmissibilityViolation);
}

TEST_CASE("schedule validation", "[contract]") {
    auto cfg = emit_experiment_defaults();
    cfg.contract.premium_multiplier[1] = 0.5;
    CHECK_THROWS_AS(make_contract(cfg, Variant::bonus_malus, 1.0), ConfigError);
    cfg = emit_experiment_defaults();
    cfg.contract.deductible[0].pop_back();
    CHECK_THROWS_AS(make_contract(cfg, Variant::bonus_malus, 1.0), ConfigError);
}
