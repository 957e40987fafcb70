#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/mitigation.hpp"

namespace cyberbm {

enum class Coverage { no, on, off };

/// Bonus-Malus level plus coverage status. off_years counts consecutive
/// years since leaving coverage and is 0 unless coverage == off.
struct ContractState {
    int level = 0;
    Coverage coverage = Coverage::no;
    int off_years = 0;

    static ContractState never_insured(int level) { return {level, Coverage::no, 0}; }
    static ContractState insured(int level) { return {level, Coverage::on, 0}; }
    static ContractState lapsed(int level, int years) { return {level, Coverage::off, years}; }

    std::string to_string() const;
    bool operator==(const ContractState&) const = default;
};

/// Claim amounts above `threshold` (and up to the next piece) move to `level`.
struct ClaimPiece {
    double threshold = 0.0;
    int level = 0;
    bool operator==(const ClaimPiece&) const = default;
};

/// Next level after an insured year, as a right-continuous step function of
/// the claim: claims in [0, pieces[0].threshold] go to zero_level, claims in
/// (pieces[k].threshold, pieces[k+1].threshold] go to pieces[k].level.
struct ClaimTransition {
    int zero_level = 0;
    std::vector<ClaimPiece> pieces;

    int apply(double claim) const;
    int highest_level() const;
    /// Claims c >= 0 that lead to `target`; empty when none do.
    Interval region(int target) const;

    bool operator==(const ClaimTransition&) const = default;
};

/// Explicit inactive transition BM0(from) = to.
struct InactiveTransition {
    ContractState from;
    ContractState to;
};

/// Bonus-Malus transition rules over the contiguous level range
/// [min_level, max_level] for a horizon of T years.
class BonusMalusRule {
public:
    /// `claim` holds one entry per level. Every (level, on) and (level, off_y)
    /// state needs an inactive entry; (level, no) defaults to itself.
    BonusMalusRule(int min_level, int max_level, int horizon,
                   std::vector<ClaimTransition> claim,
                   std::span<const InactiveTransition> inactive);

    int min_level() const { return min_level_; }
    int max_level() const { return max_level_; }
    int n_levels() const { return max_level_ - min_level_ + 1; }
    int horizon() const { return horizon_; }

    /// BM(b, c).
    int claim_transition(int level, double claim) const;
    const ClaimTransition& claim_rule(int level) const;
    /// BM0(b, i).
    const ContractState& inactive_transition(const ContractState& s) const;

    /// Number of coverage statuses: no, on, off_1..off_T.
    int n_status() const { return horizon_ + 2; }
    int n_states() const { return n_levels() * n_status(); }
    std::size_t state_index(const ContractState& s) const;
    ContractState state_at(std::size_t index) const;
    bool has_level(int level) const { return level >= min_level_ && level <= max_level_; }

private:
    int min_level_;
    int max_level_;
    int horizon_;
    std::vector<ClaimTransition> claim_;
    std::vector<ContractState> inactive_;
};

/// Time- and level-dependent contract terms. Tables are indexed
/// [level - min_level][t - 1] for t = 1..T.
struct ContractSchedules {
    std::vector<std::vector<double>> premium;
    std::vector<std::vector<double>> deductible;
    std::vector<std::vector<double>> max_compensation;
    std::vector<double> fee_in;
    std::vector<double> fee_out;
    double fee_re = 0.0;
    /// e^{-r}
    double discount_factor = 1.0;
};

class Contract {
public:
    Contract(BonusMalusRule rule, ContractSchedules schedules);

    const BonusMalusRule& rule() const { return rule_; }
    const ContractSchedules& schedules() const { return schedules_; }
    int horizon() const { return rule_.horizon(); }
    double discount_factor() const { return schedules_.discount_factor; }

    double premium(int level, int t) const;
    double deductible(int level, int t) const;
    double max_compensation(int level, int t) const;
    double fee_in(int t) const;
    double fee_out(int t) const;
    double fee_re() const { return schedules_.fee_re; }

    /// Premium plus entry, exit or re-entry fee owed for choosing `insure`
    /// from coverage status `coverage` in year t.
    double contract_payment(const ContractState& s, int t, int insure) const;

private:
    std::size_t level_row(int level) const;
    void check_year(int t) const;

    BonusMalusRule rule_;
    ContractSchedules schedules_;
};

/// Severities of the events of one year.
using YearLoss = std::span<const double>;

/// L(d, w) = sum_k (x_k - gamma(d))^+.
double aggregate_loss(const MitigationMenu& menu, std::size_t d, YearLoss w);

/// lambda_{b,t}(l) = min((l - dtb(b,t))^+, l_max(b,t)).
double compensation(const Contract& contract, int level, int t, double loss);

/// f_t, given the aggregate loss of the year. Throws AdmissibilityViolation
/// when a claim is requested without coverage.
ContractState step_after_loss(const Contract& contract, const ContractState& s, int t,
                              int insure, int claim, double loss);
ContractState step(const Contract& contract, const MitigationMenu& menu, const ContractState& s,
                   int t, std::size_t d, int insure, int claim, YearLoss w);

/// g_t, given the aggregate loss of the year.
double stage_cost_after_loss(const Contract& contract, const MitigationMenu& menu,
                             const ContractState& s, int t, std::size_t d, int insure, int claim,
                             double loss);
double stage_cost(const Contract& contract, const MitigationMenu& menu, const ContractState& s,
                  int t, std::size_t d, int insure, int claim, YearLoss w);

}  // namespace cyberbm
