#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/contract.hpp"
#include "cyberbm/mitigation.hpp"

namespace cyberbm {

/// Annual loss L(d, W) under one mitigation measure.
struct MitigatedLoss {
    std::shared_ptr<const LayerEvaluator> layers;
    double expected_loss = 0.0;   ///< E[L(d, W)]
    double expected_gross = 0.0;  ///< E[sum_k X_k], independent of d
};

/// One MitigatedLoss per measure of the menu, shared by every solve.
struct LossModel {
    std::vector<MitigatedLoss> measures;

    /// Runs the FFT once per measure. Expected losses use the closed form.
    static LossModel from_compound(const CompoundLossModel& model,
                                   const DiscretizationConfig& cfg);
    /// Uses the given distributions of L(d, W) directly; the gross loss is
    /// taken as the mean under measure 0.
    static LossModel from_distributions(std::vector<DiscreteLossDistribution> dists);

    std::size_t size() const { return measures.size(); }
};

/// Claim interval L_t(b, b'): compensations c with BM(b, c) = b' and c > alpha.
struct ClaimInterval {
    int target_level = 0;
    double alpha = 0.0;
    Interval claims;
};

/// Inputs available to a quantity-of-interest evaluator at (t, b, i).
struct StageContext {
    const Contract& contract;
    const MitigationMenu& menu;
    const LossModel& losses;
    int year;
    ContractState state;
    std::size_t mitigation;
    int insure;
    std::span<const ClaimInterval> claims;
    /// e^{-(t-1) r}
    double discount;
};

/// zeta_t: closed-form expectation over W of a per-year quantity.
struct QuantityOfInterest {
    std::string name;
    std::function<double(const StageContext&)> expected;
};

namespace qoi {
inline constexpr const char* mitigation_spend = "mitigation_spend";
inline constexpr const char* payments_to_insurer = "payments_to_insurer";
inline constexpr const char* loss_prevented = "loss_prevented";
inline constexpr const char* compensation_received = "compensation_received";
/// "adopt_measure_<d>"
std::string adoption(std::size_t d);
}  // namespace qoi

/// Adoption indicators for every measure, then mitigation spend, payments to
/// the insurer, loss prevented and compensation received.
std::vector<QuantityOfInterest> standard_quantities(const MitigationMenu& menu);

/// Output of the backward induction. Year-indexed tables use t - 1 for
/// t = 1..T, except values and marginals which are indexed by t = 0..T.
struct PolicySolution {
    Contract contract;
    std::size_t n_states = 0;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<int>> mitigation;
    std::vector<std::vector<int>> insure;
    /// [t - 1][level - min_level]
    std::vector<std::vector<std::vector<ClaimInterval>>> claim_intervals;
    /// [t - 1], row-major n_states x n_states
    std::vector<std::vector<double>> kernels;
    std::vector<std::vector<double>> marginals;
    std::vector<std::string> qoi_names;
    /// [m][t - 1]
    std::vector<std::vector<double>> qoi_per_year;
    std::vector<double> qoi_aggregate;

    int horizon() const { return contract.horizon(); }
    std::size_t index(const ContractState& s) const { return contract.rule().state_index(s); }

    /// V_0(0, no)
    double optimal_value() const;
    double value(int t, const ContractState& s) const;
    int mitigation_at(int t, const ContractState& s) const;
    int insure_at(int t, const ContractState& s) const;
    std::span<const ClaimInterval> claims_at(int t, int level) const;
    double kernel(int t, const ContractState& from, const ContractState& to) const;
    double marginal(int t, const ContractState& s) const;
    /// Index of a quantity of interest, or -1.
    int find_qoi(const std::string& name) const;
};

PolicySolution solve(const Contract& contract, const MitigationMenu& menu,
                     const LossModel& losses, std::span<const QuantityOfInterest> quantities);

/// j_t(b, i, w) for the year's aggregate loss.
int claim_rule(const PolicySolution& solution, const ContractState& s, int t, double loss);

struct OccupancySummary {
    /// P(insured in year t), t = 1..T
    std::vector<double> insured_probability;
    double retention = 0.0;
    /// Expected insured years spent at each level, min_level first.
    std::vector<double> years_per_level;
    double years_uninsured = 0.0;
    double mitigation_years = 0.0;
};

OccupancySummary occupancy_summaries(const PolicySolution& solution);

/// Discounted payments to the insurer minus discounted compensation.
double insurer_profit(const PolicySolution& solution);

}  // namespace cyberbm
