#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/contract.hpp"
#include "cyberbm/dp_solver.hpp"
#include "cyberbm/mitigation.hpp"
#include "cyberbm/severity.hpp"

namespace cyberbm {

struct SimulationConfig {
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    /// Must match the contract horizon.
    int horizon = 0;
    unsigned workers = 1;
    /// Keep per-year state frequencies (needs n_states * T counters).
    bool track_states = true;
};

/// Exact continuous loss model used to generate years.
struct LossSampler {
    std::shared_ptr<const Severity> severity;
    FrequencyModel frequency;
};

struct PathYear {
    int year = 0;
    ContractState before;
    int mitigation = 0;
    int insure = 0;
    int events = 0;
    double gross_loss = 0.0;
    double loss = 0.0;
    int claim = 0;
    double compensation = 0.0;
    double cost = 0.0;
    ContractState after;
};

struct PathRecord {
    std::vector<PathYear> years;
    /// sum_t e^{-t r} g_t
    double discounted_cost = 0.0;
};

struct SimulationStats {
    std::size_t n_paths = 0;
    double mean = 0.0;
    double standard_error = 0.0;
    /// [t][state] fraction of paths in each state after year t, t = 0..T.
    std::vector<std::vector<double>> state_frequency;
};

/// Claim decision for (state, year, aggregate loss).
using ClaimDecider = std::function<int(const ContractState&, int, double)>;

/// Explicit decision tables indexed [t - 1][state index].
struct DecisionTables {
    std::vector<std::vector<int>> mitigation;
    std::vector<std::vector<int>> insure;
    ClaimDecider claim;
};

/// The DP's decisions, with claims taken from claim_rule.
DecisionTables decision_tables(const PolicySolution& solution);

SimulationStats simulate(const PolicySolution& solution, const MitigationMenu& menu,
                         const LossSampler& sampler, const SimulationConfig& cfg);

/// Throws AdmissibilityViolation when the tables claim while uninsured.
SimulationStats evaluate_fixed_policy(const Contract& contract, const MitigationMenu& menu,
                                      const DecisionTables& policy, const LossSampler& sampler,
                                      const SimulationConfig& cfg);

/// Full per-year records of the first n_paths paths (same streams as simulate).
std::vector<PathRecord> trace_paths(const Contract& contract, const MitigationMenu& menu,
                                    const DecisionTables& policy, const LossSampler& sampler,
                                    const SimulationConfig& cfg);

/// One row per path-year.
void write_trace_csv(std::ostream& os, const std::vector<PathRecord>& paths);

/// Independent 64-bit stream seed for a path.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

}  // namespace cyberbm
