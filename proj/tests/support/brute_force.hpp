#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/contract.hpp"
#include "cyberbm/mitigation.hpp"

namespace cyberbm::oracle {

/// Contract plus a finitely supported annual loss L(d, W) per measure.
struct TinyInstance {
    Contract contract;
    MitigationMenu menu;
    std::vector<DiscreteLossDistribution> losses;
};

/// Optimal expected discounted cost from (0, no), minimizing over all
/// history-dependent policies by expectimin over the full history tree.
/// Uses only contract_model's step and stage cost.
double expectimin_value(const TinyInstance& inst);

struct EnumerationResult {
    double best = 0.0;
    std::size_t n_policies = 0;
};

/// Lists every deterministic history-dependent admissible policy explicitly
/// and evaluates each one. Only feasible for T <= 2 and two atoms.
EnumerationResult enumerate_policies(const TinyInstance& inst);

/// Random instance with T <= max_horizon, <= max_atoms atoms, <= max_levels
/// levels and two mitigation measures.
TinyInstance random_instance(std::mt19937_64& rng, int max_horizon, int max_atoms,
                             int max_levels);

}  // namespace cyberbm::oracle
