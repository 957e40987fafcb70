#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cyberbm/severity.hpp"

namespace cyberbm::oracle {

/// Sorted draws of sum_k (X_k - gamma)^+ with N ~ Poisson(rate).
std::vector<double> sample_compound_poisson(const Severity& severity, double rate, double gamma,
                                            std::size_t n, std::uint64_t seed);

/// Fraction of sorted draws <= x.
double empirical_cdf(const std::vector<double>& sorted, double x);

}  // namespace cyberbm::oracle
