#pragma once

namespace cyberbm {

/// Standard normal distribution function.
double normal_cdf(double x);

/// Standard normal quantile. The argument is clamped to [1e-300, 1 - 1e-16].
double normal_quantile(double p);

}  // namespace cyberbm
