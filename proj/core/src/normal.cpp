#include "cyberbm/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace cyberbm {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    p = std::clamp(p, 1e-300, 1.0 - 1e-16);
    // Work in the smaller tail so that 1 - p never loses digits.
    if (p < 0.5) {
        return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    }
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

}  // namespace cyberbm
