#include "cyberbm/severity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cyberbm/errors.hpp"
#include "cyberbm/normal.hpp"

namespace cyberbm {

namespace {

constexpr int kMaxBracketExpansions = 200;
constexpr double kBisectionTolerance = 1e-13;

void require_unit_open(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("probability must lie in (0, 1), got " + std::to_string(u));
    }
}

}  // namespace

std::vector<double> Severity::sample(std::span<const double> uniform_draws) const {
    std::vector<double> out;
    out.reserve(uniform_draws.size());
    for (double u : uniform_draws) {
        out.push_back(quantile(u));
    }
    return out;
}

SeverityParams::SeverityParams(double alpha, double sigma, double g, double h)
    : alpha_(alpha), sigma_(sigma), g_(g), h_(h), f0_(0.0) {
    if (!std::isfinite(alpha)) {
        throw DomainError("g-and-h: alpha must be finite");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("g-and-h: sigma must be positive");
    }
    if (!(g > 0.0) || !std::isfinite(g)) {
        throw DomainError("g-and-h: g must be positive");
    }
    if (!(h >= 0.0 && h < 1.0)) {
        throw DomainError("g-and-h: h must lie in [0, 1)");
    }
    f0_ = normal_cdf(cyberbm::y_gh_inverse(-alpha / sigma, g, h));
    if (!(f0_ < 1.0)) {
        throw DomainError("g-and-h: no probability mass above zero");
    }
}

double y_gh(double z, double g, double h) {
    const double spread = std::exp(0.5 * h * z * z);
    if (g == 0.0) {
        return z * spread;
    }
    return std::expm1(g * z) / g * spread;
}

double y_gh_inverse(double y, double g, double h) {
    if (std::isnan(y)) {
        throw DomainError("y_gh_inverse: NaN argument");
    }
    if (y == 0.0) {
        return 0.0;
    }
    if (h == 0.0 && g > 0.0 && y <= -1.0 / g) {
        return -std::numeric_limits<double>::infinity();
    }
    if (std::isinf(y)) {
        return y;
    }

    double lo = -1.0;
    double hi = 1.0;
    int expansions = 0;
    while (y_gh(hi, g, h) < y) {
        lo = hi;
        hi *= 2.0;
        if (++expansions > kMaxBracketExpansions) {
            throw ConvergenceFailure("y_gh_inverse: cannot bracket y = " + std::to_string(y));
        }
    }
    while (y_gh(lo, g, h) > y) {
        hi = std::min(hi, lo);
        lo *= 2.0;
        if (++expansions > kMaxBracketExpansions) {
            throw ConvergenceFailure("y_gh_inverse: cannot bracket y = " + std::to_string(y));
        }
    }

    // Newton steps, falling back to bisection whenever a step leaves the bracket.
    double z = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200 && hi - lo > kBisectionTolerance; ++iter) {
        const double f = y_gh(z, g, h) - y;
        if (f == 0.0) {
            return z;
        }
        if (f < 0.0) {
            lo = z;
        } else {
            hi = z;
        }
        const double slope = std::exp(g * z + 0.5 * h * z * z) + h * z * (f + y);
        double next = z - f / slope;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - z) <= 1e-15 * std::max(1.0, std::abs(z))) {
            return next;
        }
        z = next;
    }
    return z;
}

double TruncatedGAndH::y_gh(double z) const {
    return cyberbm::y_gh(z, params_.g(), params_.h());
}

double TruncatedGAndH::y_gh_inverse(double y) const {
    return cyberbm::y_gh_inverse(y, params_.g(), params_.h());
}

double TruncatedGAndH::cdf_raw(double x) const {
    return normal_cdf(y_gh_inverse((x - params_.alpha()) / params_.sigma()));
}

double TruncatedGAndH::survival(double x) const {
    if (!(x > 0.0)) {
        return 1.0;
    }
    const double z = y_gh_inverse((x - params_.alpha()) / params_.sigma());
    return std::clamp(normal_cdf(-z) / (1.0 - params_.f0()), 0.0, 1.0);
}

double TruncatedGAndH::cdf_truncated(double x) const {
    if (!(x > 0.0)) {
        return 0.0;
    }
    const double z = y_gh_inverse((x - params_.alpha()) / params_.sigma());
    const double mass = 1.0 - params_.f0();
    double value = 0.0;
    if (z <= 0.0) {
        value = (normal_cdf(z) - params_.f0()) / mass;
    } else {
        value = 1.0 - normal_cdf(-z) / mass;
    }
    return std::clamp(value, 0.0, 1.0);
}

double TruncatedGAndH::quantile_truncated(double u) const {
    require_unit_open(u);
    const double f0 = params_.f0();
    const double p = u + (1.0 - u) * f0;
    double z = 0.0;
    if (p > 0.5) {
        z = -normal_quantile((1.0 - u) * (1.0 - f0));
    } else {
        z = normal_quantile(p);
    }
    return params_.alpha() + params_.sigma() * y_gh(z);
}

std::vector<double> TruncatedGAndH::sample_truncated(std::span<const double> uniform_draws) const {
    return sample(uniform_draws);
}

double TruncatedGAndH::stop_loss(double gamma) const {
    if (!(gamma >= 0.0)) {
        throw DomainError("stop_loss: gamma must be non-negative");
    }
    if (std::isinf(gamma)) {
        return 0.0;
    }
    const double alpha = params_.alpha();
    const double sigma = params_.sigma();
    const double g = params_.g();
    const double k = 1.0 - params_.h();
    const double sk = std::sqrt(k);
    const double mass = 1.0 - params_.f0();
    const double z = y_gh_inverse((gamma - alpha) / sigma);

    const double bracket = std::exp(g * g / (2.0 * k)) * normal_cdf((g / k - z) * sk) -
                           normal_cdf(-z * sk);
    const double value =
        sigma / (mass * g * sk) * bracket + (alpha - gamma) * normal_cdf(-z) / mass;
    return std::max(value, 0.0);
}

double TruncatedGAndH::second_moment() const {
    if (!(params_.h() < 0.5)) {
        throw DomainError("second moment requires h < 1/2");
    }
    const double alpha = params_.alpha();
    const double sigma = params_.sigma();
    const double z0 = y_gh_inverse(-alpha / sigma);
    const double g = params_.g();
    const double h = params_.h();
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    // x^2 phi(z) overflows term by term for large z; go through logs there.
    auto integrand = [&](double z) {
        if (z < 5.0) {
            const double x = alpha + sigma * y_gh(z);
            return x * x * std::exp(-0.5 * z * z - log_norm);
        }
        const double log_core = g > 0.0 ? g * z + std::log(-std::expm1(-g * z)) - std::log(g)
                                        : std::log(z);
        const double log_y = std::log(sigma) + log_core + 0.5 * h * z * z;
        const double log_x = log_y + std::log1p(alpha * std::exp(-log_y));
        return std::exp(2.0 * log_x - 0.5 * z * z - log_norm);
    };
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, z0, std::numeric_limits<double>::infinity(), 30, 1e-11, &error);
    return value / (1.0 - params_.f0());
}

std::string TruncatedGAndH::describe() const {
    std::ostringstream os;
    os << "tr-g-and-h(alpha=" << params_.alpha() << ", sigma=" << params_.sigma()
       << ", g=" << params_.g() << ", h=" << params_.h() << ")";
    return os.str();
}

Lognormal::Lognormal(LognormalParams params) : params_(params) {
    if (!(params.s > 0.0) || !std::isfinite(params.s) || !std::isfinite(params.mu)) {
        throw DomainError("log-normal: s must be positive and mu finite");
    }
}

double Lognormal::cdf(double x) const {
    if (!(x > 0.0)) {
        return 0.0;
    }
    return normal_cdf((std::log(x) - params_.mu) / params_.s);
}

double Lognormal::survival(double x) const {
    if (!(x > 0.0)) {
        return 1.0;
    }
    return normal_cdf(-(std::log(x) - params_.mu) / params_.s);
}

double Lognormal::quantile(double u) const {
    require_unit_open(u);
    return std::exp(params_.mu + params_.s * normal_quantile(u));
}

double Lognormal::stop_loss_expectation(double gamma) const {
    if (!(gamma >= 0.0)) {
        throw DomainError("stop_loss: gamma must be non-negative");
    }
    const double mu = params_.mu;
    const double s = params_.s;
    const double mean = std::exp(mu + 0.5 * s * s);
    if (gamma == 0.0) {
        return mean;
    }
    if (std::isinf(gamma)) {
        return 0.0;
    }
    const double lg = std::log(gamma);
    const double value =
        mean * normal_cdf((mu + s * s - lg) / s) - gamma * normal_cdf((mu - lg) / s);
    return std::max(value, 0.0);
}

double Lognormal::second_moment() const {
    return std::exp(2.0 * params_.mu + 2.0 * params_.s * params_.s);
}

std::string Lognormal::describe() const {
    std::ostringstream os;
    os << "lognormal(mu=" << params_.mu << ", s=" << params_.s << ")";
    return os.str();
}

LognormalParams lognormal_moment_match(const TruncatedGAndH& severity) {
    if (!(severity.params().h() < 0.5)) {
        throw DomainError("moment matching requires h < 1/2");
    }
    const double m1 = severity.stop_loss(0.0);
    const double m2 = severity.second_moment();
    const double s2 = std::log(m2 / (m1 * m1));
    if (!(s2 > 0.0)) {
        throw DomainError("moment matching: second moment does not exceed squared mean");
    }
    return LognormalParams{std::log(m1) - 0.5 * s2, std::sqrt(s2)};
}

}  // namespace cyberbm
