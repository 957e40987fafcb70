#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cyberbm {

/// Per-event loss amount distribution on (0, inf).
class Severity {
public:
    virtual ~Severity() = default;

    virtual double cdf(double x) const = 0;
    /// 1 - cdf(x), without cancellation in the upper tail where overridden.
    virtual double survival(double x) const { return 1.0 - cdf(x); }
    /// Inverse distribution function; u must lie in (0, 1).
    virtual double quantile(double u) const = 0;
    /// E[(X - gamma)^+] for gamma >= 0.
    virtual double stop_loss_expectation(double gamma) const = 0;
    virtual std::string describe() const = 0;

    double mean() const { return stop_loss_expectation(0.0); }

    /// Applies the quantile elementwise to the supplied uniform draws.
    std::vector<double> sample(std::span<const double> uniform_draws) const;
};

/// Parameters of the g-and-h transform of a standard normal, with the
/// untruncated probability of a non-positive value cached as f0.
class SeverityParams {
public:
    SeverityParams(double alpha, double sigma, double g, double h);

    double alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    double g() const { return g_; }
    double h() const { return h_; }
    double f0() const { return f0_; }

private:
    double alpha_;
    double sigma_;
    double g_;
    double h_;
    double f0_;
};

/// (exp(g z) - 1) / g * exp(h z^2 / 2).
double y_gh(double z, double g, double h);

/// Inverse of y_gh by bracketed bisection. Returns -inf for targets below the
/// range of y_gh (only possible when h == 0, where the range is (-1/g, inf)).
double y_gh_inverse(double y, double g, double h);

/// g-and-h distribution conditioned on positivity.
class TruncatedGAndH final : public Severity {
public:
    explicit TruncatedGAndH(SeverityParams params) : params_(params) {}
    TruncatedGAndH(double alpha, double sigma, double g, double h)
        : params_(alpha, sigma, g, h) {}

    const SeverityParams& params() const { return params_; }

    double y_gh(double z) const;
    double y_gh_inverse(double y) const;

    /// Distribution function of the untruncated variable.
    double cdf_raw(double x) const;
    double cdf_truncated(double x) const;
    double quantile_truncated(double u) const;
    std::vector<double> sample_truncated(std::span<const double> uniform_draws) const;

    /// Closed form of E[(X - gamma)^+]; requires h < 1.
    double stop_loss(double gamma) const;

    /// E[X^2] by adaptive quadrature in the normal variable; requires h < 1/2.
    double second_moment() const;

    double cdf(double x) const override { return cdf_truncated(x); }
    double survival(double x) const override;
    double quantile(double u) const override { return quantile_truncated(u); }
    double stop_loss_expectation(double gamma) const override { return stop_loss(gamma); }
    std::string describe() const override;

private:
    SeverityParams params_;
};

struct LognormalParams {
    double mu = 0.0;
    double s = 1.0;
};

class Lognormal final : public Severity {
public:
    explicit Lognormal(LognormalParams params);

    const LognormalParams& params() const { return params_; }

    double cdf(double x) const override;
    double survival(double x) const override;
    double quantile(double u) const override;
    double stop_loss_expectation(double gamma) const override;
    std::string describe() const override;

    double second_moment() const;

private:
    LognormalParams params_;
};

/// Log-normal with the same first two moments as the truncated g-and-h.
/// Throws DomainError when h >= 1/2 (no finite second moment).
LognormalParams lognormal_moment_match(const TruncatedGAndH& severity);

}  // namespace cyberbm
