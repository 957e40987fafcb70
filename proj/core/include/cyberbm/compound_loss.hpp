#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "cyberbm/mitigation.hpp"
#include "cyberbm/severity.hpp"

namespace cyberbm {

/// Annual event count distribution.
struct FrequencyModel {
    enum class Kind { poisson, fixed };

    Kind kind = Kind::poisson;
    /// Poisson rate, or the event count when kind == fixed.
    double rate = 0.0;

    static FrequencyModel poisson(double rate);
    /// N is identically `count`; used to check the single-event compound.
    static FrequencyModel fixed(unsigned count);

    std::complex<double> pgf(std::complex<double> s) const;
    double mean() const { return rate; }
};

struct DiscretizationConfig {
    double l_bar = 1e4;
    int k_gr = 20;
    double theta = 20.0 / 1048576.0;

    /// 20 / 2^k_gr.
    static double default_theta(int k_gr);
    static DiscretizationConfig with_default_theta(double l_bar, int k_gr);

    std::size_t size() const { return std::size_t{1} << k_gr; }
    double step() const { return l_bar / static_cast<double>(size() - 1); }
    void validate() const;
};

/// Finitely supported approximation of an annual aggregate loss.
class DiscreteLossDistribution {
public:
    /// Atoms must be non-negative and nondecreasing, probabilities
    /// non-negative and summing to 1 within 1e-6.
    DiscreteLossDistribution(std::vector<double> atoms, std::vector<double> probs);

    /// Atoms j * step for j = 0..probs.size()-1.
    static DiscreteLossDistribution equispaced(double step, std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> probs() const { return probs_; }
    double atom(std::size_t j) const { return atoms_[j]; }
    double prob(std::size_t j) const { return probs_[j]; }

    double mean() const;
    /// Sum of p_j over atoms a_j <= x.
    double cdf(double x) const;

    /// Debug dump with columns atom,prob.
    void write_csv(std::ostream& os) const;

private:
    std::vector<double> atoms_;
    std::vector<double> probs_;
};

/// Interval of the real line with independent endpoint strictness.
struct Interval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool lo_open = false;
    bool hi_open = true;

    static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
    static Interval left_open(double lo, double hi) { return {lo, hi, true, false}; }
    static Interval above(double lo) {
        return {lo, std::numeric_limits<double>::infinity(), true, true};
    }
    static Interval at_least(double lo) {
        return {lo, std::numeric_limits<double>::infinity(), false, true};
    }
    static Interval empty_set() { return {1.0, 0.0, true, true}; }

    bool contains(double x) const;
    bool is_empty() const;
    /// Intersection with (threshold, inf).
    Interval strictly_above(double threshold) const;

    bool operator==(const Interval&) const = default;
};

/// Insurance payout of an annual loss: min((loss - deductible)^+, cap).
inline double layer_payout(double loss, double deductible, double cap) {
    const double excess = loss - deductible;
    return excess <= 0.0 ? 0.0 : (excess < cap ? excess : cap);
}

/// Sum over atoms of p_j 1_I(payout_j) (payout_j - alpha_offset)^+.
double layer_expectation(const DiscreteLossDistribution& dist, const Interval& interval,
                         double deductible, double cap, double alpha_offset);

/// Sum over atoms of p_j 1_I(payout_j).
double layer_probability(const DiscreteLossDistribution& dist, const Interval& interval,
                         double deductible, double cap);

/// Prefix-sum backed evaluation of layer_expectation / layer_probability in
/// O(log n) per query. Payout is monotone in the atom, so every interval of
/// payouts pulls back to a contiguous run of atoms.
class LayerEvaluator {
public:
    explicit LayerEvaluator(std::shared_ptr<const DiscreteLossDistribution> dist);

    const DiscreteLossDistribution& distribution() const { return *dist_; }

    double expectation(const Interval& interval, double deductible, double cap,
                       double alpha_offset) const;
    double probability(const Interval& interval, double deductible, double cap) const;

private:
    struct Range {
        std::size_t begin = 0;
        std::size_t end = 0;
    };
    Range payout_range(const Interval& interval, double deductible, double cap) const;
    long double mass(std::size_t begin, std::size_t end) const;
    long double moment(std::size_t begin, std::size_t end) const;

    std::shared_ptr<const DiscreteLossDistribution> dist_;
    std::vector<long double> cum_prob_;
    std::vector<long double> cum_moment_;
};

/// Severity + frequency + mitigation menu: the annual loss model L(d, W).
class CompoundLossModel {
public:
    CompoundLossModel(std::shared_ptr<const Severity> severity, FrequencyModel frequency,
                      MitigationMenu menu);

    const Severity& severity() const { return *severity_; }
    std::shared_ptr<const Severity> severity_ptr() const { return severity_; }
    const FrequencyModel& frequency() const { return frequency_; }
    const MitigationMenu& menu() const { return menu_; }

    /// F_X(y + gamma(d)) for y >= 0, else 0.
    double mitigated_severity_cdf(std::size_t d, double y) const;

    /// FFT with exponential tilting. Throws NumericalInstability when an
    /// untilted probability is below -1e-8 or the total mass is off by > 1e-4.
    DiscreteLossDistribution compound_fft(std::size_t d, const DiscretizationConfig& cfg) const;

    /// Midpoint discretization of the mitigated severity on the same grid
    /// (untilted), i.e. the single-event compound.
    std::vector<double> discretized_severity(std::size_t d, const DiscretizationConfig& cfg) const;

    /// E[N] E[(X - gamma(d))^+], closed form.
    double expected_aggregate_loss(std::size_t d) const;

private:
    std::shared_ptr<const Severity> severity_;
    FrequencyModel frequency_;
    MitigationMenu menu_;
};

}  // namespace cyberbm
