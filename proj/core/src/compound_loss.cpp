#include "cyberbm/compound_loss.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <fftw3.h>

#include "cyberbm/errors.hpp"

namespace cyberbm {

namespace {

constexpr double kNegativeTolerance = 1e-8;
constexpr double kMassTolerance = 1e-4;

// The FFTW planner is not thread safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
        if (data == nullptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* data;
};

void run_inplace_fft(fftw_complex* data, std::size_t n, int sign) {
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), data, data, sign, FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw NumericalInstability("FFTW could not create a plan");
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

// First index in [0, n) for which pred fails, assuming pred is true on a prefix.
template <typename Pred>
std::size_t first_failing(std::size_t n, Pred pred) {
    std::size_t lo = 0;
    std::size_t hi = n;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo;
}

bool below_upper(const Interval& in, double x) { return in.hi_open ? x < in.hi : x <= in.hi; }
bool below_lower(const Interval& in, double x) { return in.lo_open ? x <= in.lo : x < in.lo; }

}  // namespace

FrequencyModel FrequencyModel::poisson(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
        throw DomainError("Poisson rate must be finite and >= 0");
    }
    return {Kind::poisson, rate};
}

FrequencyModel FrequencyModel::fixed(unsigned count) {
    return {Kind::fixed, static_cast<double>(count)};
}

std::complex<double> FrequencyModel::pgf(std::complex<double> s) const {
    if (kind == Kind::fixed) return std::pow(s, static_cast<int>(rate));
    return std::exp(rate * (s - 1.0));
}

double DiscretizationConfig::default_theta(int k_gr) {
    return 20.0 / std::ldexp(1.0, k_gr);
}

DiscretizationConfig DiscretizationConfig::with_default_theta(double l_bar, int k_gr) {
    return {l_bar, k_gr, default_theta(k_gr)};
}

void DiscretizationConfig::validate() const {
    if (!(l_bar > 0.0) || !std::isfinite(l_bar)) {
        throw ConfigError("discretization.l_bar: must be finite and > 0");
    }
    if (k_gr < 1 || k_gr > 28) throw ConfigError("discretization.k_gr: must lie in [1, 28]");
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
        throw ConfigError("discretization.theta: must be finite and >= 0");
    }
}

DiscreteLossDistribution::DiscreteLossDistribution(std::vector<double> atoms,
                                                   std::vector<double> probs)
    : atoms_(std::move(atoms)), probs_(std::move(probs)) {
    if (atoms_.size() != probs_.size() || atoms_.empty()) {
        throw DomainError("atoms and probabilities must be non-empty and of equal length");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        if (!(atoms_[j] >= 0.0) || (j > 0 && atoms_[j] < atoms_[j - 1])) {
            throw DomainError("atoms must be non-negative and nondecreasing");
        }
        if (!(probs_[j] >= 0.0)) throw DomainError("probabilities must be non-negative");
        total += probs_[j];
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw DomainError("probabilities sum to " + std::to_string(total));
    }
}

DiscreteLossDistribution DiscreteLossDistribution::equispaced(double step,
                                                              std::vector<double> probs) {
    std::vector<double> atoms(probs.size());
    for (std::size_t j = 0; j < atoms.size(); ++j) atoms[j] = static_cast<double>(j) * step;
    return DiscreteLossDistribution(std::move(atoms), std::move(probs));
}

double DiscreteLossDistribution::mean() const {
    long double m = 0.0L;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        m += static_cast<long double>(atoms_[j]) * probs_[j];
    }
    return static_cast<double>(m);
}

double DiscreteLossDistribution::cdf(double x) const {
    const auto end = std::upper_bound(atoms_.begin(), atoms_.end(), x) - atoms_.begin();
    long double s = 0.0L;
    for (std::ptrdiff_t j = 0; j < end; ++j) s += probs_[static_cast<std::size_t>(j)];
    return std::min(1.0, static_cast<double>(s));
}

void DiscreteLossDistribution::write_csv(std::ostream& os) const {
    os << "atom,prob\n";
    os.precision(17);
    for (std::size_t j = 0; j < atoms_.size(); ++j) os << atoms_[j] << ',' << probs_[j] << '\n';
}

bool Interval::contains(double x) const {
    return !below_lower(*this, x) && below_upper(*this, x);
}

bool Interval::is_empty() const {
    if (lo < hi) return false;
    if (lo > hi) return true;
    return lo_open || hi_open;
}

Interval Interval::strictly_above(double threshold) const {
    Interval out = *this;
    if (threshold >= lo) {
        out.lo = threshold;
        out.lo_open = true;
    }
    return out;
}

double layer_expectation(const DiscreteLossDistribution& dist, const Interval& interval,
                         double deductible, double cap, double alpha_offset) {
    double s = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        const double lam = layer_payout(dist.atom(j), deductible, cap);
        if (interval.contains(lam) && lam > alpha_offset) {
            s += dist.prob(j) * (lam - alpha_offset);
        }
    }
    return s;
}

double layer_probability(const DiscreteLossDistribution& dist, const Interval& interval,
                         double deductible, double cap) {
    double s = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        if (interval.contains(layer_payout(dist.atom(j), deductible, cap))) s += dist.prob(j);
    }
    return s;
}

LayerEvaluator::LayerEvaluator(std::shared_ptr<const DiscreteLossDistribution> dist)
    : dist_(std::move(dist)) {
    if (!dist_) throw DomainError("LayerEvaluator needs a distribution");
    const std::size_t n = dist_->size();
    cum_prob_.assign(n + 1, 0.0L);
    cum_moment_.assign(n + 1, 0.0L);
    for (std::size_t j = 0; j < n; ++j) {
        const long double p = dist_->prob(j);
        cum_prob_[j + 1] = cum_prob_[j] + p;
        cum_moment_[j + 1] = cum_moment_[j] + p * static_cast<long double>(dist_->atom(j));
    }
}

long double LayerEvaluator::mass(std::size_t begin, std::size_t end) const {
    return begin < end ? cum_prob_[end] - cum_prob_[begin] : 0.0L;
}

long double LayerEvaluator::moment(std::size_t begin, std::size_t end) const {
    return begin < end ? cum_moment_[end] - cum_moment_[begin] : 0.0L;
}

LayerEvaluator::Range LayerEvaluator::payout_range(const Interval& interval, double deductible,
                                                   double cap) const {
    const auto atoms = dist_->atoms();
    const auto payout = [&](std::size_t j) { return layer_payout(atoms[j], deductible, cap); };
    Range r;
    r.begin = first_failing(atoms.size(),
                            [&](std::size_t j) { return below_lower(interval, payout(j)); });
    r.end = first_failing(atoms.size(),
                          [&](std::size_t j) { return below_upper(interval, payout(j)); });
    if (r.end < r.begin) r.end = r.begin;
    return r;
}

double LayerEvaluator::expectation(const Interval& interval, double deductible, double cap,
                                   double alpha_offset) const {
    const Range r = payout_range(interval.strictly_above(alpha_offset), deductible, cap);
    if (r.begin >= r.end) return 0.0;
    const auto atoms = dist_->atoms();
    // Zones of constant payout shape: zero, linear in the atom, capped.
    const std::size_t zero_end =
        first_failing(atoms.size(), [&](std::size_t j) { return atoms[j] - deductible <= 0.0; });
    std::size_t cap_begin =
        first_failing(atoms.size(), [&](std::size_t j) { return atoms[j] - deductible < cap; });
    cap_begin = std::max(cap_begin, zero_end);

    const auto clip = [&](std::size_t lo, std::size_t hi) {
        return Range{std::max(lo, r.begin), std::min(hi, r.end)};
    };
    const long double alpha = alpha_offset;
    long double total = 0.0L;
    if (const Range z = clip(0, zero_end); z.begin < z.end) {
        total += (0.0L - alpha) * mass(z.begin, z.end);
    }
    if (const Range z = clip(zero_end, cap_begin); z.begin < z.end) {
        total += moment(z.begin, z.end) -
                 (static_cast<long double>(deductible) + alpha) * mass(z.begin, z.end);
    }
    if (const Range z = clip(cap_begin, atoms.size()); z.begin < z.end) {
        total += (static_cast<long double>(cap) - alpha) * mass(z.begin, z.end);
    }
    return std::max(0.0, static_cast<double>(total));
}

double LayerEvaluator::probability(const Interval& interval, double deductible,
                                   double cap) const {
    const Range r = payout_range(interval, deductible, cap);
    return std::clamp(static_cast<double>(mass(r.begin, r.end)), 0.0, 1.0);
}

CompoundLossModel::CompoundLossModel(std::shared_ptr<const Severity> severity,
                                     FrequencyModel frequency, MitigationMenu menu)
    : severity_(std::move(severity)), frequency_(frequency), menu_(std::move(menu)) {
    if (!severity_) throw DomainError("CompoundLossModel needs a severity");
}

double CompoundLossModel::mitigated_severity_cdf(std::size_t d, double y) const {
    if (y < 0.0) return 0.0;
    return severity_->cdf(y + menu_.gamma(d));
}

std::vector<double> CompoundLossModel::discretized_severity(
    std::size_t d, const DiscretizationConfig& cfg) const {
    cfg.validate();
    const std::size_t n = cfg.size();
    const double eps = cfg.step();
    std::vector<double> f(n);
    double prev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double upper = mitigated_severity_cdf(d, (static_cast<double>(j) + 0.5) * eps);
        f[j] = std::max(0.0, upper - prev);
        prev = upper;
    }
    return f;
}

DiscreteLossDistribution CompoundLossModel::compound_fft(std::size_t d,
                                                         const DiscretizationConfig& cfg) const {
    const std::vector<double> f = discretized_severity(d, cfg);
    const std::size_t n = f.size();
    const double theta = cfg.theta;

    FftwBuffer buf(n);
    for (std::size_t j = 0; j < n; ++j) {
        buf.data[j][0] = std::exp(-static_cast<double>(j) * theta) * f[j];
        buf.data[j][1] = 0.0;
    }
    run_inplace_fft(buf.data, n, FFTW_BACKWARD);
    for (std::size_t k = 0; k < n; ++k) {
        const std::complex<double> g =
            frequency_.pgf(std::complex<double>(buf.data[k][0], buf.data[k][1]));
        buf.data[k][0] = g.real();
        buf.data[k][1] = g.imag();
    }
    run_inplace_fft(buf.data, n, FFTW_FORWARD);

    std::vector<double> p(n);
    const double scale = 1.0 / static_cast<double>(n);
    double most_negative = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = std::exp(static_cast<double>(j) * theta) * buf.data[j][0] * scale;
        most_negative = std::min(most_negative, p[j]);
    }
    if (most_negative < -kNegativeTolerance) {
        std::ostringstream msg;
        msg << "compound_fft: probability " << most_negative << " below -" << kNegativeTolerance
            << " (theta=" << theta << ", K_gr=" << cfg.k_gr << ")";
        throw NumericalInstability(msg.str());
    }
    long double total = 0.0L;
    for (double& x : p) {
        if (x < 0.0) x = 0.0;
        total += x;
    }
    const double deficit = static_cast<double>(1.0L - total);
    if (std::abs(deficit) > kMassTolerance) {
        throw NumericalInstability("compound_fft: total mass deviates from 1 by " +
                                   std::to_string(-deficit));
    }
    const double s = static_cast<double>(total);
    for (double& x : p) x /= s;
    return DiscreteLossDistribution::equispaced(cfg.step(), std::move(p));
}

double CompoundLossModel::expected_aggregate_loss(std::size_t d) const {
    return frequency_.mean() * severity_->stop_loss_expectation(menu_.gamma(d));
}

}  // namespace cyberbm
