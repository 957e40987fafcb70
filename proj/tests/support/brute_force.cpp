#include "brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace cyberbm::oracle {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Cost of the remaining years from `s` at year t along one history.
double tree_value(const TinyInstance& inst, int t, const ContractState& s) {
    const Contract& c = inst.contract;
    if (t > c.horizon()) return 0.0;
    const double delta = c.discount_factor();
    double best = inf;
    for (std::size_t d = 0; d < inst.menu.size(); ++d) {
        const DiscreteLossDistribution& dist = inst.losses[d];
        for (int iota = 0; iota <= 1; ++iota) {
            double expected = 0.0;
            for (std::size_t a = 0; a < dist.size(); ++a) {
                const double loss = dist.atom(a);
                double branch = inf;
                for (int j = 0; j <= iota; ++j) {
                    const double g = stage_cost_after_loss(c, inst.menu, s, t, d, iota, j, loss);
                    const ContractState next = step_after_loss(c, s, t, iota, j, loss);
                    branch = std::min(branch, delta * (g + tree_value(inst, t + 1, next)));
                }
                expected += dist.prob(a) * branch;
            }
            best = std::min(best, expected);
        }
    }
    return best;
}

// A one-year decision: mitigation, coverage and a claim flag per atom.
struct YearDecision {
    std::size_t d = 0;
    int iota = 0;
    std::vector<int> claims;
};

std::vector<YearDecision> year_decisions(const TinyInstance& inst) {
    std::vector<YearDecision> out;
    const std::size_t atoms = inst.losses.front().size();
    for (std::size_t d = 0; d < inst.menu.size(); ++d) {
        out.push_back({d, 0, std::vector<int>(atoms, 0)});
        for (std::size_t mask = 0; mask < (std::size_t{1} << atoms); ++mask) {
            std::vector<int> claims(atoms);
            for (std::size_t a = 0; a < atoms; ++a) claims[a] = static_cast<int>((mask >> a) & 1U);
            out.push_back({d, 1, claims});
        }
    }
    return out;
}

}  // namespace

double expectimin_value(const TinyInstance& inst) {
    return tree_value(inst, 1, ContractState::never_insured(0));
}

EnumerationResult enumerate_policies(const TinyInstance& inst) {
    const Contract& c = inst.contract;
    const int T = c.horizon();
    const std::size_t atoms = inst.losses.front().size();
    for (const auto& dist : inst.losses) {
        if (dist.size() != atoms) return {inf, 0};
    }
    if (T > 2 || atoms > 2) return {inf, 0};

    const std::vector<YearDecision> choices = year_decisions(inst);
    const double delta = c.discount_factor();
    const ContractState start = ContractState::never_insured(0);
    EnumerationResult result{inf, 0};

    // Year-1 decision, then (for T = 2) one decision per year-1 atom, since the
    // history after year 1 is determined by the atom that occurred.
    const std::size_t K = choices.size();
    const std::size_t followups = T == 2 ? atoms : 0;
    std::size_t combos = 1;
    for (std::size_t k = 0; k < followups; ++k) combos *= K;

    for (const YearDecision& first : choices) {
        const DiscreteLossDistribution& dist1 = inst.losses[first.d];
        for (std::size_t code = 0; code < combos; ++code) {
            double cost = 0.0;
            std::size_t rest = code;
            for (std::size_t a = 0; a < dist1.size(); ++a) {
                const double loss = dist1.atom(a);
                const int j = first.claims[a];
                double path = delta * stage_cost_after_loss(c, inst.menu, start, 1, first.d,
                                                            first.iota, j, loss);
                if (T == 2) {
                    const YearDecision& second = choices[rest % K];
                    rest /= K;
                    const ContractState s = step_after_loss(c, start, 1, first.iota, j, loss);
                    const DiscreteLossDistribution& dist2 = inst.losses[second.d];
                    for (std::size_t b = 0; b < dist2.size(); ++b) {
                        path += dist2.prob(b) * delta * delta *
                                stage_cost_after_loss(c, inst.menu, s, 2, second.d, second.iota,
                                                      second.claims[b], dist2.atom(b));
                    }
                }
                cost += dist1.prob(a) * path;
            }
            ++result.n_policies;
            result.best = std::min(result.best, cost);
        }
    }
    return result;
}

TinyInstance random_instance(std::mt19937_64& rng, int max_horizon, int max_atoms,
                             int max_levels) {
    const auto uniform_int = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    const auto uniform = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const auto round_quarter = [](double x) { return std::round(x * 4.0) / 4.0; };

    const int T = uniform_int(1, max_horizon);
    const int n_levels = uniform_int(1, max_levels);
    const int min_level = -uniform_int(0, n_levels - 1);
    const int max_level = min_level + n_levels - 1;
    const int n_atoms = uniform_int(1, max_atoms);

    // Measure 0 loss atoms; measure 1 shifts every atom down by gamma.
    std::vector<double> atoms(static_cast<std::size_t>(n_atoms));
    for (double& a : atoms) a = round_quarter(uniform(0.0, 12.0));
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> probs(atoms.size());
    double total = 0.0;
    for (double& p : probs) total += (p = uniform(0.1, 1.0));
    for (double& p : probs) p /= total;
    const double gamma = round_quarter(uniform(0.0, 4.0));
    std::vector<double> mitigated(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) mitigated[k] = std::max(atoms[k] - gamma, 0.0);

    std::vector<DiscreteLossDistribution> losses;
    losses.emplace_back(atoms, probs);
    losses.emplace_back(mitigated, probs);
    MitigationMenu menu({{0.0, 0.0}, {round_quarter(uniform(0.0, 3.0)), gamma}});

    std::vector<ClaimTransition> claim;
    for (int b = min_level; b <= max_level; ++b) {
        ClaimTransition ct;
        ct.zero_level = uniform_int(min_level, b);
        int level = ct.zero_level;
        double threshold = 0.0;
        for (int k = uniform_int(0, 2); k > 0; --k) {
            level = uniform_int(level, max_level);
            ct.pieces.push_back({threshold, level});
            threshold += round_quarter(uniform(0.25, 5.0));
        }
        claim.push_back(ct);
    }
    std::vector<InactiveTransition> inactive;
    for (int b = min_level; b <= max_level; ++b) {
        inactive.push_back({ContractState::insured(b),
                            ContractState::lapsed(uniform_int(min_level, max_level), 1)});
        for (int y = 1; y <= T; ++y) {
            const int next_y = uniform_int(0, 1) == 0 ? 1 : std::min(y + 1, T);
            inactive.push_back({ContractState::lapsed(b, y),
                                ContractState::lapsed(uniform_int(min_level, max_level), next_y)});
        }
    }

    ContractSchedules sched;
    const auto year_row = [&](double lo, double hi) {
        std::vector<double> row(static_cast<std::size_t>(T));
        for (double& x : row) x = round_quarter(uniform(lo, hi));
        return row;
    };
    std::vector<double> base = year_row(0.0, 6.0);
    for (int b = min_level; b <= max_level; ++b) {
        sched.premium.push_back(base);
        for (double& p : base) p += round_quarter(uniform(0.0, 2.0));
        sched.deductible.push_back(year_row(0.0, 2.0));
        sched.max_compensation.push_back(year_row(1.0, 10.0));
    }
    sched.fee_in = year_row(0.0, 2.0);
    sched.fee_out = year_row(0.0, 2.0);
    sched.fee_re = round_quarter(uniform(0.0, 2.0));
    sched.discount_factor = uniform(0.8, 1.0);

    BonusMalusRule rule(min_level, max_level, T, std::move(claim), inactive);
    return {Contract(std::move(rule), std::move(sched)), std::move(menu), std::move(losses)};
}

}  // namespace cyberbm::oracle
