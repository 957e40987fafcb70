#include "cyberbm/dp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyberbm/errors.hpp"

namespace cyberbm {

LossModel LossModel::from_compound(const CompoundLossModel& model,
                                   const DiscretizationConfig& cfg) {
    LossModel out;
    const double gross = model.frequency().mean() * model.severity().mean();
    for (std::size_t d = 0; d < model.menu().size(); ++d) {
        auto dist = std::make_shared<const DiscreteLossDistribution>(model.compound_fft(d, cfg));
        out.measures.push_back({std::make_shared<const LayerEvaluator>(std::move(dist)),
                                model.expected_aggregate_loss(d), gross});
    }
    return out;
}

LossModel LossModel::from_distributions(std::vector<DiscreteLossDistribution> dists) {
    if (dists.empty()) throw DomainError("need at least one loss distribution");
    LossModel out;
    const double gross = dists.front().mean();
    for (auto& dist : dists) {
        const double mean = dist.mean();
        auto shared = std::make_shared<const DiscreteLossDistribution>(std::move(dist));
        out.measures.push_back({std::make_shared<const LayerEvaluator>(std::move(shared)), mean,
                                gross});
    }
    return out;
}

std::string qoi::adoption(std::size_t d) { return "adopt_measure_" + std::to_string(d); }

std::vector<QuantityOfInterest> standard_quantities(const MitigationMenu& menu) {
    std::vector<QuantityOfInterest> out;
    for (std::size_t d = 0; d < menu.size(); ++d) {
        out.push_back({qoi::adoption(d), [d](const StageContext& c) {
                           return c.mitigation == d ? 1.0 : 0.0;
                       }});
    }
    out.push_back({qoi::mitigation_spend, [](const StageContext& c) {
                       return c.discount * c.menu.beta(c.mitigation);
                   }});
    out.push_back({qoi::payments_to_insurer, [](const StageContext& c) {
                       return c.discount * c.contract.contract_payment(c.state, c.year, c.insure);
                   }});
    out.push_back({qoi::loss_prevented, [](const StageContext& c) {
                       const auto& m = c.losses.measures[c.mitigation];
                       return c.discount * (m.expected_gross - m.expected_loss);
                   }});
    out.push_back({qoi::compensation_received, [](const StageContext& c) {
                       if (c.insure == 0) return 0.0;
                       const auto& layers = *c.losses.measures[c.mitigation].layers;
                       const double dtb = c.contract.deductible(c.state.level, c.year);
                       const double cap = c.contract.max_compensation(c.state.level, c.year);
                       double s = 0.0;
                       for (const auto& ci : c.claims) s += layers.expectation(ci.claims, dtb, cap, 0.0);
                       return c.discount * s;
                   }});
    return out;
}

double PolicySolution::optimal_value() const {
    return values.front()[index(ContractState::never_insured(0))];
}

double PolicySolution::value(int t, const ContractState& s) const {
    return values.at(static_cast<std::size_t>(t))[index(s)];
}

int PolicySolution::mitigation_at(int t, const ContractState& s) const {
    return mitigation.at(static_cast<std::size_t>(t - 1))[index(s)];
}

int PolicySolution::insure_at(int t, const ContractState& s) const {
    return insure.at(static_cast<std::size_t>(t - 1))[index(s)];
}

std::span<const ClaimInterval> PolicySolution::claims_at(int t, int level) const {
    return claim_intervals.at(static_cast<std::size_t>(t - 1))
        .at(static_cast<std::size_t>(level - contract.rule().min_level()));
}

double PolicySolution::kernel(int t, const ContractState& from, const ContractState& to) const {
    return kernels.at(static_cast<std::size_t>(t - 1))[index(from) * n_states + index(to)];
}

double PolicySolution::marginal(int t, const ContractState& s) const {
    return marginals.at(static_cast<std::size_t>(t))[index(s)];
}

int PolicySolution::find_qoi(const std::string& name) const {
    const auto it = std::find(qoi_names.begin(), qoi_names.end(), name);
    return it == qoi_names.end() ? -1 : static_cast<int>(it - qoi_names.begin());
}

PolicySolution solve(const Contract& contract, const MitigationMenu& menu,
                     const LossModel& losses, std::span<const QuantityOfInterest> quantities) {
    if (losses.size() != menu.size()) {
        throw ConfigError("loss model must provide one distribution per mitigation measure");
    }
    const BonusMalusRule& rule = contract.rule();
    const int T = contract.horizon();
    const std::size_t n = static_cast<std::size_t>(rule.n_states());
    const std::size_t D = menu.size();
    const double delta = contract.discount_factor();
    const auto idx = [&](const ContractState& s) { return rule.state_index(s); };

    PolicySolution sol{contract, n, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    sol.values.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(n, 0.0));
    sol.mitigation.assign(static_cast<std::size_t>(T), std::vector<int>(n, 0));
    sol.insure.assign(static_cast<std::size_t>(T), std::vector<int>(n, 0));
    sol.claim_intervals.resize(static_cast<std::size_t>(T));
    sol.kernels.assign(static_cast<std::size_t>(T), std::vector<double>(n * n, 0.0));
    for (const auto& q : quantities) sol.qoi_names.push_back(q.name);
    // Per-state expectations of each quantity, [m][t - 1][state].
    std::vector<std::vector<std::vector<double>>> per_state(
        quantities.size(),
        std::vector<std::vector<double>>(static_cast<std::size_t>(T), std::vector<double>(n)));

    std::vector<double> expected_loss(D);
    for (std::size_t d = 0; d < D; ++d) expected_loss[d] = losses.measures[d].expected_loss;

    std::vector<double> stay(D);
    for (int t = T; t >= 1; --t) {
        const auto ti = static_cast<std::size_t>(t - 1);
        const std::vector<double>& V = sol.values[static_cast<std::size_t>(t)];
        std::vector<double>& V_prev = sol.values[ti];
        auto& intervals_t = sol.claim_intervals[ti];
        intervals_t.resize(static_cast<std::size_t>(rule.n_levels()));
        const double discount_qoi = std::pow(delta, t - 1);

        for (int b = rule.min_level(); b <= rule.max_level(); ++b) {
            const ClaimTransition& ct = rule.claim_rule(b);
            const int low = ct.zero_level;
            const int high = ct.highest_level();
            const double dtb = contract.deductible(b, t);
            const double cap = contract.max_compensation(b, t);
            const double v_low = V[idx(ContractState::insured(low))];

            auto& intervals = intervals_t[static_cast<std::size_t>(b - rule.min_level())];
            for (int target = low; target <= high; ++target) {
                const double alpha = V[idx(ContractState::insured(target))] - v_low;
                const Interval region = ct.region(target);
                intervals.push_back({target, alpha,
                                     region.is_empty() ? region : region.strictly_above(alpha)});
            }
            // Expected continuation value when insured, claiming optimally.
            for (std::size_t d = 0; d < D; ++d) {
                const LayerEvaluator& layers = *losses.measures[d].layers;
                double gain = 0.0;
                for (const auto& ci : intervals) {
                    if (!ci.claims.is_empty()) {
                        gain += layers.expectation(ci.claims, dtb, cap, ci.alpha);
                    }
                }
                stay[d] = v_low - gain;
            }

            for (int slot = 0; slot < rule.n_status(); ++slot) {
                const std::size_t s_idx =
                    static_cast<std::size_t>((b - rule.min_level()) * rule.n_status() + slot);
                const ContractState s = rule.state_at(s_idx);
                const double leave = V[idx(rule.inactive_transition(s))];

                double best = std::numeric_limits<double>::infinity();
                std::size_t best_d = 0;
                int best_i = 0;
                for (std::size_t d = 0; d < D; ++d) {
                    for (int iota = 0; iota <= 1; ++iota) {
                        const double cost = menu.beta(d) + contract.contract_payment(s, t, iota) +
                                            expected_loss[d] + (iota == 1 ? stay[d] : leave);
                        if (cost < best) {
                            best = cost;
                            best_d = d;
                            best_i = iota;
                        }
                    }
                }
                if (!std::isfinite(best)) {
                    throw NumericalInstability("non-finite value at year " + std::to_string(t) +
                                               ", state " + s.to_string());
                }
                V_prev[s_idx] = delta * best;
                sol.mitigation[ti][s_idx] = static_cast<int>(best_d);
                sol.insure[ti][s_idx] = best_i;

                double* row = sol.kernels[ti].data() + s_idx * n;
                if (best_i == 1) {
                    const LayerEvaluator& layers = *losses.measures[best_d].layers;
                    double moved = 0.0;
                    for (const auto& ci : intervals) {
                        if (ci.target_level == low || ci.claims.is_empty()) continue;
                        const double p = layers.probability(ci.claims, dtb, cap);
                        row[idx(ContractState::insured(ci.target_level))] += p;
                        moved += p;
                    }
                    row[idx(ContractState::insured(low))] += std::max(0.0, 1.0 - moved);
                } else {
                    row[idx(rule.inactive_transition(s))] = 1.0;
                }

                const StageContext ctx{contract, menu, losses, t, s, best_d, best_i,
                                       intervals, discount_qoi};
                for (std::size_t m = 0; m < quantities.size(); ++m) {
                    per_state[m][ti][s_idx] = quantities[m].expected(ctx);
                }
            }
        }
    }

    sol.marginals.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(n, 0.0));
    sol.marginals[0][idx(ContractState::never_insured(0))] = 1.0;
    sol.qoi_per_year.assign(quantities.size(), std::vector<double>(static_cast<std::size_t>(T)));
    for (std::size_t ti = 0; ti < static_cast<std::size_t>(T); ++ti) {
        const std::vector<double>& prev = sol.marginals[ti];
        std::vector<double>& next = sol.marginals[ti + 1];
        const std::vector<double>& K = sol.kernels[ti];
        for (std::size_t from = 0; from < n; ++from) {
            if (prev[from] == 0.0) continue;
            const double* row = K.data() + from * n;
            for (std::size_t to = 0; to < n; ++to) next[to] += prev[from] * row[to];
        }
        for (std::size_t m = 0; m < quantities.size(); ++m) {
            double s = 0.0;
            for (std::size_t from = 0; from < n; ++from) s += prev[from] * per_state[m][ti][from];
            sol.qoi_per_year[m][ti] = s;
        }
    }
    sol.qoi_aggregate.resize(quantities.size());
    for (std::size_t m = 0; m < quantities.size(); ++m) {
        double s = 0.0;
        for (double x : sol.qoi_per_year[m]) s += x;
        sol.qoi_aggregate[m] = s;
    }
    return sol;
}

int claim_rule(const PolicySolution& solution, const ContractState& s, int t, double loss) {
    if (solution.insure_at(t, s) != 1) return 0;
    const double lam = compensation(solution.contract, s.level, t, loss);
    for (const auto& ci : solution.claims_at(t, s.level)) {
        if (!ci.claims.is_empty() && ci.claims.contains(lam)) return 1;
    }
    return 0;
}

OccupancySummary occupancy_summaries(const PolicySolution& solution) {
    const BonusMalusRule& rule = solution.contract.rule();
    const int T = solution.horizon();
    OccupancySummary out;
    out.insured_probability.assign(static_cast<std::size_t>(T), 0.0);
    out.years_per_level.assign(static_cast<std::size_t>(rule.n_levels()), 0.0);
    for (std::size_t ti = 0; ti < static_cast<std::size_t>(T); ++ti) {
        const auto& prev = solution.marginals[ti];
        for (std::size_t s = 0; s < solution.n_states; ++s) {
            if (prev[s] == 0.0) continue;
            if (solution.insure[ti][s] == 1) {
                out.insured_probability[ti] += prev[s];
                const int level = rule.state_at(s).level;
                out.years_per_level[static_cast<std::size_t>(level - rule.min_level())] += prev[s];
            }
            if (solution.mitigation[ti][s] != 0) out.mitigation_years += prev[s];
        }
    }
    double insured_years = 0.0;
    for (double p : out.insured_probability) insured_years += p;
    out.retention = insured_years / T;
    out.years_uninsured = T - insured_years;
    return out;
}

double insurer_profit(const PolicySolution& solution) {
    const int paid = solution.find_qoi(qoi::payments_to_insurer);
    const int received = solution.find_qoi(qoi::compensation_received);
    if (paid < 0 || received < 0) {
        throw DomainError("insurer_profit needs the payments and compensation quantities");
    }
    return solution.qoi_aggregate[static_cast<std::size_t>(paid)] -
           solution.qoi_aggregate[static_cast<std::size_t>(received)];
}

}  // namespace cyberbm
