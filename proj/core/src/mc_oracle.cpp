#include "cyberbm/mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <mutex>
#include <random>
#include <thread>

#include "cyberbm/errors.hpp"

namespace cyberbm {

namespace {

constexpr std::size_t kBlockSize = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1).
double open_uniform(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

class PathRunner {
public:
    PathRunner(const Contract& contract, const MitigationMenu& menu, const DecisionTables& policy,
               const LossSampler& sampler)
        : contract_(contract), menu_(menu), policy_(policy), sampler_(sampler) {}

    // Runs one path; `visit` sees every year before the state update.
    template <typename Visit>
    double run(std::uint64_t seed, Visit&& visit) const {
        std::mt19937_64 rng(seed);
        const BonusMalusRule& rule = contract_.rule();
        ContractState s = ContractState::never_insured(0);
        double total = 0.0;
        double disc = 1.0;
        std::vector<double> severities;
        for (int t = 1; t <= contract_.horizon(); ++t) {
            disc *= contract_.discount_factor();
            const std::size_t si = rule.state_index(s);
            const auto ti = static_cast<std::size_t>(t - 1);
            const int d = policy_.mitigation[ti][si];
            const int iota = policy_.insure[ti][si];

            const int n = draw_count(rng);
            severities.resize(static_cast<std::size_t>(n));
            for (double& x : severities) x = sampler_.severity->quantile(open_uniform(rng));
            const double loss = aggregate_loss(menu_, static_cast<std::size_t>(d), severities);
            const int j = policy_.claim ? policy_.claim(s, t, loss) : 0;

            const double cost = stage_cost_after_loss(contract_, menu_, s, t,
                                                      static_cast<std::size_t>(d), iota, j, loss);
            const ContractState next = step_after_loss(contract_, s, t, iota, j, loss);
            total += disc * cost;
            visit(PathYear{t, s, d, iota, n, gross(severities), loss, j,
                           iota * j * compensation(contract_, s.level, t, loss), cost, next});
            s = next;
        }
        return total;
    }

private:
    static double gross(const std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }

    int draw_count(std::mt19937_64& rng) const {
        const FrequencyModel& f = sampler_.frequency;
        if (f.kind == FrequencyModel::Kind::fixed) return static_cast<int>(f.rate);
        if (f.rate <= 0.0) return 0;
        std::poisson_distribution<int> pois(f.rate);
        return pois(rng);
    }

    const Contract& contract_;
    const MitigationMenu& menu_;
    const DecisionTables& policy_;
    const LossSampler& sampler_;
};

void check_inputs(const Contract& contract, const DecisionTables& policy,
                  const LossSampler& sampler, const SimulationConfig& cfg) {
    if (cfg.n_paths < 1) throw DomainError("n_paths must be >= 1");
    if (cfg.horizon != contract.horizon()) {
        throw DomainError("simulation horizon does not match the contract");
    }
    if (!sampler.severity) throw DomainError("loss sampler needs a severity");
    const auto T = static_cast<std::size_t>(contract.horizon());
    const auto n = static_cast<std::size_t>(contract.rule().n_states());
    if (policy.mitigation.size() != T || policy.insure.size() != T) {
        throw DomainError("decision tables need one row per year");
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (policy.mitigation[t].size() != n || policy.insure[t].size() != n) {
            throw DomainError("decision tables need one entry per state");
        }
    }
}

struct BlockResult {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<std::uint64_t> counts;
};

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

DecisionTables decision_tables(const PolicySolution& solution) {
    DecisionTables out;
    out.mitigation = solution.mitigation;
    out.insure = solution.insure;
    out.claim = [&solution](const ContractState& s, int t, double loss) {
        return claim_rule(solution, s, t, loss);
    };
    return out;
}

SimulationStats evaluate_fixed_policy(const Contract& contract, const MitigationMenu& menu,
                                      const DecisionTables& policy, const LossSampler& sampler,
                                      const SimulationConfig& cfg) {
    check_inputs(contract, policy, sampler, cfg);
    const PathRunner runner(contract, menu, policy, sampler);
    const BonusMalusRule& rule = contract.rule();
    const auto T = static_cast<std::size_t>(contract.horizon());
    const auto n_states = static_cast<std::size_t>(rule.n_states());
    const std::size_t n_blocks = (cfg.n_paths + kBlockSize - 1) / kBlockSize;
    const std::size_t n_counts = cfg.track_states ? (T + 1) * n_states : 0;

    // Fixed blocks combined in order keep results independent of the worker count.
    std::vector<BlockResult> blocks(n_blocks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            BlockResult& r = blocks[b];
            r.counts.assign(n_counts, 0);
            const std::size_t end = std::min(cfg.n_paths, (b + 1) * kBlockSize);
            try {
                for (std::size_t p = b * kBlockSize; p < end; ++p) {
                    if (cfg.track_states) ++r.counts[rule.state_index(ContractState::never_insured(0))];
                    const double c = runner.run(path_seed(cfg.seed, p), [&](const PathYear& y) {
                        if (cfg.track_states) {
                            ++r.counts[static_cast<std::size_t>(y.year) * n_states +
                                       rule.state_index(y.after)];
                        }
                    });
                    r.sum += c;
                    r.sum_sq += c * c;
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_blocks);
                return;
            }
        }
    };
    const unsigned n_workers =
        std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(n_blocks)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<std::uint64_t> counts(n_counts, 0);
    for (const BlockResult& r : blocks) {
        sum += r.sum;
        sum_sq += r.sum_sq;
        for (std::size_t k = 0; k < n_counts; ++k) counts[k] += r.counts[k];
    }
    SimulationStats stats;
    const double n = static_cast<double>(cfg.n_paths);
    stats.n_paths = cfg.n_paths;
    stats.mean = sum / n;
    const double var = cfg.n_paths > 1 ? std::max(0.0, (sum_sq - n * stats.mean * stats.mean) / (n - 1))
                                       : 0.0;
    stats.standard_error = std::sqrt(var / n);
    if (cfg.track_states) {
        stats.state_frequency.assign(T + 1, std::vector<double>(n_states, 0.0));
        for (std::size_t t = 0; t <= T; ++t) {
            for (std::size_t s = 0; s < n_states; ++s) {
                stats.state_frequency[t][s] = static_cast<double>(counts[t * n_states + s]) / n;
            }
        }
    }
    return stats;
}

SimulationStats simulate(const PolicySolution& solution, const MitigationMenu& menu,
                         const LossSampler& sampler, const SimulationConfig& cfg) {
    return evaluate_fixed_policy(solution.contract, menu, decision_tables(solution), sampler, cfg);
}

std::vector<PathRecord> trace_paths(const Contract& contract, const MitigationMenu& menu,
                                    const DecisionTables& policy, const LossSampler& sampler,
                                    const SimulationConfig& cfg) {
    check_inputs(contract, policy, sampler, cfg);
    const PathRunner runner(contract, menu, policy, sampler);
    std::vector<PathRecord> out(cfg.n_paths);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        out[p].discounted_cost = runner.run(
            path_seed(cfg.seed, p), [&](const PathYear& y) { out[p].years.push_back(y); });
    }
    return out;
}

void write_trace_csv(std::ostream& os, const std::vector<PathRecord>& paths) {
    os << "path,year,level,status,mitigation,insure,events,gross_loss,loss,claim,compensation,"
          "cost,next_level,next_status\n";
    os.precision(12);
    const auto status = [](const ContractState& s) {
        switch (s.coverage) {
            case Coverage::no: return std::string("no");
            case Coverage::on: return std::string("on");
            case Coverage::off: return "off_" + std::to_string(s.off_years);
        }
        return std::string();
    };
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (const PathYear& y : paths[p].years) {
            os << p << ',' << y.year << ',' << y.before.level << ',' << status(y.before) << ','
               << y.mitigation << ',' << y.insure << ',' << y.events << ',' << y.gross_loss << ','
               << y.loss << ',' << y.claim << ',' << y.compensation << ',' << y.cost << ','
               << y.after.level << ',' << status(y.after) << '\n';
        }
    }
}

}  // namespace cyberbm
