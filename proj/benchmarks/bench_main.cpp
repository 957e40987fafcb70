#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/dp_solver.hpp"
#include "cyberbm/experiment.hpp"
#include "cyberbm/mc_oracle.hpp"
#include "cyberbm/severity.hpp"

using namespace cyberbm;

namespace {

const TruncatedGAndH& experiment_severity() {
    static const TruncatedGAndH sev(0.0, 1.0, 1.8, 0.15);
    return sev;
}

std::vector<double> uniforms(std::size_t n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
    std::vector<double> out(n);
    for (double& x : out) x = u(rng);
    return out;
}

// Experiment config with a coarser grid so the fixture builds quickly.
const ExperimentConfig& bench_config() {
    static const ExperimentConfig cfg = [] {
        ExperimentConfig c = emit_experiment_defaults();
        c.discretization = DiscretizationConfig::with_default_theta(1e4, 16);
        return c;
    }();
    return cfg;
}

const LossModel& bench_losses() {
    static const LossModel losses =
        LossModel::from_compound(make_loss_model(bench_config()), bench_config().discretization);
    return losses;
}

}  // namespace

static void BM_SeverityCdf(benchmark::State& state) {
    const auto& sev = experiment_severity();
    double x = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sev.cdf(x));
        x = x < 1e4 ? x * 1.07 : 0.1;
    }
}
BENCHMARK(BM_SeverityCdf);

static void BM_SeverityQuantile(benchmark::State& state) {
    const auto& sev = experiment_severity();
    const auto u = uniforms(4096);
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sev.quantile(u[k++ & 4095]));
    }
}
BENCHMARK(BM_SeverityQuantile);

static void BM_StopLoss(benchmark::State& state) {
    const auto& sev = experiment_severity();
    for (auto _ : state) benchmark::DoNotOptimize(sev.stop_loss(3.2876));
}
BENCHMARK(BM_StopLoss);

static void BM_CompoundFft(benchmark::State& state) {
    auto sev = std::make_shared<TruncatedGAndH>(0.0, 1.0, 1.8, 0.15);
    const CompoundLossModel model(sev, FrequencyModel::poisson(0.8), MitigationMenu({{0.0, 0.0}}));
    const int k = static_cast<int>(state.range(0));
    const auto cfg = DiscretizationConfig::with_default_theta(1e4, k);
    for (auto _ : state) benchmark::DoNotOptimize(model.compound_fft(0, cfg));
    state.SetComplexityN(static_cast<benchmark::IterationCount>(cfg.size()));
}
BENCHMARK(BM_CompoundFft)->Arg(12)->Arg(14)->Arg(16)->Arg(18)->Unit(benchmark::kMillisecond);

static void BM_LayerExpectation(benchmark::State& state) {
    const LayerEvaluator& layers = *bench_losses().measures[0].layers;
    const Interval claims = Interval::left_open(0.0, 1000.0).strictly_above(2.5);
    for (auto _ : state) benchmark::DoNotOptimize(layers.expectation(claims, 0.5, 1000.0, 2.5));
}
BENCHMARK(BM_LayerExpectation);

static void BM_SolveBonusMalus(benchmark::State& state) {
    const auto& cfg = bench_config();
    const auto& losses = bench_losses();
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_premium(cfg, Variant::bonus_malus, losses, 4.7));
    }
}
BENCHMARK(BM_SolveBonusMalus)->Unit(benchmark::kMicrosecond);

static void BM_SimulatePaths(benchmark::State& state) {
    const auto& cfg = bench_config();
    const auto model = make_loss_model(cfg);
    const PolicySolution sol = solve_premium(cfg, Variant::bonus_malus, bench_losses(), 4.7);
    SimulationConfig sim;
    sim.n_paths = static_cast<std::size_t>(state.range(0));
    sim.horizon = cfg.horizon;
    sim.track_states = false;
    const LossSampler sampler{model.severity_ptr(), model.frequency()};
    for (auto _ : state) benchmark::DoNotOptimize(simulate(sol, model.menu(), sampler, sim));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePaths)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
