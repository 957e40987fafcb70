// cyberbm: premium sweeps and Monte Carlo cross-checks for the Bonus-Malus
// cyber insurance model.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyberbm/dp_solver.hpp"
#include "cyberbm/errors.hpp"
#include "cyberbm/experiment.hpp"
#include "cyberbm/mc_oracle.hpp"

namespace fs = std::filesystem;
using namespace cyberbm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path output_dir(const ExperimentConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("CYBERBM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return cfg.output_dir;
}

int run_solve(const std::string& config_path, const std::string& variant, unsigned jobs,
              const std::string& out_flag) {
    const ExperimentConfig cfg = load_config(config_path);
    validate(cfg);
    std::vector<Variant> variants;
    if (variant.empty()) {
        variants = {Variant::bonus_malus, Variant::flat};
    } else {
        variants = {parse_variant(variant)};
    }

    const auto start = std::chrono::steady_clock::now();
    const CompoundLossModel model = make_loss_model(cfg);
    const LossModel losses = LossModel::from_compound(model, cfg.discretization);
    std::cerr << "compound distributions ready in " << std::fixed << std::setprecision(2)
              << seconds_since(start) << " s\n";

    std::vector<SweepResult> results;
    for (Variant v : variants) {
        const auto t0 = std::chrono::steady_clock::now();
        results.push_back(run_sweep(cfg, v, losses, jobs));
        std::cerr << variant_name(v) << ": " << results.back().rows.size() << " premiums in "
                  << seconds_since(t0) << " s\n";
    }
    // Nothing is written until every sweep has succeeded.
    const fs::path dir = output_dir(cfg, out_flag);
    for (const SweepResult& r : results) {
        const fs::path csv = write_sweep_outputs(dir, r);
        std::cout << "wrote " << csv.string() << '\n';
        write_threshold_summary(std::cout, r);
    }
    return 0;
}

int run_defaults(const std::string& out) {
    const std::string text = serialize_config(emit_experiment_defaults());
    if (out == "-") {
        std::cout << text;
        return 0;
    }
    std::ofstream file(out, std::ios::trunc);
    if (!file) throw ConfigError("--out: cannot write " + out);
    file << text;
    std::cout << "wrote " << out << '\n';
    return 0;
}

int run_validate(const std::string& config_path) {
    const ExperimentConfig cfg = load_config(config_path);
    validate(cfg);
    std::cout << config_path << ": ok (" << cfg.sweep.grid().size() << " premiums, T="
              << cfg.horizon << ")\n";
    return 0;
}

int run_mc_check(const std::string& config_path, std::size_t paths, std::uint64_t seed,
                 unsigned jobs) {
    const ExperimentConfig cfg = load_config(config_path);
    validate(cfg);
    const McValidationSpec spec = cfg.mc_validation.value_or(McValidationSpec{});
    const Variant variant = parse_variant(spec.variant);

    const CompoundLossModel model = make_loss_model(cfg);
    const LossModel losses = LossModel::from_compound(model, cfg.discretization);
    const PolicySolution sol = solve_premium(cfg, variant, losses, spec.base_premium);

    SimulationConfig sim;
    sim.n_paths = paths;
    sim.seed = seed;
    sim.horizon = cfg.horizon;
    sim.workers = jobs;
    sim.track_states = false;
    const SimulationStats stats =
        simulate(sol, model.menu(), LossSampler{model.severity_ptr(), model.frequency()}, sim);

    const double v0 = sol.optimal_value();
    const double diff = std::abs(stats.mean - v0);
    const double tol = std::max(3.0 * stats.standard_error, 5e-3 * std::abs(v0));
    std::cout << std::setprecision(8) << "variant " << variant_name(variant) << ", base premium "
              << spec.base_premium << '\n'
              << "V0 (dynamic programming) " << v0 << '\n'
              << "Monte Carlo mean         " << stats.mean << " (se " << stats.standard_error
              << ", " << paths << " paths)\n"
              << "difference " << diff << ", tolerance " << tol << '\n'
              << (diff <= tol ? "consistent" : "INCONSISTENT") << '\n';
    return diff <= tol ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bonus-Malus cyber insurance: optimal provisioning sweeps"};
    app.require_subcommand(1);

    std::string config_path;
    std::string variant;
    std::string out_dir;
    std::string out_file;
    unsigned jobs = 1;
    std::size_t paths = 100000;
    std::uint64_t seed = 1;

    auto* solve_cmd = app.add_subcommand("solve", "Run the premium sweep and write CSV outputs");
    solve_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    solve_cmd->add_option("--variant", variant, "bm or flat (default: both)")
        ->check(CLI::IsMember({"bm", "flat"}));
    solve_cmd->add_option("--jobs", jobs, "Parallel solves")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--out", out_dir, "Output directory");

    auto* defaults_cmd = app.add_subcommand("defaults", "Write the reference experiment config");
    defaults_cmd->add_option("--out", out_file, "Destination file, or - for stdout")->required();

    auto* validate_cmd = app.add_subcommand("validate", "Check a config without solving");
    validate_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* mc_cmd = app.add_subcommand("mc-check", "Compare V0 against a Monte Carlo estimate");
    mc_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    mc_cmd->add_option("--paths", paths, "Simulated paths")->required()->check(CLI::PositiveNumber);
    mc_cmd->add_option("--seed", seed, "Random seed")->required();
    mc_cmd->add_option("--jobs", jobs, "Simulation workers")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve_cmd) return run_solve(config_path, variant, jobs, out_dir);
        if (*defaults_cmd) return run_defaults(out_file);
        if (*validate_cmd) return run_validate(config_path);
        if (*mc_cmd) return run_mc_check(config_path, paths, seed, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
