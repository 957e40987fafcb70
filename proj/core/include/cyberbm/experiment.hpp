#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cyberbm/compound_loss.hpp"
#include "cyberbm/contract.hpp"
#include "cyberbm/dp_solver.hpp"
#include "cyberbm/severity.hpp"

namespace cyberbm {

inline constexpr const char* kConfigSchema = "cyberbm-experiment/1";

struct SeveritySpec {
    enum class Family { tr_g_and_h, lognormal, lognormal_matched };

    Family family = Family::tr_g_and_h;
    /// g-and-h parameters; also the moment-matching target for lognormal_matched.
    double alpha = 0.0;
    double sigma = 1.0;
    double g = 1.8;
    double h = 0.15;
    /// Used by family == lognormal only.
    double mu = 0.0;
    double s = 1.0;

    bool operator==(const SeveritySpec&) const = default;
};

/// Measure with gamma given either directly or as a quantile of the severity.
struct MeasureSpec {
    double beta = 0.0;
    std::optional<double> gamma;
    std::optional<double> gamma_quantile;

    bool operator==(const MeasureSpec&) const = default;
};

/// Values per level, one entry per year.
using LevelSchedule = std::map<int, std::vector<double>>;

struct InactiveSpec {
    int level = 0;
    /// "on", "off" (any off_y) or "off_<y>".
    std::string status;
    int to_level = 0;
    /// "off_<y>" or "no".
    std::string to_status;

    bool operator==(const InactiveSpec&) const = default;
};

struct ContractTemplate {
    int min_level = 0;
    int max_level = 0;
    std::map<int, ClaimTransition> claim_transition;
    std::vector<InactiveSpec> inactive_transition;
    std::map<int, double> premium_multiplier;
    LevelSchedule deductible;
    LevelSchedule max_compensation;
    std::vector<double> fee_in;
    std::vector<double> fee_out;
    double fee_re = 0.0;

    bool operator==(const ContractTemplate&) const = default;
};

struct SweepSpec {
    double premium_min = 0.0;
    double premium_max = 7.0;
    double premium_step = 0.005;

    /// premium_min + k * premium_step while <= premium_max (within 1e-9).
    std::vector<double> grid() const;
    bool operator==(const SweepSpec&) const = default;
};

struct McValidationSpec {
    double base_premium = 4.7;
    std::string variant = "bm";
    std::size_t paths = 1000000;
    std::uint64_t seed = 20240501;

    bool operator==(const McValidationSpec&) const = default;
};

struct ExperimentConfig {
    int horizon = 20;
    double discount_factor = 0.95;
    double frequency_rate = 0.8;
    SeveritySpec severity;
    std::vector<MeasureSpec> mitigation;
    DiscretizationConfig discretization;
    ContractTemplate contract;
    SweepSpec sweep;
    std::string output_dir = "results";
    std::optional<McValidationSpec> mc_validation;

    bool operator==(const ExperimentConfig& o) const;
};

enum class Variant { bonus_malus, flat };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// The reference experiment: T = 20, four BM levels, Tr-g-and-h(0, 1, 1.8, 0.15).
ExperimentConfig emit_experiment_defaults();

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

std::shared_ptr<const Severity> make_severity(const SeveritySpec& spec);
MitigationMenu make_menu(const ExperimentConfig& cfg, const Severity& severity);
CompoundLossModel make_loss_model(const ExperimentConfig& cfg);
Contract make_contract(const ExperimentConfig& cfg, Variant variant, double base_premium);

struct SweepRow {
    double base_premium = 0.0;
    double v0 = 0.0;
    double retention = 0.0;
    std::vector<double> years_per_level;
    double years_uninsured = 0.0;
    double mitigation_years = 0.0;
    double loss_prevented = 0.0;
    double insurer_profit = 0.0;
};

SweepRow summarize(const PolicySolution& solution, double base_premium,
                   const std::vector<int>& levels);

struct SweepResult {
    Variant variant = Variant::bonus_malus;
    int horizon = 0;
    /// Levels reported in the years_bm_* columns.
    std::vector<int> levels;
    std::vector<SweepRow> rows;
};

/// Solves every premium of the sweep grid. Rows come back in premium order
/// regardless of `jobs`.
SweepResult run_sweep(const ExperimentConfig& cfg, Variant variant, const LossModel& losses,
                      unsigned jobs = 1);

/// Solves a single premium with the standard quantities of interest.
PolicySolution solve_premium(const ExperimentConfig& cfg, Variant variant,
                             const LossModel& losses, double base_premium);

enum class RetentionClass { full, partial, none };
enum class MitigationClass { always, partial, never };

struct Regime {
    RetentionClass retention;
    MitigationClass mitigation;
    bool operator==(const Regime&) const = default;
};

Regime classify(const SweepRow& row, int horizon);
std::string describe(const Regime& regime);

/// Consecutive grid points across which the regime changes.
struct RegimeChange {
    double last_premium;
    double next_premium;
    Regime before;
    Regime after;
};

std::vector<RegimeChange> regime_changes(const SweepResult& result);

/// "years_bm_m2" for level -2, "years_bm_1" for level 1.
std::string level_column(int level);
void write_sweep_csv(std::ostream& os, const SweepResult& result);
void write_threshold_summary(std::ostream& os, const SweepResult& result);

/// Writes <dir>/sweep_<variant>.csv and <dir>/thresholds_<variant>.txt via
/// temporary files renamed into place. Returns the CSV path.
std::filesystem::path write_sweep_outputs(const std::filesystem::path& dir,
                                          const SweepResult& result);

/// 6 significant digits in decimal notation.
std::string format_number(double x);

}  // namespace cyberbm
