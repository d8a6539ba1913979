#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsac/driver.hpp"
#include "wsac/generator.hpp"

namespace wsac {

/// Which policy plays pi_ref in a run.
enum class ReferenceKind {
  kBehaviorClone,  // empirical action frequencies of the dataset
  kBehavior,       // the true behavior policy
  kOptimalSafe,    // LP optimum of the instance
};

struct DataSpec {
  /// Empty lists mean "use the subcommand's default grid".
  std::vector<std::size_t> n_samples;
  std::vector<std::uint64_t> seeds;
  /// Instance i is generated from generator.seed + i; 0 means the subcommand default.
  int n_instances = 0;
};

struct SweepSpec {
  std::vector<double> beta;
  std::vector<LambdaSchedule> lambda_ranges;
  std::vector<double> mix_p;
};

/// Optional input files for the single-run subcommands.
struct PathSpec {
  std::optional<std::filesystem::path> cmdp;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> policy;
  std::optional<std::filesystem::path> behavior;
};

struct ExperimentSpec {
  GeneratorSpec generator;
  DataSpec data;
  /// Base configuration; sweeps override beta / lambda per cell.
  WsacConfig wsac = default_wsac();
  SweepSpec sweep;
  PathSpec paths;
  std::optional<ReferenceKind> reference;
  std::filesystem::path outputs = "out";
  /// Slack used by safety flags and summary checks.
  double tolerance = 0.05;
  /// When false, wall_ms is written as 0 so files are bit-for-bit reproducible.
  bool timing = true;

  void validate() const;
  static WsacConfig default_wsac();
};

ExperimentSpec spec_from_json(const nlohmann::json& doc);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct ResultRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double beta = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double mix_p = 0.0;
  double j_r_behavior = 0.0;
  double j_c_behavior = 0.0;
  double j_r_wsac = 0.0;
  double j_c_wsac = 0.0;
  /// -1 when pi_ref's occupancy escapes the behavior support.
  double c_l2_ref = 0.0;
  double regret_audit = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kResultHeader =
    "run_id,seed,n,beta,lambda_lo,lambda_hi,mix_p,j_r_behavior,j_c_behavior,j_r_wsac,j_c_wsac,c_l2_ref,"
    "regret_audit,wall_ms";

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_rows_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// A generated instance with the quantities every report needs.
struct Instance {
  int index = 0;
  Cmdp cmdp;
  Policy optimal_safe;
  std::uint64_t seed_used = 0;
  /// Min / max of J_r over all policies, for reward normalization.
  double r_min = 0.0;
  double r_max = 1.0;
  double kappa = 0.0;

  double normalized_reward(double j_r) const;
  /// Raw discounted cost divided by the budget; <= 1 means safe.
  double normalized_cost(double j_c) const;
};

Instance make_instance(const GeneratorSpec& base, int index);
/// Wraps a loaded model; kappa comes from its metadata (0 when absent).
Instance instance_from_cmdp(Cmdp cmdp);

/// One WSAC run on one instance.
struct Cell {
  std::string run_id;
  int instance = 0;
  std::uint64_t data_seed = 0;
  std::size_t n = 0;
  double mix_p = 0.5;
  ReferenceKind reference = ReferenceKind::kBehaviorClone;
  WsacConfig cfg;
};

struct CellResult {
  ResultRow row;
  double j_r_ref = 0.0;
  double j_c_ref = 0.0;
  /// Per-iterate exact values; running means give the mixture's learning curve.
  std::vector<double> iterate_j_r;
  std::vector<double> iterate_j_c;
};

/// Seed of the dataset for (instance, data seed, n); independent of the WSAC config
/// so ablation variants see identical data.
std::uint64_t dataset_seed(std::uint64_t instance_seed, std::uint64_t data_seed, std::size_t n);

CellResult run_cell(const Instance& inst, const Cell& cell, bool timing = true);

/// Runs f(0..count-1) on `workers` threads. Results must be written to per-index
/// slots; the lowest-index exception is rethrown after all workers finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f);

/// Runs all cells; instances are generated once per index.
std::vector<CellResult> run_cells(const GeneratorSpec& generator, const std::vector<Cell>& cells,
                                  int workers, bool timing);

struct Figure1Report {
  std::vector<CellResult> cells;
  std::vector<Instance> instances;
};
Figure1Report run_figure1(const ExperimentSpec& spec, int workers);
void write_figure1(const Figure1Report& report, const std::filesystem::path& dir);

struct AblationSummary {
  std::string config;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double cost_mean = 0.0;
  double cost_std = 0.0;
  int runs = 0;
};

struct AblationReport {
  std::vector<CellResult> cells;
  std::vector<std::string> configs;
  std::vector<AblationSummary> summary;
  /// Per instance and config: mean normalized cost over data seeds. [instance][config]
  std::vector<std::vector<double>> instance_cost;
  /// Instances where the beta = 0 variant has strictly higher mean cost than ALL.
  int beta0_costlier = 0;
};
AblationReport run_ablation(const ExperimentSpec& spec, int workers);
void write_ablation(const AblationReport& report, const std::filesystem::path& dir);

struct SensitivitySetting {
  double beta = 0.0;
  LambdaSchedule lambda;
  double reward_mean = 0.0;
  double cost_mean = 0.0;
  int flagged = 0;
  int runs = 0;
  /// Mean normalized learning curves of the running mixture, one entry per iteration.
  std::vector<double> reward_curve;
  std::vector<double> cost_curve;
};

struct SensitivityReport {
  std::vector<CellResult> cells;
  std::vector<SensitivitySetting> settings;
  /// Per cell: final {J_c}_+ exceeds {J_c(mu)}_+ + V_max / lambda_hi + tolerance.
  std::vector<bool> flags;
};
SensitivityReport run_sensitivity(const ExperimentSpec& spec, int workers);
void write_sensitivity(const SensitivityReport& report, const std::filesystem::path& dir);

struct RatePoint {
  std::size_t n = 0;
  double subopt_mean = 0.0;
  double subopt_std = 0.0;
  int runs = 0;
};

struct RateReport {
  std::vector<CellResult> cells;
  std::vector<RatePoint> points;
  /// Least-squares fit of log(mean suboptimality) on log N; NaN when a mean is <= 0.
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  /// Suboptimality of the same configuration run on the exact behavior measure
  /// (infinite data), averaged over instances: the part no amount of data removes.
  double population_subopt = 0.0;
  /// Fit of log(mean suboptimality - population_subopt) on log N; NaN when an excess is <= 0.
  double excess_slope = 0.0;
  double excess_slope_se = 0.0;
};
RateReport run_rate(const ExperimentSpec& spec, int workers);
void write_rate(const RateReport& report, const std::filesystem::path& dir);

/// Ordinary least squares y = a + b x; returns {b, a, se(b)}.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wsac
