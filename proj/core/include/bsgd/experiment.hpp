#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bsgd/forward_problem.hpp"
#include "bsgd/noise.hpp"
#include "bsgd/run_config.hpp"
#include "bsgd/solver.hpp"

namespace bsgd {

/// Process exit codes of the command handlers.
inline constexpr int kExitOk = 0;
/// Divergence or a failed acceptance tolerance.
inline constexpr int kExitFailure = 1;
/// Invalid configuration or arguments.
inline constexpr int kExitUsage = 2;

/// Forward problem with ground truth, observed data and sampled constants.
struct PreparedProblem {
  ForwardProblem problem;
  BlockList y_obs;
  NoiseLevel noise;
  std::optional<double> gamma_hat;
  std::optional<double> L_hat;
};

/// Ground truth (phantom or benchmark vector) and forward operator of a config.
ForwardProblem build_forward_problem(const RunConfig& config);
/// build_forward_problem plus noisy data and, if enabled, the sampled gamma and L.
PreparedProblem prepare_problem(const RunConfig& config);

struct RunSummary {
  std::optional<double> best_rel_error;
  std::size_t best_epoch = 0;
  std::optional<double> final_rel_error;
  double final_residual = 0.0;
  std::size_t iterations = 0;
  bool diverged = false;
  double wall_seconds = 0.0;
};

/// Runs one experiment and writes history.csv, best.bsgd, final.bsgd and
/// manifest.txt into out_dir (created if needed). Progress goes to `log` if set.
RunSummary execute_run(const RunConfig& config, const std::filesystem::path& out_dir,
                       std::ostream* log = nullptr);

void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

int cmd_run(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet);
/// One subdirectory per value plus summary.csv. Values fall back to [sweep].
int cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
              std::optional<SweepAxis> axis, std::vector<double> values, bool quiet);
/// Exact-data and noisy rate studies on the benchmark; nonzero exit when a
/// tolerance fails.
int cmd_rates(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet);
/// phantom.bsgd and a sidecar with angles, detector positions and the batch map.
int cmd_phantom(const RunConfig& config, const std::filesystem::path& out_dir);

/// Applies one sweep value to a copy of the config.
RunConfig apply_sweep_value(const RunConfig& config, SweepAxis axis, double value);

}  // namespace bsgd
