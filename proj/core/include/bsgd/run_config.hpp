#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bsgd/noise.hpp"
#include "bsgd/phantom.hpp"
#include "bsgd/solver.hpp"

namespace bsgd {

enum class ExperimentKind { schlieren, benchmark };
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

enum class Method { sgd, landweber };
std::string to_string(Method method);
Method parse_method(const std::string& name);

enum class SweepAxis { noise_level, batch_size, space_exponent };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

struct ProblemSection {
  // schlieren
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::size_t n_angles = 30;
  /// 0 selects one detector per image column.
  std::size_t n_detectors = 0;
  /// Empty: synthesize a sparse_blobs phantom; otherwise a BSGD-ARRAY file.
  std::string phantom_file;
  std::size_t n_blobs = 5;
  double amplitude = 1.0;
  std::uint64_t phantom_seed = 7;
  // benchmark
  std::size_t dim = 10;
  double diag_min = 0.5;
  double diag_max = 1.0;
  double beta = 0.0;
  double working_radius = 1.0;
  /// Entry value of the benchmark ground truth x† (constant vector).
  double truth_value = 0.5;
  // both
  std::size_t batch_size = 1;
  bool operator==(const ProblemSection&) const = default;
};

struct SolverSection {
  Method method = Method::sgd;
  ExponentMode mode = ExponentMode::practice;
  double r_X = 2.0;
  double r_Y = 2.0;
  /// Unset: calibrated default for (kind, r_X, r_Y); see default_mu0.
  std::optional<double> mu0;
  double step_decay = 0.0;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  StoppingRule stopping = StoppingRule::max_epochs;
  double Gamma = 1.0;
  double x0 = 0.0;
  RecordGranularity granularity = RecordGranularity::epoch;
  double divergence_factor = 1e12;
  bool operator==(const SolverSection&) const = default;
};

struct EstimatesSection {
  bool enabled = true;
  /// Ball around the ground truth used for the sampled gamma and L estimates.
  double radius = 0.1;
  std::size_t n_samples = 8;
  std::uint64_t seed = 11;
  std::size_t power_iterations = 50;
  bool operator==(const EstimatesSection&) const = default;
};

struct RatesSection {
  std::vector<double> deltas = {1e-1, 3e-2, 1e-2, 3e-3};
  std::size_t n_seeds = 20;
  std::uint64_t base_seed = 1;
  /// Step budget of the a-priori rule delta^p sum mu <= Gamma.
  double Gamma = 3.0;
  double alpha = 1.0;
  /// Unset: 2 diag_min^2, the benchmark's certificate for beta = 0.
  std::optional<double> C_alpha;
  std::size_t exact_epochs = 60;
  double slope_tolerance = 0.2;
  double contraction_slack = 0.05;
  bool operator==(const RatesSection&) const = default;
};

struct SweepSection {
  std::optional<SweepAxis> axis;
  std::vector<double> values;
  bool operator==(const SweepSection&) const = default;
};

/// Whole experiment description, stored as an INI-style text file with the
/// sections [experiment], [problem], [solver], [noise], [estimates], [rates],
/// [sweep] and [output].
struct RunConfig {
  ExperimentKind kind = ExperimentKind::benchmark;
  std::string name = "run";
  ProblemSection problem;
  SolverSection solver;
  NoiseSpec noise;
  EstimatesSection estimates;
  RatesSection rates;
  SweepSection sweep;
  std::string output_dir = "out";

  void validate() const;
  /// Solver settings with (p, q) from the mode and mu0 resolved.
  SolverConfig solver_config() const;
  double resolved_mu0() const;
  bool operator==(const RunConfig& other) const;
};

/// mu0 calibrated by a coarse grid search (largest step that keeps the
/// residual decreasing without divergence on the desk-scale problems).
double default_mu0(ExperimentKind kind, double r_X, double r_Y);

/// Parses a config; unknown sections or keys and malformed values raise
/// InputError. A trailing [results] section (written into manifests) is ignored.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Every key, with shortest round-trip number formatting.
std::string serialize_config(const RunConfig& config);

std::vector<double> parse_number_list(const std::string& text);
std::string format_number_list(const std::vector<double>& values);

}  // namespace bsgd
