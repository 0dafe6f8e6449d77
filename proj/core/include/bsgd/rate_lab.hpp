#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsgd/forward_problem.hpp"
#include "bsgd/solver.hpp"

namespace bsgd {

/// Hoelder-type conditional stability D(x, x~)^alpha <= C_alpha^{-1} ||F(x) - F(x~)||^p.
struct StabilityParams {
  double alpha = 1.0;
  double C_alpha = 1.0;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Polyak-type recursions

enum class PolyakVerdict { bound_holds, bound_violated, hypothesis_violated };
std::string to_string(PolyakVerdict verdict);

struct PolyakReport {
  PolyakVerdict verdict = PolyakVerdict::bound_holds;
  /// bound[n] = d_0 (1 + a d_0^a sum_{m<=n} mu_m)^{-1/a}; bound[0] = d_0.
  std::vector<double> bound;
  /// First offending index (into the sequence) when the verdict is not bound_holds.
  std::optional<std::size_t> first_violation;
};

/// Checks the hypothesis d_{n+1} <= d_n - mu_{n+1} d_n^{1+a} for a sequence of
/// nonnegative reals (mu[n] is the step that leads from d_n to d_{n+1}, so
/// mu.size() + 1 == sequence.size()), then the conclusion bound at every index.
/// Both comparisons allow a relative slack `tol`.
PolyakReport verify_polyak(std::span<const double> sequence, std::span<const double> mu,
                           double alpha_minus_one, double tol = 1e-12);

/// d_{n+1} = d_n - mu_{n+1} d_n^{1+a}, i.e. the recursion with equality.
std::vector<double> simulate_polyak_recursion(double d0, std::span<const double> mu,
                                              double alpha_minus_one);

// ---------------------------------------------------------------------------
// Seed averages and rate fits

struct SeedAverage {
  std::vector<std::size_t> iter;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::size_t n_seeds = 0;
};

/// Mean and sample standard deviation of the Bregman distance to the truth,
/// record by record. All histories must share the same iteration grid.
SeedAverage seed_average_bregman(const std::vector<std::vector<IterationRecord>>& histories);

enum class RateModel { linear, algebraic, powerlaw_in_delta };
std::string to_string(RateModel model);

struct RateFit {
  RateModel model = RateModel::linear;
  /// linear: per-iteration contraction factor exp(slope of log E[D] vs k).
  /// algebraic: slope of log E[D] vs log sum mu.
  /// powerlaw_in_delta: slope of log E[D] vs log delta.
  double fitted_rate = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// Half-open range of points (record or cell indices) entering the fit.
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  /// The averaged sequence is identically zero: nothing to fit.
  bool already_converged = false;
};

/// Ordinary least squares of y on x; r^2 is clamped into [0, 1].
RateFit least_squares_fit(std::span<const double> x, std::span<const double> y, RateModel model);

inline constexpr std::size_t kMinRateSeeds = 10;
/// Fraction of the records dropped from the start of a rate fit.
inline constexpr double kBurnInFraction = 0.1;
/// Averages below this multiple of E[D_0] are treated as round-off and cut.
inline constexpr double kRoundoffFloor = 1e-24;

/// Fits the exact-data rate of seed-averaged Bregman distances: log E[D_k]
/// against k when alpha == 1, against log sum_{l<=k} mu_l when alpha > 1.
RateFit fit_exact_rate(const std::vector<std::vector<IterationRecord>>& histories, double alpha,
                       double mu0, double step_decay_exponent);

/// Per-iteration factor 1 - margin mu0 C_alpha / N predicted for alpha = 1,
/// q = p and the l^p product norm on the data space.
double linear_contraction_bound(double margin, double mu0, double C_alpha, std::size_t n_blocks);

// ---------------------------------------------------------------------------
// Noisy rate study

struct NoisyCell {
  double delta = 0.0;
  std::uint64_t k_delta = 0;
  double mean_bregman = 0.0;
  double std_bregman = 0.0;
  std::size_t n_seeds = 0;
};

struct NoisyRateStudy {
  std::vector<NoisyCell> cells;
  RateFit fit;
  double expected_slope = 0.0;
  double slope_tolerance = 0.2;
  bool slope_ok = false;
  bool r_squared_ok = false;
  /// Steps along decreasing delta where the mean Bregman distance rises.
  std::size_t inversions = 0;
  /// Rises larger than one standard error of the difference of the means.
  std::size_t significant_inversions = 0;
  bool passed() const { return slope_ok && r_squared_ok; }
};

struct NoisyStudyOptions {
  std::size_t n_seeds = 20;
  std::uint64_t base_seed = 1;
  /// Relative slope tolerance around p / alpha.
  double slope_tolerance = 0.2;
  double min_r_squared = 0.9;
  /// Worker threads for the (seed, delta) cells; 0 uses default_thread_count().
  std::size_t threads = 0;
};

/// Runs SGD with the a-priori stopping index for every (seed, delta) cell.
/// Each cell perturbs the exact data with Gaussian noise rescaled so that
/// max_i ||y_i^delta - y_i|| equals delta exactly, so delta is the noise level
/// of the theory rather than a nominal magnitude. config.Gamma sets the step
/// budget; config.delta and config.stopping are overridden per cell.
NoisyRateStudy noisy_rate_study(const ForwardProblem& problem, const StabilityParams& stability,
                                std::span<const double> delta_list, const SolverConfig& config,
                                const NoisyStudyOptions& options = {});

/// Perturbs exact unit data with unit-level Gaussian noise rescaled to the level delta.
BlockList noise_at_level(const BlockList& exact, double delta, double r_Y, std::uint64_t seed);

void write_noisy_study_csv(const std::filesystem::path& path, const NoisyRateStudy& study);
void write_noisy_study_summary(const std::filesystem::path& path, const NoisyRateStudy& study);

// ---------------------------------------------------------------------------
// Per-step audits

struct DescentConstants {
  double p = 2.0;
  double gamma = 0.0;
  double L_max = 1.0;
  double G_pstar = 1.0;
};

struct StepAudit {
  /// slack_k = D_{k-1} - p C_k mu_k Psi_i(x_{k-1}) - D_k, one entry per step,
  /// with C_k the admissibility margin at mu_k.
  std::vector<double> slack;
  double min_slack = 0.0;
  /// Smallest margin 1 - gamma - L^{p*} (G/p*) mu^{p*-1} over the steps.
  double min_margin = 0.0;
  /// Steps where the descent inequality fails beyond the tolerance.
  std::vector<std::size_t> violations;
  /// Steps where D increases beyond the tolerance.
  std::vector<std::size_t> increases;
  bool clean() const { return violations.empty() && increases.empty(); }
};

/// Audits the exact-data descent inequality along a traced run (config.trace_steps).
/// Violations are counted when slack < -tol max(1, D_{k-1}).
StepAudit descent_margin_audit(std::span<const StepTrace> steps, const DescentConstants& constants,
                               double tol = 1e-9);

/// Audits D_k <= D_{k-1} + (omega^{-p}/p)(1 + gamma)^p delta^p mu_k along a
/// traced noisy run. `slack` holds the per-step gap, `violations` the failures.
StepAudit noisy_perturbation_audit(std::span<const StepTrace> steps, double p, double gamma,
                                   double omega, double delta, double tol = 1e-9);

}  // namespace bsgd
