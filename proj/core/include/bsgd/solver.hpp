#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsgd/forward_problem.hpp"
#include "bsgd/geometry.hpp"

namespace bsgd {

/// theory: p = max(r_X, 2), q = p (covered by the convergence analysis).
/// practice: p = r_X, q = r_Y (J_r on L^r; no convergence guarantee).
enum class ExponentMode { theory, practice };
/// oracle_best runs max_epochs and reports the iterate with the smallest error
/// to the known truth (best_iterate); it is rejected when no truth is known.
enum class StoppingRule { max_epochs, a_priori, oracle_best };
/// final_only keeps the initial and last records (used by large studies).
enum class RecordGranularity { epoch, iteration, final_only };

std::string to_string(ExponentMode mode);
std::string to_string(StoppingRule rule);
std::string to_string(RecordGranularity granularity);
ExponentMode parse_exponent_mode(const std::string& name);
StoppingRule parse_stopping_rule(const std::string& name);
RecordGranularity parse_granularity(const std::string& name);

struct SolverConfig {
  ExponentMode mode = ExponentMode::theory;
  double r_X = 2.0;
  double r_Y = 2.0;
  double p = 2.0;
  double q = 2.0;
  double mu0 = 1.0;
  /// mu_k = mu0 k^{-decay}; 0 gives constant steps.
  double step_decay_exponent = 0.0;
  /// 0 keeps the batching of the problem; otherwise must divide the unit count.
  std::size_t batch_size = 0;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  StoppingRule stopping = StoppingRule::max_epochs;
  /// Noise level and step budget for the a-priori rule delta^p sum mu <= Gamma.
  double delta = 0.0;
  double Gamma = 0.0;
  /// Constant initial guess used when no explicit x0 is passed.
  double x0_value = 0.0;
  RecordGranularity granularity = RecordGranularity::epoch;
  /// Keep one StepTrace per iteration (for audits).
  bool trace_steps = false;
  /// Abort once ||xi_k|| exceeds this factor times max(||xi_0||, 1).
  double divergence_factor = 1e12;

  /// Exponents (p, q) filled in from the mode.
  static SolverConfig for_mode(ExponentMode mode, double r_X, double r_Y);
  void validate() const;
  GeometryParams x_geometry() const { return GeometryParams::make(r_X, p); }
  GeometryParams y_geometry() const { return GeometryParams::make(r_Y, q); }
};

struct IterationRecord {
  std::size_t iter = 0;
  std::size_t epoch = 0;
  double mu = 0.0;
  /// Block that produced this iterate; -1 for the initial guess and for
  /// full-gradient steps.
  long batch = -1;
  double psi = 0.0;
  double residual = 0.0;
  std::optional<double> rel_l2_error;
  std::optional<double> bregman_to_truth;
};

/// Per-iteration quantities used by the descent audits.
struct StepTrace {
  std::size_t iter = 0;
  double mu = 0.0;
  long block = -1;
  /// Psi_i(x_{k-1}) for the sampled block (the full Psi for full-gradient steps).
  double psi_block = 0.0;
  /// Norm of the block residual F_i(x_{k-1}) - y_i.
  double residual_block = 0.0;
  double bregman_before = std::numeric_limits<double>::quiet_NaN();
  double bregman_after = std::numeric_limits<double>::quiet_NaN();
  /// ||J_p(x_k) - xi_k||_{r*} / max(||xi_k||_{r*}, tiny).
  double dual_primal_gap = 0.0;
};

struct DivergenceInfo {
  std::size_t iter = 0;
  double mu = 0.0;
  long block = -1;
  double dual_norm = 0.0;
  std::string message;
};

struct RunResult {
  std::vector<IterationRecord> history;
  std::vector<StepTrace> steps;
  GridVector final_iterate;
  DualVector final_dual;
  GridVector best_iterate;
  IterationRecord best_record;
  std::size_t iterations = 0;
  std::size_t iterations_per_epoch = 1;
  std::optional<DivergenceInfo> divergence;

  bool diverged() const { return divergence.has_value(); }
};

/// Psi(x) = (1/N) sum_i (1/q) ||F_i(x) - y_i||_{r_Y}^q over all N blocks.
double objective_value(const ForwardProblem& problem, const GridVector& x, const BlockList& y_obs,
                       double q, double r_Y);

/// g = F_i'(x)^* J_q(F_i(x) - y_i) for block i (0-based).
DualVector stochastic_gradient(const ForwardProblem& problem, const GridVector& x,
                               const BlockList& y_obs, std::size_t block_index, double q,
                               double r_Y);

/// Mean of the block gradients: the gradient of Psi.
DualVector full_gradient(const ForwardProblem& problem, const GridVector& x,
                         const BlockList& y_obs, double q, double r_Y);

/// xi' = xi - mu g and x' = J_{p*}(xi').
std::pair<DualVector, GridVector> sgd_step(const DualVector& dual_state, const DualVector& g,
                                           double mu, const GeometryParams& x_geometry);

/// mu_k = mu0 k^{-decay}, k >= 1.
double step_schedule(double mu0, double decay, std::size_t k);

struct Admissibility {
  bool admissible = false;
  /// Minimum over the schedule of 1 - gamma - L^{p*} (G/p*) mu^{p*-1}
  /// (minus (p-1)/p^2 omega^{p*} when omega is given).
  double margin = 0.0;
};

/// Step-size condition of the descent lemma; passing omega selects the noisy
/// variant, which additionally requires gamma < 1/2.
Admissibility check_step_admissibility(std::span<const double> mu_list, double gamma, double L_max,
                                       double G_pstar, double p_star,
                                       std::optional<double> omega = std::nullopt);

/// omega with (p-1)/p^2 omega^{p*} = fraction, i.e. the Young-inequality
/// parameter that consumes `fraction` of the unit margin.
double young_omega(double p, double fraction);

inline constexpr std::uint64_t kUnboundedStopIndex = std::numeric_limits<std::uint64_t>::max();

/// Largest k with delta^p sum_{l<=k} mu_l <= Gamma; kUnboundedStopIndex when
/// the series converges below the budget.
std::uint64_t a_priori_stop_index(double delta, double mu0, double decay, double Gamma, double p);

/// sum_{l=1}^k l^{-decay}, exact for small k, Euler-Maclaurin beyond.
double step_partial_sum(double decay, std::uint64_t k);

/// ||x† - x||_2 / ||x†||_2.
double relative_error(const GridVector& x, const GridVector& x_truth);

RunResult run_sgd(const ForwardProblem& problem, const BlockList& y_obs, const SolverConfig& config);
RunResult run_sgd(const ForwardProblem& problem, const BlockList& y_obs, const SolverConfig& config,
                  const GridVector& x0);

/// Same dual-space update with the full gradient; one iteration per epoch.
RunResult run_landweber(const ForwardProblem& problem, const BlockList& y_obs,
                        const SolverConfig& config);
RunResult run_landweber(const ForwardProblem& problem, const BlockList& y_obs,
                        const SolverConfig& config, const GridVector& x0);

}  // namespace bsgd
