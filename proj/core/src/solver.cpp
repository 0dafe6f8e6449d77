#include "bsgd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsgd/rng.hpp"

namespace bsgd {

std::string to_string(ExponentMode mode) {
  return mode == ExponentMode::theory ? "theory" : "practice";
}

std::string to_string(StoppingRule rule) {
  switch (rule) {
    case StoppingRule::max_epochs: return "max_epochs";
    case StoppingRule::a_priori: return "a_priori";
    case StoppingRule::oracle_best: return "oracle_best";
  }
  return "max_epochs";
}

std::string to_string(RecordGranularity granularity) {
  switch (granularity) {
    case RecordGranularity::epoch: return "epoch";
    case RecordGranularity::iteration: return "iteration";
    case RecordGranularity::final_only: return "final";
  }
  return "epoch";
}

ExponentMode parse_exponent_mode(const std::string& name) {
  if (name == "theory") return ExponentMode::theory;
  if (name == "practice") return ExponentMode::practice;
  throw InputError("unknown exponent mode '" + name + "'");
}

StoppingRule parse_stopping_rule(const std::string& name) {
  if (name == "max_epochs") return StoppingRule::max_epochs;
  if (name == "a_priori") return StoppingRule::a_priori;
  if (name == "oracle_best") return StoppingRule::oracle_best;
  throw InputError("unknown stopping rule '" + name + "'");
}

RecordGranularity parse_granularity(const std::string& name) {
  if (name == "epoch") return RecordGranularity::epoch;
  if (name == "iteration") return RecordGranularity::iteration;
  if (name == "final") return RecordGranularity::final_only;
  throw InputError("unknown record granularity '" + name + "'");
}

SolverConfig SolverConfig::for_mode(ExponentMode mode, double r_X, double r_Y) {
  SolverConfig c;
  c.mode = mode;
  c.r_X = r_X;
  c.r_Y = r_Y;
  if (mode == ExponentMode::theory) {
    c.p = std::max(r_X, 2.0);
    c.q = c.p;
  } else {
    c.p = r_X;
    c.q = r_Y;
  }
  return c;
}

void SolverConfig::validate() const {
  // GeometryParams::make rejects exponents outside (1, inf).
  (void)x_geometry();
  (void)y_geometry();
  const SolverConfig expected = for_mode(mode, r_X, r_Y);
  if (p != expected.p || q != expected.q) {
    std::ostringstream msg;
    msg << "exponents (p, q) = (" << p << ", " << q << ") are inconsistent with " << to_string(mode)
        << " mode, which requires (" << expected.p << ", " << expected.q << ")";
    throw InputError(msg.str());
  }
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) throw InputError("mu0 must be positive");
  if (!(step_decay_exponent >= 0.0)) throw InputError("step decay exponent must be >= 0");
  if (!(divergence_factor > 1.0)) throw InputError("divergence factor must exceed 1");
  if (!std::isfinite(x0_value)) throw InputError("x0 must be finite");
  if (stopping == StoppingRule::a_priori && (!(delta > 0.0) || !(Gamma > 0.0)))
    throw InputError("a-priori stopping needs delta > 0 and Gamma > 0");
  if (stopping != StoppingRule::a_priori && max_epochs == 0)
    throw InputError("max_epochs must be positive");
}

namespace {

struct BlockResidual {
  std::vector<double> residual;
  double norm = 0.0;
};

BlockResidual block_residual(const ForwardProblem& problem, const GridVector& x,
                             const GridVector& y_block, std::size_t i, double r_Y) {
  const GridVector fx = problem.apply(i, x);
  BlockResidual out;
  out.residual.resize(fx.size());
  for (std::size_t j = 0; j < fx.size(); ++j) out.residual[j] = fx[j] - y_block[j];
  out.norm = lr_norm(out.residual, r_Y);
  return out;
}

DualVector gradient_from_residual(const ForwardProblem& problem, const GridVector& x,
                                  const BlockResidual& res, std::size_t i, double q, double r_Y) {
  std::vector<double> jq(res.residual.size());
  apply_duality_kernel(res.residual, r_Y, q, jq);
  return problem.adjoint(i, x, DualVector(std::move(jq), problem.block_shape()));
}

double objective_blocks(const ForwardProblem& problem, const GridVector& x,
                        const std::vector<GridVector>& y_blocks, double q, double r_Y,
                        double* residual_out) {
  double psi = 0.0;
  std::vector<double> norms;
  norms.reserve(y_blocks.size());
  for (std::size_t i = 0; i < y_blocks.size(); ++i) {
    const BlockResidual res = block_residual(problem, x, y_blocks[i], i, r_Y);
    psi += std::pow(res.norm, q) / q;
    norms.push_back(res.norm);
  }
  if (residual_out) *residual_out = lr_norm(norms, r_Y);
  return psi / static_cast<double>(y_blocks.size());
}

double sum_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double objective_value(const ForwardProblem& problem, const GridVector& x, const BlockList& y_obs,
                       double q, double r_Y) {
  return objective_blocks(problem, x, problem.gather_blocks(y_obs), q, r_Y, nullptr);
}

DualVector stochastic_gradient(const ForwardProblem& problem, const GridVector& x,
                               const BlockList& y_obs, std::size_t block_index, double q,
                               double r_Y) {
  const GridVector y_block = problem.gather_block(block_index, y_obs);
  const BlockResidual res = block_residual(problem, x, y_block, block_index, r_Y);
  return gradient_from_residual(problem, x, res, block_index, q, r_Y);
}

DualVector full_gradient(const ForwardProblem& problem, const GridVector& x,
                         const BlockList& y_obs, double q, double r_Y) {
  const std::size_t n = problem.num_blocks();
  std::vector<double> acc(shape_size(problem.domain_shape()), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const DualVector g = stochastic_gradient(problem, x, y_obs, i, q, r_Y);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
  }
  for (auto& v : acc) v /= static_cast<double>(n);
  return DualVector(std::move(acc), problem.domain_shape());
}

std::pair<DualVector, GridVector> sgd_step(const DualVector& dual_state, const DualVector& g,
                                           double mu, const GeometryParams& x_geometry) {
  if (!(mu > 0.0)) throw InputError("sgd_step: step size must be positive");
  if (!dual_state.same_shape(g)) throw InputError("sgd_step: shape mismatch");
  std::vector<double> xi(dual_state.size());
  for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = dual_state[j] - mu * g[j];
  if (!all_finite(xi)) throw RuntimeFailure("sgd_step: non-finite dual state");
  DualVector next(std::move(xi), dual_state.shape());
  GridVector primal = inverse_duality_map(next, x_geometry);
  return {std::move(next), std::move(primal)};
}

double step_schedule(double mu0, double decay, std::size_t k) {
  if (k == 0) throw InputError("step_schedule: iteration index starts at 1");
  if (decay == 0.0) return mu0;
  return mu0 * std::pow(static_cast<double>(k), -decay);
}

Admissibility check_step_admissibility(std::span<const double> mu_list, double gamma, double L_max,
                                       double G_pstar, double p_star,
                                       std::optional<double> omega) {
  if (mu_list.empty()) throw InputError("check_step_admissibility: empty step list");
  if (!(p_star > 1.0)) throw InputError("check_step_admissibility: p* must exceed 1");
  const double p = p_star / (p_star - 1.0);
  const double lip = std::pow(L_max, p_star) * G_pstar / p_star;
  double young = 0.0;
  if (omega) young = (p - 1.0) / (p * p) * std::pow(*omega, p_star);
  double margin = std::numeric_limits<double>::infinity();
  for (double mu : mu_list) {
    if (!(mu > 0.0)) throw InputError("check_step_admissibility: step sizes must be positive");
    margin = std::min(margin, 1.0 - gamma - lip * std::pow(mu, p_star - 1.0) - young);
  }
  Admissibility out;
  out.margin = margin;
  out.admissible = margin > 0.0 && (!omega || gamma < 0.5);
  return out;
}

double young_omega(double p, double fraction) {
  const double p_star = p / (p - 1.0);
  return std::pow(fraction * p * p / (p - 1.0), 1.0 / p_star);
}

double step_partial_sum(double decay, std::uint64_t k) {
  if (decay == 0.0) return static_cast<double>(k);
  constexpr std::uint64_t kDirect = 100000;
  if (k <= kDirect) {
    double s = 0.0;
    for (std::uint64_t l = k; l >= 1; --l) s += std::pow(static_cast<double>(l), -decay);
    return s;
  }
  // Direct head plus Euler-Maclaurin tail from M to k.
  constexpr std::uint64_t M = 1000;
  double head = 0.0;
  for (std::uint64_t l = M - 1; l >= 1; --l) head += std::pow(static_cast<double>(l), -decay);
  const double a = decay;
  const double m = static_cast<double>(M);
  const double kk = static_cast<double>(k);
  const double integral =
      a == 1.0 ? std::log(kk / m) : (std::pow(kk, 1.0 - a) - std::pow(m, 1.0 - a)) / (1.0 - a);
  auto f = [a](double x) { return std::pow(x, -a); };
  auto d1 = [a](double x) { return -a * std::pow(x, -a - 1.0); };
  auto d3 = [a](double x) { return -a * (a + 1.0) * (a + 2.0) * std::pow(x, -a - 3.0); };
  const double tail = integral + 0.5 * (f(m) + f(kk)) + (d1(kk) - d1(m)) / 12.0 -
                      (d3(kk) - d3(m)) / 720.0;
  return head + tail;
}

std::uint64_t a_priori_stop_index(double delta, double mu0, double decay, double Gamma, double p) {
  if (!(delta > 0.0)) throw InputError("a_priori_stop_index: delta must be positive");
  if (!(Gamma > 0.0)) throw InputError("a_priori_stop_index: Gamma must be positive");
  if (!(mu0 > 0.0)) throw InputError("a_priori_stop_index: mu0 must be positive");
  if (!(decay >= 0.0)) throw InputError("a_priori_stop_index: decay must be >= 0");
  if (!(p > 1.0)) throw InputError("a_priori_stop_index: p must exceed 1");
  // Budget in units of mu0: largest k with S(k) <= budget.
  const double budget = Gamma / (std::pow(delta, p) * mu0);
  if (!std::isfinite(budget) || budget >= 9.0e18) return kUnboundedStopIndex;
  if (decay == 0.0) {
    auto k = static_cast<std::uint64_t>(std::floor(budget));
    const double dp = std::pow(delta, p);
    while (k > 0 && dp * mu0 * static_cast<double>(k) > Gamma) --k;
    while (dp * mu0 * static_cast<double>(k + 1) <= Gamma) ++k;
    return k;
  }
  if (decay > 1.0) {
    // The series converges: compare the budget with its limit.
    const double a = decay;
    constexpr double M = 1000.0;
    double head = 0.0;
    for (int l = 999; l >= 1; --l) head += std::pow(static_cast<double>(l), -a);
    const double limit = head + std::pow(M, 1.0 - a) / (a - 1.0) + 0.5 * std::pow(M, -a) +
                         a * std::pow(M, -a - 1.0) / 12.0 -
                         a * (a + 1.0) * (a + 2.0) * std::pow(M, -a - 3.0) / 720.0;
    if (limit <= budget) return kUnboundedStopIndex;
  }
  if (step_partial_sum(decay, 1) > budget) return 0;
  std::uint64_t lo = 1;
  std::uint64_t hi = 2;
  while (step_partial_sum(decay, hi) <= budget) {
    lo = hi;
    if (hi > (kUnboundedStopIndex >> 2)) return kUnboundedStopIndex;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (step_partial_sum(decay, mid) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double relative_error(const GridVector& x, const GridVector& x_truth) {
  if (!x.same_shape(x_truth)) throw InputError("relative_error: shape mismatch");
  const double ref = sum_sq(x_truth.values());
  if (ref == 0.0) throw InputError("relative_error: zero reference");
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double e = x_truth[j] - x[j];
    d += e * e;
  }
  return std::sqrt(d / ref);
}

namespace {

enum class UpdateKind { sgd, landweber };

class Runner {
 public:
  Runner(const ForwardProblem& problem, const BlockList& y_obs, const SolverConfig& config,
         UpdateKind method)
      : problem_(config.batch_size == 0 || config.batch_size == problem.batch_size()
                     ? problem
                     : problem.rebatched(config.batch_size)),
        config_(config),
        method_(method),
        x_geom_(config.x_geometry()),
        y_blocks_(problem_.gather_blocks(y_obs)) {
    config_.validate();
    // oracle_best runs to max_epochs; the best-by-error iterate is the answer, so the truth is needed.
    if (config_.stopping == StoppingRule::oracle_best && !problem_.truth())
      throw InputError("oracle_best stopping needs a known ground truth");
  }

  RunResult run(const GridVector& x0) {
    if (x0.shape() != problem_.domain_shape())
      throw InputError("initial guess has shape " + shape_string(x0.shape()) + ", expected " +
                       shape_string(problem_.domain_shape()));
    const std::size_t n_blocks = problem_.num_blocks();
    RunResult result;
    result.iterations_per_epoch = method_ == UpdateKind::sgd ? n_blocks : 1;
    const std::size_t total = total_iterations(result.iterations_per_epoch);

    GridVector x = x0;
    DualVector xi = duality_map(x, x_geom_);
    const double xi_ref = std::max(lr_norm(xi, x_geom_.r_star()), 1.0);
    double bregman_prev = config_.trace_steps ? truth_bregman(x) : 0.0;

    record(result, x, 0, 0.0, -1);
    result.best_iterate = x;
    result.best_record = result.history.back();

    CounterRng rng(config_.seed, 0x5ed);
    const double q = config_.q;
    const double r_Y = config_.r_Y;
    for (std::size_t k = 1; k <= total; ++k) {
      const double mu = step_schedule(config_.mu0, config_.step_decay_exponent, k);
      long block = -1;
      double psi_block = 0.0;
      double residual_block = 0.0;
      DualVector g;
      if (method_ == UpdateKind::sgd) {
        const std::size_t i = static_cast<std::size_t>(rng.index(n_blocks));
        block = static_cast<long>(i);
        const BlockResidual res = block_residual(problem_, x, y_blocks_[i], i, r_Y);
        psi_block = std::pow(res.norm, q) / q;
        residual_block = res.norm;
        g = gradient_from_residual(problem_, x, res, i, q, r_Y);
      } else {
        std::vector<double> acc(x.size(), 0.0);
        std::vector<double> norms;
        for (std::size_t i = 0; i < n_blocks; ++i) {
          const BlockResidual res = block_residual(problem_, x, y_blocks_[i], i, r_Y);
          psi_block += std::pow(res.norm, q) / q;
          norms.push_back(res.norm);
          const DualVector gi = gradient_from_residual(problem_, x, res, i, q, r_Y);
          for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += gi[j];
        }
        for (auto& v : acc) v /= static_cast<double>(n_blocks);
        psi_block /= static_cast<double>(n_blocks);
        residual_block = lr_norm(norms, r_Y);
        g = DualVector(std::move(acc), x.shape());
      }

      std::vector<double> next(xi.size());
      for (std::size_t j = 0; j < next.size(); ++j) next[j] = xi[j] - mu * g[j];
      const bool finite = all_finite(next);
      const double dual_norm = finite ? lr_norm(next, x_geom_.r_star()) : kInfinity;
      std::vector<double> primal(next.size());
      if (finite) apply_duality_kernel(next, x_geom_.r_star(), x_geom_.p_star(), primal);
      if (!finite || !all_finite(primal) || dual_norm > config_.divergence_factor * xi_ref) {
        std::ostringstream msg;
        msg << "divergence at iteration " << k << ": dual norm " << dual_norm << " exceeds "
            << config_.divergence_factor << " x " << xi_ref << " (mu = " << mu << ")";
        result.divergence = DivergenceInfo{k, mu, block, dual_norm, msg.str()};
        break;
      }
      xi = DualVector(std::move(next), x.shape());
      x = GridVector(std::move(primal), x.shape());
      result.iterations = k;

      const double bregman_now = config_.trace_steps ? truth_bregman(x) : 0.0;
      if (config_.trace_steps) {
        StepTrace t;
        t.iter = k;
        t.mu = mu;
        t.block = block;
        t.psi_block = psi_block;
        t.residual_block = residual_block;
        t.bregman_before = bregman_prev;
        t.bregman_after = bregman_now;
        const DualVector jx = duality_map(x, x_geom_);
        t.dual_primal_gap = lr_norm(jx - xi, x_geom_.r_star()) /
                            std::max(lr_norm(xi, x_geom_.r_star()), 1e-300);
        result.steps.push_back(t);
      }
      bregman_prev = bregman_now;

      const bool epoch_end = k % result.iterations_per_epoch == 0;
      const bool wanted = config_.granularity == RecordGranularity::iteration ||
                          (config_.granularity == RecordGranularity::epoch && epoch_end) ||
                          k == total;
      if (wanted) {
        record(result, x, k, mu, block);
        if (better(result.history.back(), result.best_record)) {
          result.best_record = result.history.back();
          result.best_iterate = x;
        }
      }
    }
    result.final_iterate = x;
    result.final_dual = xi;
    return result;
  }

 private:
  std::size_t total_iterations(std::size_t per_epoch) const {
    if (config_.stopping == StoppingRule::a_priori) {
      const std::uint64_t k = a_priori_stop_index(config_.delta, config_.mu0,
                                                  config_.step_decay_exponent, config_.Gamma,
                                                  config_.p);
      if (k == kUnboundedStopIndex)
        throw InputError("a-priori stopping index is unbounded for this step schedule");
      return static_cast<std::size_t>(k);
    }
    return config_.max_epochs * per_epoch;
  }

  double truth_bregman(const GridVector& x) const {
    if (!problem_.truth()) return std::numeric_limits<double>::quiet_NaN();
    return bregman_distance(x, *problem_.truth(), x_geom_);
  }

  void record(RunResult& result, const GridVector& x, std::size_t k, double mu, long block) const {
    IterationRecord r;
    r.iter = k;
    r.epoch = k / result.iterations_per_epoch;
    r.mu = mu;
    r.batch = block;
    r.psi = objective_blocks(problem_, x, y_blocks_, config_.q, config_.r_Y, &r.residual);
    if (problem_.truth()) {
      r.rel_l2_error = relative_error(x, *problem_.truth());
      r.bregman_to_truth = bregman_distance(x, *problem_.truth(), x_geom_);
    }
    result.history.push_back(r);
  }

  static bool better(const IterationRecord& a, const IterationRecord& b) {
    if (a.rel_l2_error && b.rel_l2_error) return *a.rel_l2_error < *b.rel_l2_error;
    return a.residual < b.residual;
  }

  ForwardProblem problem_;
  SolverConfig config_;
  UpdateKind method_;
  GeometryParams x_geom_;
  std::vector<GridVector> y_blocks_;
};

}  // namespace

RunResult run_sgd(const ForwardProblem& problem, const BlockList& y_obs, const SolverConfig& config) {
  return run_sgd(problem, y_obs, config, GridVector::filled(problem.domain_shape(), config.x0_value));
}

RunResult run_sgd(const ForwardProblem& problem, const BlockList& y_obs, const SolverConfig& config,
                  const GridVector& x0) {
  return Runner(problem, y_obs, config, UpdateKind::sgd).run(x0);
}

RunResult run_landweber(const ForwardProblem& problem, const BlockList& y_obs,
                        const SolverConfig& config) {
  return run_landweber(problem, y_obs, config,
                       GridVector::filled(problem.domain_shape(), config.x0_value));
}

RunResult run_landweber(const ForwardProblem& problem, const BlockList& y_obs,
                        const SolverConfig& config, const GridVector& x0) {
  return Runner(problem, y_obs, config, UpdateKind::landweber).run(x0);
}

}  // namespace bsgd
