#include "bsgd/rate_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bsgd/errors.hpp"
#include "bsgd/noise.hpp"
#include "bsgd/text_format.hpp"
#include "bsgd/thread_pool.hpp"

namespace bsgd {

void StabilityParams::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InputError("stability exponent alpha must be >= 1");
  if (!(C_alpha > 0.0) || !std::isfinite(C_alpha)) throw InputError("stability constant must be positive");
}

std::string to_string(PolyakVerdict verdict) {
  switch (verdict) {
    case PolyakVerdict::bound_holds: return "bound holds";
    case PolyakVerdict::bound_violated: return "bound violated";
    case PolyakVerdict::hypothesis_violated: return "hypothesis violated";
  }
  return "bound holds";
}

std::string to_string(RateModel model) {
  switch (model) {
    case RateModel::linear: return "linear";
    case RateModel::algebraic: return "algebraic";
    case RateModel::powerlaw_in_delta: return "powerlaw_in_delta";
  }
  return "linear";
}

PolyakReport verify_polyak(std::span<const double> sequence, std::span<const double> mu,
                           double alpha_minus_one, double tol) {
  if (!(alpha_minus_one > 0.0)) throw InputError("verify_polyak: exponent must be positive");
  if (!sequence.empty() && mu.size() + 1 != sequence.size())
    throw InputError("verify_polyak: need one step size per transition");
  PolyakReport report;
  if (sequence.empty()) return report;
  const double a = alpha_minus_one;

  for (std::size_t n = 0; n < sequence.size(); ++n) {
    if (!(sequence[n] >= 0.0) || !std::isfinite(sequence[n])) {
      report.verdict = PolyakVerdict::hypothesis_violated;
      report.first_violation = n;
      return report;
    }
  }
  for (std::size_t n = 0; n + 1 < sequence.size(); ++n) {
    if (!(mu[n] > 0.0)) throw InputError("verify_polyak: step sizes must be positive");
    const double d = sequence[n];
    const double rhs = d - mu[n] * std::pow(d, 1.0 + a);
    if (sequence[n + 1] > rhs + tol * d) {
      report.verdict = PolyakVerdict::hypothesis_violated;
      report.first_violation = n + 1;
      return report;
    }
  }

  const double d0 = sequence[0];
  const double scale = a * std::pow(d0, a);
  double mu_sum = 0.0;
  report.bound.resize(sequence.size());
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    if (n > 0) mu_sum += mu[n - 1];
    report.bound[n] = d0 * std::pow(1.0 + scale * mu_sum, -1.0 / a);
    if (sequence[n] > report.bound[n] * (1.0 + tol) && !report.first_violation) {
      report.verdict = PolyakVerdict::bound_violated;
      report.first_violation = n;
    }
  }
  return report;
}

std::vector<double> simulate_polyak_recursion(double d0, std::span<const double> mu,
                                              double alpha_minus_one) {
  if (!(d0 >= 0.0)) throw InputError("simulate_polyak_recursion: d0 must be nonnegative");
  std::vector<double> d{d0};
  d.reserve(mu.size() + 1);
  for (double m : mu) {
    const double prev = d.back();
    d.push_back(std::max(0.0, prev - m * std::pow(prev, 1.0 + alpha_minus_one)));
  }
  return d;
}

SeedAverage seed_average_bregman(const std::vector<std::vector<IterationRecord>>& histories) {
  if (histories.empty()) throw InputError("seed average over an empty set of runs");
  SeedAverage avg;
  avg.n_seeds = histories.size();
  const auto& first = histories.front();
  for (const auto& h : histories) {
    if (h.size() != first.size()) throw InputError("seed average: histories differ in length");
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (h[j].iter != first[j].iter) throw InputError("seed average: iteration grids differ");
      if (!h[j].bregman_to_truth) throw InputError("seed average: runs carry no ground truth");
    }
  }
  const double n = static_cast<double>(histories.size());
  for (std::size_t j = 0; j < first.size(); ++j) {
    double sum = 0.0;
    for (const auto& h : histories) sum += *h[j].bregman_to_truth;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& h : histories) ss += (*h[j].bregman_to_truth - mean) * (*h[j].bregman_to_truth - mean);
    avg.iter.push_back(first[j].iter);
    avg.mean.push_back(mean);
    avg.stddev.push_back(histories.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
  }
  return avg;
}

RateFit least_squares_fit(std::span<const double> x, std::span<const double> y, RateModel model) {
  if (x.size() != y.size()) throw InputError("least_squares_fit: size mismatch");
  if (x.size() < 3) {
    std::ostringstream msg;
    msg << "rate fit needs at least 3 usable points, got " << x.size();
    throw FitError(msg.str());
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("rate fit: abscissae are all equal");
  RateFit fit;
  fit.model = model;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.fitted_rate = model == RateModel::linear ? std::exp(fit.slope) : fit.slope;
  fit.window_end = x.size();
  return fit;
}

RateFit fit_exact_rate(const std::vector<std::vector<IterationRecord>>& histories, double alpha,
                       double mu0, double step_decay_exponent) {
  if (histories.size() < kMinRateSeeds) {
    std::ostringstream msg;
    msg << "exact-rate fit needs at least " << kMinRateSeeds << " seeds, got " << histories.size();
    throw InputError(msg.str());
  }
  if (!(alpha >= 1.0)) throw InputError("exact-rate fit: alpha must be >= 1");
  const SeedAverage avg = seed_average_bregman(histories);
  const RateModel model = alpha == 1.0 ? RateModel::linear : RateModel::algebraic;

  const double peak = *std::max_element(avg.mean.begin(), avg.mean.end());
  if (peak == 0.0) {
    RateFit fit;
    fit.model = model;
    fit.already_converged = true;
    fit.r_squared = 1.0;
    fit.window_end = avg.mean.size();
    return fit;
  }
  const double reference = avg.mean.front() > 0.0 ? avg.mean.front() : peak;
  const double floor = kRoundoffFloor * reference;
  const std::size_t begin =
      static_cast<std::size_t>(std::ceil(kBurnInFraction * static_cast<double>(avg.mean.size())));

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t end = begin;
  for (std::size_t j = begin; j < avg.mean.size(); ++j) {
    if (!(avg.mean[j] > floor) || !std::isfinite(avg.mean[j])) break;
    double abscissa = static_cast<double>(avg.iter[j]);
    if (model == RateModel::algebraic) {
      if (avg.iter[j] == 0) continue;
      abscissa = std::log(mu0 * step_partial_sum(step_decay_exponent, avg.iter[j]));
    }
    xs.push_back(abscissa);
    ys.push_back(std::log(avg.mean[j]));
    end = j + 1;
  }
  RateFit fit = least_squares_fit(xs, ys, model);
  fit.window_begin = begin;
  fit.window_end = end;
  return fit;
}

double linear_contraction_bound(double margin, double mu0, double C_alpha, std::size_t n_blocks) {
  if (n_blocks == 0) throw InputError("linear_contraction_bound: no blocks");
  return 1.0 - margin * mu0 * C_alpha / static_cast<double>(n_blocks);
}

BlockList noise_at_level(const BlockList& exact, double delta, double r_Y, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InputError("noise level must be positive");
  const BlockList raw = add_gaussian(exact, 1.0, seed);
  const double level = noise_level(exact, raw, r_Y).max;
  if (!(level > 0.0)) throw RuntimeFailure("Gaussian perturbation vanished; data are zero");
  const double scale = delta / level;
  BlockList out;
  out.reserve(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) out.push_back(exact[i] + scale * (raw[i] - exact[i]));
  return out;
}

NoisyRateStudy noisy_rate_study(const ForwardProblem& problem, const StabilityParams& stability,
                                std::span<const double> delta_list, const SolverConfig& config,
                                const NoisyStudyOptions& options) {
  stability.validate();
  if (delta_list.empty()) throw InputError("noisy rate study: empty delta list");
  if (delta_list.size() < 3) {
    std::ostringstream msg;
    msg << "noisy rate study: a slope fit needs at least 3 noise levels, got " << delta_list.size();
    throw FitError(msg.str());
  }
  for (double d : delta_list)
    if (!(d > 0.0) || !std::isfinite(d)) throw InputError("noisy rate study: noise levels must be positive");
  const auto [dmin, dmax] = std::minmax_element(delta_list.begin(), delta_list.end());
  if (std::log10(*dmax / *dmin) < 1.5 - 1e-9)
    throw InputError("noisy rate study: noise levels must span at least 1.5 decades");
  if (!problem.truth()) throw InputError("noisy rate study: the problem has no ground truth");
  if (options.n_seeds == 0) throw InputError("noisy rate study: need at least one seed");

  const std::size_t n_delta = delta_list.size();
  const std::size_t n_cells = n_delta * options.n_seeds;
  std::vector<double> bregman(n_cells, 0.0);
  std::vector<std::uint64_t> k_delta(n_delta, 0);
  for (std::size_t d = 0; d < n_delta; ++d) {
    k_delta[d] = a_priori_stop_index(delta_list[d], config.mu0, config.step_decay_exponent,
                                     config.Gamma, config.p);
  }

  parallel_for(n_cells, options.threads, [&](std::size_t cell) {
    const std::size_t s = cell / n_delta;
    const std::size_t d = cell % n_delta;
    const std::uint64_t seed = options.base_seed + s;
    SolverConfig c = config;
    c.seed = seed;
    c.delta = delta_list[d];
    c.stopping = StoppingRule::a_priori;
    c.granularity = RecordGranularity::final_only;
    c.trace_steps = false;
    // Same noise direction for every delta of a seed; only its size changes.
    const BlockList y = noise_at_level(problem.exact_data(), delta_list[d], c.r_Y, seed);
    const RunResult run = run_sgd(problem, y, c);
    if (run.diverged()) {
      std::ostringstream msg;
      msg << "noisy rate study: run diverged (seed " << seed << ", delta " << delta_list[d]
          << "): " << run.divergence->message;
      throw RuntimeFailure(msg.str());
    }
    bregman[cell] = *run.history.back().bregman_to_truth;
  });

  NoisyRateStudy study;
  study.expected_slope = config.p / stability.alpha;
  study.slope_tolerance = options.slope_tolerance;
  const double n = static_cast<double>(options.n_seeds);
  for (std::size_t d = 0; d < n_delta; ++d) {
    NoisyCell cell;
    cell.delta = delta_list[d];
    cell.k_delta = k_delta[d];
    cell.n_seeds = options.n_seeds;
    double sum = 0.0;
    for (std::size_t s = 0; s < options.n_seeds; ++s) sum += bregman[s * n_delta + d];
    cell.mean_bregman = sum / n;
    double ss = 0.0;
    for (std::size_t s = 0; s < options.n_seeds; ++s) {
      const double e = bregman[s * n_delta + d] - cell.mean_bregman;
      ss += e * e;
    }
    cell.std_bregman = options.n_seeds > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    study.cells.push_back(cell);
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& cell : study.cells) {
    if (cell.mean_bregman > 0.0) {
      xs.push_back(std::log(cell.delta));
      ys.push_back(std::log(cell.mean_bregman));
    }
  }
  study.fit = least_squares_fit(xs, ys, RateModel::powerlaw_in_delta);
  study.fit.window_end = n_delta;
  study.slope_ok = std::abs(study.fit.slope - study.expected_slope) <=
                   options.slope_tolerance * study.expected_slope;
  study.r_squared_ok = study.fit.r_squared >= options.min_r_squared;

  std::vector<NoisyCell> by_delta = study.cells;
  std::sort(by_delta.begin(), by_delta.end(),
            [](const NoisyCell& a, const NoisyCell& b) { return a.delta > b.delta; });
  for (std::size_t i = 1; i < by_delta.size(); ++i) {
    const double rise = by_delta[i].mean_bregman - by_delta[i - 1].mean_bregman;
    if (rise <= 0.0) continue;
    ++study.inversions;
    const double se = std::sqrt(by_delta[i].std_bregman * by_delta[i].std_bregman / n +
                                by_delta[i - 1].std_bregman * by_delta[i - 1].std_bregman / n);
    if (rise > se) ++study.significant_inversions;
  }
  return study;
}

void write_noisy_study_csv(const std::filesystem::path& path, const NoisyRateStudy& study) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "delta,k_delta,mean_bregman,std_bregman,n_seeds\n";
  for (const auto& c : study.cells) {
    out << format_double(c.delta) << ',' << c.k_delta << ',' << format_double(c.mean_bregman) << ','
        << format_double(c.std_bregman) << ',' << c.n_seeds << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

void write_noisy_study_summary(const std::filesystem::path& path, const NoisyRateStudy& study) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "{\n"
      << "  \"model\": \"" << to_string(study.fit.model) << "\",\n"
      << "  \"fitted_slope\": " << format_double(study.fit.slope) << ",\n"
      << "  \"intercept\": " << format_double(study.fit.intercept) << ",\n"
      << "  \"r_squared\": " << format_double(study.fit.r_squared) << ",\n"
      << "  \"expected_slope\": " << format_double(study.expected_slope) << ",\n"
      << "  \"slope_tolerance\": " << format_double(study.slope_tolerance) << ",\n"
      << "  \"slope_ok\": " << (study.slope_ok ? "true" : "false") << ",\n"
      << "  \"r_squared_ok\": " << (study.r_squared_ok ? "true" : "false") << ",\n"
      << "  \"inversions\": " << study.inversions << ",\n"
      << "  \"significant_inversions\": " << study.significant_inversions << ",\n"
      << "  \"n_levels\": " << study.cells.size() << "\n"
      << "}\n";
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

namespace {

void require_truth(const StepTrace& s) {
  if (std::isnan(s.bregman_before) || std::isnan(s.bregman_after))
    throw InputError("step audit needs Bregman distances to a known truth");
}

void finish(StepAudit& audit) {
  audit.min_slack = audit.slack.empty() ? 0.0 : *std::min_element(audit.slack.begin(), audit.slack.end());
}

}  // namespace

StepAudit descent_margin_audit(std::span<const StepTrace> steps, const DescentConstants& constants,
                               double tol) {
  if (!(constants.p > 1.0)) throw InputError("descent audit: p must exceed 1");
  const double p = constants.p;
  const double p_star = p / (p - 1.0);
  const double lip = std::pow(constants.L_max, p_star) * constants.G_pstar / p_star;
  StepAudit audit;
  audit.min_margin = std::numeric_limits<double>::infinity();
  audit.slack.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepTrace& s = steps[k];
    require_truth(s);
    const double margin = 1.0 - constants.gamma - lip * std::pow(s.mu, p_star - 1.0);
    audit.min_margin = std::min(audit.min_margin, margin);
    const double slack = s.bregman_before - p * margin * s.mu * s.psi_block - s.bregman_after;
    audit.slack.push_back(slack);
    const double scale = std::max(1.0, s.bregman_before);
    if (slack < -tol * scale) audit.violations.push_back(k);
    if (s.bregman_after > s.bregman_before + tol * scale) audit.increases.push_back(k);
  }
  if (steps.empty()) audit.min_margin = 0.0;
  finish(audit);
  return audit;
}

StepAudit noisy_perturbation_audit(std::span<const StepTrace> steps, double p, double gamma,
                                   double omega, double delta, double tol) {
  if (!(p > 1.0) || !(omega > 0.0) || !(delta >= 0.0))
    throw InputError("noisy audit: need p > 1, omega > 0, delta >= 0");
  const double budget = std::pow(omega, -p) / p * std::pow(1.0 + gamma, p) * std::pow(delta, p);
  StepAudit audit;
  audit.slack.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepTrace& s = steps[k];
    require_truth(s);
    const double gap = s.bregman_before + budget * s.mu - s.bregman_after;
    audit.slack.push_back(gap);
    const double scale = std::max(1.0, s.bregman_before);
    if (gap < -tol * scale) audit.violations.push_back(k);
  }
  finish(audit);
  return audit;
}

}  // namespace bsgd
