#include "bsgd/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bsgd/array_io.hpp"
#include "bsgd/errors.hpp"
#include "bsgd/models.hpp"
#include "bsgd/operator_estimates.hpp"
#include "bsgd/phantom.hpp"
#include "bsgd/rate_lab.hpp"
#include "bsgd/text_format.hpp"
#include "bsgd/thread_pool.hpp"

namespace bsgd {

namespace fs = std::filesystem;

namespace {

GridVector schlieren_truth(const RunConfig& c) {
  const auto& p = c.problem;
  if (!p.phantom_file.empty()) {
    GridVector phantom = read_array(fs::path(p.phantom_file));
    if (phantom.shape() != Shape{p.rows, p.cols})
      throw InputError("phantom file " + p.phantom_file + " has shape " +
                       shape_string(phantom.shape()) + ", config expects " +
                       shape_string(Shape{p.rows, p.cols}));
    return phantom;
  }
  return make_phantom(PhantomKind::sparse_blobs, {p.rows, p.cols}, p.n_blobs, p.amplitude,
                      p.phantom_seed);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw RuntimeFailure("cannot create output directory " + dir.string() +
                         (ec ? ": " + ec.message() : std::string()));
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

std::string optional_text(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("n/a");
}

std::string dir_label(SweepAxis axis, double value) {
  return to_string(axis) + "_" + format_double(value);
}

}  // namespace

ForwardProblem build_forward_problem(const RunConfig& config) {
  config.validate();
  const auto& p = config.problem;
  if (config.kind == ExperimentKind::schlieren) {
    const std::size_t n_det = p.n_detectors == 0 ? p.cols : p.n_detectors;
    auto model = make_schlieren_model(p.rows, p.cols, p.n_angles, n_det);
    return ForwardProblem(model, p.batch_size).with_truth(schlieren_truth(config));
  }
  BenchmarkOptions options;
  options.batch_size = p.batch_size;
  options.working_radius = p.working_radius;
  options.r_Y = config.solver.r_Y;
  ForwardProblem problem = build_benchmark(p.dim, p.diag_min, p.diag_max, p.beta, options);
  return problem.with_truth(GridVector::filled(problem.domain_shape(), p.truth_value));
}

PreparedProblem prepare_problem(const RunConfig& config) {
  ForwardProblem problem = build_forward_problem(config);
  BlockList y_obs = apply_noise(problem.exact_data(), config.noise);
  NoiseLevel level = noise_level(problem.exact_data(), y_obs, config.solver.r_Y);
  PreparedProblem prepared{std::move(problem), std::move(y_obs), std::move(level), {}, {}};
  if (config.estimates.enabled) {
    const auto& e = config.estimates;
    const GridVector& center = *prepared.problem.truth();
    prepared.gamma_hat = estimate_tcc_gamma(prepared.problem, center, e.radius, e.n_samples, e.seed,
                                            config.solver.r_Y);
    prepared.L_hat = estimate_lipschitz_Lmax(prepared.problem, center, e.radius, e.n_samples,
                                             e.seed, e.power_iterations);
  }
  return prepared;
}

void write_history_csv(const fs::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out = open_output(path);
  out << "epoch,iter,mu,batch,psi,residual,rel_l2_err,bregman\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.iter << ',' << format_double(r.mu) << ',';
    if (r.batch >= 0) out << r.batch;
    out << ',' << format_double(r.psi) << ',' << format_double(r.residual) << ','
        << format_optional(r.rel_l2_error) << ',' << format_optional(r.bregman_to_truth) << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

RunSummary execute_run(const RunConfig& config, const fs::path& out_dir, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedProblem prep = prepare_problem(config);
  SolverConfig sc = config.solver_config();
  sc.delta = prep.noise.max;
  if (sc.stopping == StoppingRule::a_priori && !(sc.delta > 0.0))
    throw InputError("a_priori stopping needs noisy data (noise level is zero)");
  ensure_directory(out_dir);

  if (log) {
    *log << "[" << config.name << "] " << to_string(config.kind) << ", "
         << prep.problem.num_blocks() << " blocks of " << prep.problem.batch_size()
         << ", r_X = " << sc.r_X << ", r_Y = " << sc.r_Y << ", p = " << sc.p << ", q = " << sc.q
         << ", mu0 = " << sc.mu0 << ", delta = " << prep.noise.max << "\n";
  }

  std::optional<std::uint64_t> k_delta;
  if (sc.delta > 0.0) k_delta = a_priori_stop_index(sc.delta, sc.mu0, sc.step_decay_exponent, sc.Gamma, sc.p);

  const RunResult result = config.solver.method == Method::sgd
                               ? run_sgd(prep.problem, prep.y_obs, sc)
                               : run_landweber(prep.problem, prep.y_obs, sc);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_history_csv(out_dir / "history.csv", result.history);
  write_array(out_dir / "best.bsgd", result.best_iterate);
  write_array(out_dir / "final.bsgd", result.final_iterate);

  RunSummary summary;
  summary.best_rel_error = result.best_record.rel_l2_error;
  summary.best_epoch = result.best_record.epoch;
  summary.final_rel_error = result.history.back().rel_l2_error;
  summary.final_residual = result.history.back().residual;
  summary.iterations = result.iterations;
  summary.diverged = result.diverged();
  summary.wall_seconds = wall;

  const auto admissibility = check_step_admissibility(
      std::vector<double>{sc.mu0}, prep.gamma_hat.value_or(prep.problem.bounds().gamma),
      prep.L_hat.value_or(prep.problem.bounds().L_max), sc.x_geometry().dual_smoothness_constant().value_or(1.0),
      sc.x_geometry().p_star());

  RunConfig recorded = config;
  recorded.output_dir = out_dir.string();
  std::ofstream manifest = open_output(out_dir / "manifest.txt");
  manifest << serialize_config(recorded) << "\n"
           << "[results]\n"
           << "mu0_used = " << format_double(sc.mu0) << "\n"
           << "p = " << format_double(sc.p) << "\n"
           << "q = " << format_double(sc.q) << "\n"
           << "num_blocks = " << prep.problem.num_blocks() << "\n"
           << "iterations_per_epoch = " << result.iterations_per_epoch << "\n"
           << "gamma_hat = " << optional_text(prep.gamma_hat) << "\n"
           << "L_hat = " << optional_text(prep.L_hat) << "\n"
           << "gamma_bound = " << format_double(prep.problem.bounds().gamma) << "\n"
           << "gamma_bound_is_estimate = " << (prep.problem.bounds().gamma_estimated ? "true" : "false") << "\n"
           << "L_bound = " << format_double(prep.problem.bounds().L_max) << "\n"
           << "step_margin = " << format_double(admissibility.margin) << "\n"
           << "step_admissible = " << (admissibility.admissible ? "true" : "false") << "\n"
           << "delta = " << format_double(prep.noise.max) << "\n"
           << "k_delta = "
           << (k_delta ? (*k_delta == kUnboundedStopIndex ? std::string("unbounded") : std::to_string(*k_delta))
                       : std::string("n/a"))
           << "\n"
           << "iterations = " << result.iterations << "\n"
           << "best_epoch = " << summary.best_epoch << "\n"
           << "best_rel_l2_err = " << optional_text(summary.best_rel_error) << "\n"
           << "final_rel_l2_err = " << optional_text(summary.final_rel_error) << "\n"
           << "final_residual = " << format_double(summary.final_residual) << "\n"
           << "diverged = " << (summary.diverged ? "true" : "false") << "\n"
           << "wall_seconds = " << format_double(wall) << "\n";
  if (!manifest) throw RuntimeFailure("write failed: manifest.txt");

  if (log) {
    if (result.diverged()) *log << "[" << config.name << "] " << result.divergence->message << "\n";
    *log << "[" << config.name << "] " << result.iterations << " iterations in " << wall
         << " s, best rel. error " << optional_text(summary.best_rel_error) << " at epoch "
         << summary.best_epoch << "\n";
  }
  return summary;
}

int cmd_run(const RunConfig& config, const fs::path& out_dir, bool quiet) {
  const RunSummary s = execute_run(config, out_dir, quiet ? nullptr : &std::cerr);
  if (s.diverged) {
    std::cerr << "error: run diverged; see " << (out_dir / "manifest.txt").string() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

RunConfig apply_sweep_value(const RunConfig& config, SweepAxis axis, double value) {
  RunConfig c = config;
  c.name = config.name + "/" + dir_label(axis, value);
  switch (axis) {
    case SweepAxis::noise_level:
      if (c.noise.kind == NoiseKind::none) c.noise.kind = NoiseKind::gaussian;
      c.noise.epsilon = value;
      break;
    case SweepAxis::batch_size:
      if (!(value >= 1.0) || value != std::floor(value))
        throw InputError("batch_size sweep values must be positive integers");
      c.problem.batch_size = static_cast<std::size_t>(value);
      break;
    case SweepAxis::space_exponent:
      c.solver.r_X = value;
      break;
  }
  c.validate();
  return c;
}

int cmd_sweep(const RunConfig& config, const fs::path& out_dir, std::optional<SweepAxis> axis,
              std::vector<double> values, bool quiet) {
  if (!axis) axis = config.sweep.axis;
  if (values.empty()) values = config.sweep.values;
  if (!axis) throw InputError("sweep: no axis given (use --axis or [sweep] axis)");
  if (values.empty()) throw InputError("sweep: no values given (use --values or [sweep] values)");

  std::vector<RunConfig> cells;
  for (double v : values) cells.push_back(apply_sweep_value(config, *axis, v));
  ensure_directory(out_dir);

  std::vector<RunSummary> summaries(cells.size());
  parallel_for(cells.size(), 0, [&](std::size_t i) {
    summaries[i] = execute_run(cells[i], out_dir / dir_label(*axis, values[i]), nullptr);
  });

  std::ofstream out = open_output(out_dir / "summary.csv");
  out << "axis,value,best_rel_l2_err,best_epoch,final_rel_l2_err,final_residual,iterations,diverged\n";
  bool any_diverged = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = summaries[i];
    any_diverged |= s.diverged;
    out << to_string(*axis) << ',' << format_double(values[i]) << ',' << format_optional(s.best_rel_error)
        << ',' << s.best_epoch << ',' << format_optional(s.final_rel_error) << ','
        << format_double(s.final_residual) << ',' << s.iterations << ',' << (s.diverged ? 1 : 0) << '\n';
    if (!quiet) {
      std::cerr << to_string(*axis) << " = " << values[i] << ": best rel. error "
                << optional_text(s.best_rel_error) << (s.diverged ? " (diverged)" : "") << "\n";
    }
  }
  if (!out) throw RuntimeFailure("write failed: summary.csv");
  return any_diverged ? kExitFailure : kExitOk;
}

int cmd_rates(const RunConfig& config, const fs::path& out_dir, bool quiet) {
  if (config.kind != ExperimentKind::benchmark)
    throw InputError("rates: the rate studies need experiment.kind = benchmark");
  if (config.rates.deltas.empty()) throw InputError("rates: rates.deltas is empty");
  config.validate();
  const auto& r = config.rates;
  ForwardProblem problem = build_forward_problem(config);
  SolverConfig sc = config.solver_config();
  const GeometryParams xg = sc.x_geometry();
  const double C_alpha = r.C_alpha.value_or(2.0 * config.problem.diag_min * config.problem.diag_min);
  const StabilityParams stability{r.alpha, C_alpha};
  stability.validate();
  ensure_directory(out_dir);
  bool ok = true;

  // Exact data: seed-averaged Bregman distances and the fitted rate.
  {
    SolverConfig c = sc;
    c.max_epochs = r.exact_epochs;
    c.stopping = StoppingRule::max_epochs;
    c.granularity = RecordGranularity::epoch;
    std::vector<std::vector<IterationRecord>> histories(r.n_seeds);
    parallel_for(r.n_seeds, 0, [&](std::size_t s) {
      SolverConfig cs = c;
      cs.seed = r.base_seed + s;
      RunResult run = run_sgd(problem, problem.exact_data(), cs);
      if (run.diverged()) throw RuntimeFailure("exact-data run diverged: " + run.divergence->message);
      histories[s] = std::move(run.history);
    });
    const SeedAverage avg = seed_average_bregman(histories);
    std::ofstream csv = open_output(out_dir / "exact_rates.csv");
    csv << "iter,mean_bregman,std_bregman,n_seeds\n";
    for (std::size_t j = 0; j < avg.iter.size(); ++j)
      csv << avg.iter[j] << ',' << format_double(avg.mean[j]) << ',' << format_double(avg.stddev[j])
          << ',' << avg.n_seeds << '\n';

    const RateFit fit = fit_exact_rate(histories, r.alpha, c.mu0, c.step_decay_exponent);
    const auto adm = check_step_admissibility(std::vector<double>{c.mu0}, problem.bounds().gamma,
                                              problem.bounds().L_max,
                                              xg.dual_smoothness_constant().value_or(1.0), xg.p_star());
    std::ofstream summary = open_output(out_dir / "exact_summary.txt");
    summary << "{\n  \"model\": \"" << to_string(fit.model) << "\",\n"
            << "  \"already_converged\": " << (fit.already_converged ? "true" : "false") << ",\n"
            << "  \"fitted_rate\": " << format_double(fit.fitted_rate) << ",\n"
            << "  \"r_squared\": " << format_double(fit.r_squared) << ",\n"
            << "  \"window\": [" << fit.window_begin << ", " << fit.window_end << "],\n"
            << "  \"step_margin\": " << format_double(adm.margin) << ",\n";
    bool exact_ok = fit.already_converged;
    if (!fit.already_converged) {
      if (fit.model == RateModel::linear) {
        const double bound = linear_contraction_bound(adm.margin, c.mu0, C_alpha, problem.num_blocks());
        exact_ok = adm.admissible && fit.fitted_rate <= bound + r.contraction_slack && fit.r_squared >= 0.95;
        summary << "  \"theoretical_factor\": " << format_double(bound) << ",\n"
                << "  \"slack\": " << format_double(r.contraction_slack) << ",\n";
      } else {
        const double expected = 1.0 / (1.0 - r.alpha);
        exact_ok = std::abs(fit.fitted_rate - expected) <= 0.25 * std::abs(expected) && fit.r_squared >= 0.9;
        summary << "  \"expected_slope\": " << format_double(expected) << ",\n";
      }
    }
    summary << "  \"passed\": " << (exact_ok ? "true" : "false") << "\n}\n";
    ok &= exact_ok;
    if (!quiet)
      std::cerr << "exact-data rate: " << to_string(fit.model) << " " << fit.fitted_rate
                << " (r^2 = " << fit.r_squared << ") " << (exact_ok ? "ok" : "FAILED") << "\n";
  }

  // Noisy data: E[D(x_k(delta), x_true)] against delta.
  {
    SolverConfig c = sc;
    c.Gamma = r.Gamma;
    NoisyStudyOptions options;
    options.n_seeds = r.n_seeds;
    options.base_seed = r.base_seed;
    options.slope_tolerance = r.slope_tolerance;
    const NoisyRateStudy study = noisy_rate_study(problem, stability, r.deltas, c, options);
    write_noisy_study_csv(out_dir / "noisy_rates.csv", study);
    write_noisy_study_summary(out_dir / "noisy_summary.txt", study);
    ok &= study.passed();
    if (!quiet)
      std::cerr << "noisy rate: slope " << study.fit.slope << " vs " << study.expected_slope
                << " (r^2 = " << study.fit.r_squared << ") " << (study.passed() ? "ok" : "FAILED")
                << "\n";
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_phantom(const RunConfig& config, const fs::path& out_dir) {
  if (config.kind != ExperimentKind::schlieren)
    throw InputError("phantom: needs experiment.kind = schlieren");
  const ForwardProblem problem = build_forward_problem(config);
  const auto* model = dynamic_cast<const SchlierenModel*>(&problem.model());
  if (!model) throw RuntimeFailure("phantom: unexpected operator kind " + problem.kind());
  ensure_directory(out_dir);
  write_array(out_dir / "phantom.bsgd", *problem.truth());

  const RadonSystem& radon = model->radon();
  std::ofstream out = open_output(out_dir / "geometry.txt");
  out << "shape = " << radon.rows() << " " << radon.cols() << "\n"
      << "nonzero_fraction = " << format_double(nonzero_fraction(*problem.truth())) << "\n"
      << "angles_rad =";
  for (double a : radon.angles()) out << ' ' << format_double(a);
  out << "\ndetector_positions =";
  for (std::size_t k = 0; k < radon.n_detectors(); ++k) out << ' ' << format_double(radon.detector_position(k));
  out << "\nbatch_size = " << problem.batch_size() << "\n";
  for (std::size_t b = 0; b < problem.num_blocks(); ++b) {
    out << "block_" << b << " =";
    for (std::size_t u : problem.batching().units(b)) out << ' ' << u;
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: geometry.txt");
  return kExitOk;
}

}  // namespace bsgd
