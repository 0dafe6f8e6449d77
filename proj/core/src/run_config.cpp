#include "bsgd/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bsgd/errors.hpp"
#include "bsgd/text_format.hpp"

namespace bsgd {

namespace pt = boost::property_tree;

std::string to_string(ExperimentKind kind) {
  return kind == ExperimentKind::schlieren ? "schlieren" : "benchmark";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "schlieren") return ExperimentKind::schlieren;
  if (name == "benchmark") return ExperimentKind::benchmark;
  throw InputError("unknown experiment kind '" + name + "'");
}

std::string to_string(Method method) { return method == Method::sgd ? "sgd" : "landweber"; }

Method parse_method(const std::string& name) {
  if (name == "sgd") return Method::sgd;
  if (name == "landweber") return Method::landweber;
  throw InputError("unknown method '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::noise_level: return "noise_level";
    case SweepAxis::batch_size: return "batch_size";
    case SweepAxis::space_exponent: return "space_exponent";
  }
  return "noise_level";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "noise_level") return SweepAxis::noise_level;
  if (name == "batch_size") return SweepAxis::batch_size;
  if (name == "space_exponent") return SweepAxis::space_exponent;
  throw InputError("unknown sweep axis '" + name + "' (expected noise_level, batch_size or space_exponent)");
}

double default_mu0(ExperimentKind kind, double r_X, double r_Y) {
  if (kind == ExperimentKind::benchmark) return 1.0;
  // Schlieren at desk scale (32x32, 30 angles, unit-amplitude blobs, decay
  // 0.2, 1000 epochs). Each entry sits well below the onset of divergence.
  struct Entry {
    double r_X, r_Y, mu0;
  };
  static constexpr Entry table[] = {
      {2.0, 2.0, 3.0}, {1.5, 2.0, 5.0}, {1.1, 2.0, 3.0}, {1.1, 1.1, 0.05},
  };
  for (const auto& e : table)
    if (e.r_X == r_X && e.r_Y == r_Y) return e.mu0;
  return 1.0;
}

void RunConfig::validate() const {
  if (name.empty()) throw InputError("experiment.name must not be empty");
  const auto& pr = problem;
  if (pr.batch_size == 0) throw InputError("problem.batch_size must be positive");
  if (kind == ExperimentKind::schlieren) {
    if (pr.rows == 0 || pr.cols == 0) throw InputError("problem.rows and problem.cols must be positive");
    if (pr.n_angles == 0) throw InputError("problem.n_angles must be positive");
    if (pr.n_angles % pr.batch_size != 0)
      throw InputError("problem.batch_size must divide problem.n_angles");
    if (solver.x0 == 0.0)
      throw InputError("solver.x0 must be nonzero for schlieren: F'(0) = 0, so x = 0 is stationary");
    if (pr.phantom_file.empty() && !(pr.amplitude > 0.0))
      throw InputError("problem.amplitude must be positive");
  } else {
    if (pr.dim == 0) throw InputError("problem.dim must be positive");
    if (pr.dim % pr.batch_size != 0) throw InputError("problem.batch_size must divide problem.dim");
    if (!(pr.diag_min > 0.0) || !(pr.diag_max >= pr.diag_min))
      throw InputError("need 0 < problem.diag_min <= problem.diag_max");
    if (!(pr.working_radius > 0.0)) throw InputError("problem.working_radius must be positive");
  }
  solver_config().validate();
  noise.validate();
  if (estimates.n_samples == 0) throw InputError("estimates.n_samples must be positive");
  if (!(estimates.radius > 0.0)) throw InputError("estimates.radius must be positive");
  if (rates.n_seeds == 0) throw InputError("rates.n_seeds must be positive");
  if (!(rates.Gamma > 0.0)) throw InputError("rates.Gamma must be positive");
  if (!(rates.alpha >= 1.0)) throw InputError("rates.alpha must be >= 1");
  if (rates.C_alpha && !(*rates.C_alpha > 0.0)) throw InputError("rates.C_alpha must be positive");
  if (output_dir.empty()) throw InputError("output.dir must not be empty");
}

double RunConfig::resolved_mu0() const {
  return solver.mu0 ? *solver.mu0 : default_mu0(kind, solver.r_X, solver.r_Y);
}

SolverConfig RunConfig::solver_config() const {
  SolverConfig c = SolverConfig::for_mode(solver.mode, solver.r_X, solver.r_Y);
  c.mu0 = resolved_mu0();
  c.step_decay_exponent = solver.step_decay;
  c.batch_size = problem.batch_size;
  c.max_epochs = solver.epochs;
  c.seed = solver.seed;
  c.stopping = solver.stopping;
  c.Gamma = solver.Gamma;
  c.x0_value = solver.x0;
  c.granularity = solver.granularity;
  c.divergence_factor = solver.divergence_factor;
  return c;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return kind == o.kind && name == o.name && problem == o.problem && solver == o.solver &&
         noise.kind == o.noise.kind && noise.epsilon == o.noise.epsilon &&
         noise.kappa == o.noise.kappa && noise.seed == o.noise.seed && estimates == o.estimates &&
         rates == o.rates && sweep == o.sweep && output_dir == o.output_dir;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string token = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
      throw InputError("malformed number '" + token + "' in list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_number_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

namespace {

/// Reads one section, tracking which keys were consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name, std::string origin)
      : tree_(tree), name_(std::move(name)), origin_(std::move(origin)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  std::string require(const std::string& key) {
    auto v = raw(key);
    if (!v) throw InputError(origin_ + ": missing required key " + name_ + "." + key);
    return *v;
  }

  void str(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_real(key, *v);
  }

  void count(const std::string& key, std::size_t& out) {
    if (auto v = raw(key)) out = static_cast<std::size_t>(to_uint(key, *v));
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) out = to_uint(key, *v);
  }

  void flag(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "0") {
        out = false;
      } else {
        throw bad(key, *v, "a boolean");
      }
    }
  }

  /// `auto` (or absence) leaves the value unset.
  void optional_real(const std::string& key, std::optional<double>& out) {
    if (auto v = raw(key)) out = *v == "auto" ? std::nullopt : std::optional<double>(to_real(key, *v));
  }

  template <class Parse, class T>
  void enumerated(const std::string& key, T& out, Parse parse) {
    if (auto v = raw(key)) {
      try {
        out = parse(*v);
      } catch (const InputError& e) {
        throw InputError(origin_ + ": " + name_ + "." + key + ": " + e.what());
      }
    }
  }

  double to_real(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
      throw bad(key, text, "a finite number");
    return v;
  }

  std::uint64_t to_uint(const std::string& key, const std::string& text) const {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      throw bad(key, text, "a nonnegative integer");
    return v;
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!used_.count(key)) throw InputError(origin_ + ": unknown key " + name_ + "." + key);
    }
  }

 private:
  InputError bad(const std::string& key, const std::string& text, const char* what) const {
    return InputError(origin_ + ": " + name_ + "." + key + " = '" + text + "' is not " + what);
  }

  const pt::ptree* tree_;
  std::string name_;
  std::string origin_;
  std::set<std::string> used_;
};

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& origin) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> known = {"experiment", "problem", "solver",  "noise",
                                              "estimates",  "rates",   "sweep",   "output",
                                              "results"};
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw InputError(origin + ": key '" + name + "' appears outside a section");
    if (!known.count(name)) throw InputError(origin + ": unknown section [" + name + "]");
  }
  auto section = [&](const char* name) {
    auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name, origin);
  };

  RunConfig c;
  {
    Section s = section("experiment");
    c.kind = parse_experiment_kind(s.require("kind"));
    s.str("name", c.name);
    s.check_unknown();
  }
  {
    Section s = section("problem");
    auto& p = c.problem;
    s.count("rows", p.rows);
    s.count("cols", p.cols);
    s.count("n_angles", p.n_angles);
    s.count("n_detectors", p.n_detectors);
    s.str("phantom_file", p.phantom_file);
    s.count("n_blobs", p.n_blobs);
    s.real("amplitude", p.amplitude);
    s.u64("phantom_seed", p.phantom_seed);
    s.count("dim", p.dim);
    s.real("diag_min", p.diag_min);
    s.real("diag_max", p.diag_max);
    s.real("beta", p.beta);
    s.real("working_radius", p.working_radius);
    s.real("truth_value", p.truth_value);
    s.count("batch_size", p.batch_size);
    s.check_unknown();
  }
  {
    Section s = section("solver");
    auto& v = c.solver;
    s.enumerated("method", v.method, parse_method);
    s.enumerated("mode", v.mode, parse_exponent_mode);
    v.r_X = s.to_real("r_X", s.require("r_X"));
    v.r_Y = s.to_real("r_Y", s.require("r_Y"));
    s.optional_real("mu0", v.mu0);
    s.real("step_decay", v.step_decay);
    v.epochs = static_cast<std::size_t>(s.to_uint("epochs", s.require("epochs")));
    s.u64("seed", v.seed);
    s.enumerated("stopping", v.stopping, parse_stopping_rule);
    s.real("Gamma", v.Gamma);
    s.real("x0", v.x0);
    s.enumerated("granularity", v.granularity, parse_granularity);
    s.real("divergence_factor", v.divergence_factor);
    // p and q are implied by the mode; accepted for readability and checked.
    std::optional<double> p;
    std::optional<double> q;
    s.optional_real("p", p);
    s.optional_real("q", q);
    const SolverConfig implied = SolverConfig::for_mode(v.mode, v.r_X, v.r_Y);
    if ((p && *p != implied.p) || (q && *q != implied.q))
      throw InputError(origin + ": solver.p/solver.q contradict mode " + to_string(v.mode));
    s.check_unknown();
  }
  {
    Section s = section("noise");
    s.enumerated("kind", c.noise.kind, parse_noise_kind);
    s.real("epsilon", c.noise.epsilon);
    s.real("kappa", c.noise.kappa);
    s.u64("seed", c.noise.seed);
    s.check_unknown();
  }
  {
    Section s = section("estimates");
    auto& e = c.estimates;
    s.flag("enabled", e.enabled);
    s.real("radius", e.radius);
    s.count("n_samples", e.n_samples);
    s.u64("seed", e.seed);
    s.count("power_iterations", e.power_iterations);
    s.check_unknown();
  }
  {
    Section s = section("rates");
    auto& r = c.rates;
    if (auto v = s.raw("deltas")) r.deltas = parse_number_list(*v);
    s.count("n_seeds", r.n_seeds);
    s.u64("base_seed", r.base_seed);
    s.real("Gamma", r.Gamma);
    s.real("alpha", r.alpha);
    s.optional_real("C_alpha", r.C_alpha);
    s.count("exact_epochs", r.exact_epochs);
    s.real("slope_tolerance", r.slope_tolerance);
    s.real("contraction_slack", r.contraction_slack);
    s.check_unknown();
  }
  {
    Section s = section("sweep");
    if (auto v = s.raw("axis"); v && *v != "none") c.sweep.axis = parse_sweep_axis(*v);
    if (auto v = s.raw("values")) c.sweep.values = parse_number_list(*v);
    s.check_unknown();
  }
  {
    Section s = section("output");
    s.str("dir", c.output_dir);
    s.check_unknown();
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto real = [](double v) { return format_double(v); };
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("auto"); };
  const SolverConfig implied = SolverConfig::for_mode(c.solver.mode, c.solver.r_X, c.solver.r_Y);
  const auto& p = c.problem;
  const auto& s = c.solver;
  out << "[experiment]\n"
      << "kind = " << to_string(c.kind) << "\n"
      << "name = " << c.name << "\n\n"
      << "[problem]\n"
      << "rows = " << p.rows << "\n"
      << "cols = " << p.cols << "\n"
      << "n_angles = " << p.n_angles << "\n"
      << "n_detectors = " << p.n_detectors << "\n"
      << "phantom_file = " << p.phantom_file << "\n"
      << "n_blobs = " << p.n_blobs << "\n"
      << "amplitude = " << real(p.amplitude) << "\n"
      << "phantom_seed = " << p.phantom_seed << "\n"
      << "dim = " << p.dim << "\n"
      << "diag_min = " << real(p.diag_min) << "\n"
      << "diag_max = " << real(p.diag_max) << "\n"
      << "beta = " << real(p.beta) << "\n"
      << "working_radius = " << real(p.working_radius) << "\n"
      << "truth_value = " << real(p.truth_value) << "\n"
      << "batch_size = " << p.batch_size << "\n\n"
      << "[solver]\n"
      << "method = " << to_string(s.method) << "\n"
      << "mode = " << to_string(s.mode) << "\n"
      << "r_X = " << real(s.r_X) << "\n"
      << "r_Y = " << real(s.r_Y) << "\n"
      << "p = " << real(implied.p) << "\n"
      << "q = " << real(implied.q) << "\n"
      << "mu0 = " << opt(s.mu0) << "\n"
      << "step_decay = " << real(s.step_decay) << "\n"
      << "epochs = " << s.epochs << "\n"
      << "seed = " << s.seed << "\n"
      << "stopping = " << to_string(s.stopping) << "\n"
      << "Gamma = " << real(s.Gamma) << "\n"
      << "x0 = " << real(s.x0) << "\n"
      << "granularity = " << to_string(s.granularity) << "\n"
      << "divergence_factor = " << real(s.divergence_factor) << "\n\n"
      << "[noise]\n"
      << "kind = " << to_string(c.noise.kind) << "\n"
      << "epsilon = " << real(c.noise.epsilon) << "\n"
      << "kappa = " << real(c.noise.kappa) << "\n"
      << "seed = " << c.noise.seed << "\n\n"
      << "[estimates]\n"
      << "enabled = " << (c.estimates.enabled ? "true" : "false") << "\n"
      << "radius = " << real(c.estimates.radius) << "\n"
      << "n_samples = " << c.estimates.n_samples << "\n"
      << "seed = " << c.estimates.seed << "\n"
      << "power_iterations = " << c.estimates.power_iterations << "\n\n"
      << "[rates]\n"
      << "deltas = " << format_number_list(c.rates.deltas) << "\n"
      << "n_seeds = " << c.rates.n_seeds << "\n"
      << "base_seed = " << c.rates.base_seed << "\n"
      << "Gamma = " << real(c.rates.Gamma) << "\n"
      << "alpha = " << real(c.rates.alpha) << "\n"
      << "C_alpha = " << opt(c.rates.C_alpha) << "\n"
      << "exact_epochs = " << c.rates.exact_epochs << "\n"
      << "slope_tolerance = " << real(c.rates.slope_tolerance) << "\n"
      << "contraction_slack = " << real(c.rates.contraction_slack) << "\n\n"
      << "[sweep]\n"
      << "axis = " << (c.sweep.axis ? to_string(*c.sweep.axis) : std::string("none")) << "\n"
      << "values = " << format_number_list(c.sweep.values) << "\n\n"
      << "[output]\n"
      << "dir = " << c.output_dir << "\n";
  return out.str();
}

}  // namespace bsgd
