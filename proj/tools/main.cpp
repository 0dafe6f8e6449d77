#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "bsgd/errors.hpp"
#include "bsgd/experiment.hpp"
#include "bsgd/run_config.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: [output] dir of the config)");
  cmd->add_option("--seed", c.seed, "Override the solver seed");
  cmd->add_option("--epochs", c.epochs, "Override the number of epochs");
  cmd->add_flag("--quiet", c.quiet, "Suppress progress output");
}

bsgd::RunConfig load(const Common& c) {
  bsgd::RunConfig config = bsgd::load_config(c.config);
  if (c.seed) {
    config.solver.seed = *c.seed;
    config.rates.base_seed = *c.seed;
  }
  if (c.epochs) config.solver.epochs = *c.epochs;
  config.validate();
  return config;
}

std::filesystem::path out_dir(const Common& c, const bsgd::RunConfig& config) {
  return c.out.empty() ? std::filesystem::path(config.output_dir) : std::filesystem::path(c.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic gradient descent for nonlinear inverse problems in L^r spaces"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "Run one reconstruction");
  add_common(run, run_opts);

  Common sweep_opts;
  std::string axis;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Run one reconstruction per value of a parameter");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "noise_level | batch_size | space_exponent");
  sweep->add_option("--values", values, "Comma-separated values");

  Common rates_opts;
  auto* rates = app.add_subcommand("rates", "Exact and noisy convergence-rate studies");
  add_common(rates, rates_opts);

  Common phantom_opts;
  auto* phantom = app.add_subcommand("phantom", "Write the phantom and the scan geometry");
  add_common(phantom, phantom_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version print and succeed; every other parse error is a usage error.
    const int rc = app.exit(e);
    return rc == 0 ? bsgd::kExitOk : bsgd::kExitUsage;
  }

  try {
    if (run->parsed()) {
      const auto config = load(run_opts);
      return bsgd::cmd_run(config, out_dir(run_opts, config), run_opts.quiet);
    }
    if (sweep->parsed()) {
      const auto config = load(sweep_opts);
      std::optional<bsgd::SweepAxis> a;
      if (!axis.empty()) a = bsgd::parse_sweep_axis(axis);
      return bsgd::cmd_sweep(config, out_dir(sweep_opts, config), a,
                             values.empty() ? std::vector<double>{} : bsgd::parse_number_list(values),
                             sweep_opts.quiet);
    }
    if (rates->parsed()) {
      const auto config = load(rates_opts);
      return bsgd::cmd_rates(config, out_dir(rates_opts, config), rates_opts.quiet);
    }
    if (phantom->parsed()) {
      const auto config = load(phantom_opts);
      return bsgd::cmd_phantom(config, out_dir(phantom_opts, config));
    }
  } catch (const bsgd::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bsgd::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bsgd::kExitFailure;
  }
  return bsgd::kExitUsage;
}
