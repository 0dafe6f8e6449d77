#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsgd/array_io.hpp"
#include "bsgd/experiment.hpp"
#include "bsgd/phantom.hpp"
#include "bsgd/run_config.hpp"
#include "bsgd/text_format.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace bsgd {
namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("bsgd_test_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

RunConfig small_benchmark(std::size_t epochs = 10) {
  RunConfig c;
  c.kind = ExperimentKind::benchmark;
  c.name = "unit";
  c.problem.dim = 10;
  c.solver.mode = ExponentMode::theory;
  c.solver.mu0 = 1.0;
  c.solver.epochs = epochs;
  c.noise.kind = NoiseKind::gaussian;
  c.noise.epsilon = 0.01;
  c.noise.seed = 3;
  c.estimates.n_samples = 4;
  return c;
}

RunConfig random_config(CounterRng& rng) {
  RunConfig c;
  const double exps[] = {1.1, 1.5, 2.0, 3.0};
  c.kind = rng.index(2) ? ExperimentKind::schlieren : ExperimentKind::benchmark;
  c.name = "cfg" + std::to_string(rng.index(1000));
  c.problem.rows = 8 + rng.index(40);
  c.problem.cols = 8 + rng.index(40);
  c.problem.n_angles = 12;
  c.problem.n_detectors = rng.index(2) ? 0 : 16;
  c.problem.n_blobs = rng.index(8);
  c.problem.amplitude = 0.5 + rng.uniform();
  c.problem.phantom_seed = rng.next() >> 8;
  c.problem.dim = 12;
  c.problem.diag_min = 0.1 + 0.4 * rng.uniform();
  c.problem.diag_max = 1.0 + rng.uniform();
  c.problem.beta = 0.01 * rng.uniform();
  c.problem.truth_value = rng.uniform();
  c.problem.batch_size = rng.index(2) ? 1 : 3;
  c.solver.method = rng.index(2) ? Method::sgd : Method::landweber;
  c.solver.mode = rng.index(2) ? ExponentMode::theory : ExponentMode::practice;
  c.solver.r_X = exps[rng.index(4)];
  c.solver.r_Y = exps[rng.index(4)];
  if (rng.index(2)) c.solver.mu0 = 0.01 + rng.uniform();
  c.solver.step_decay = rng.index(2) ? 0.0 : 0.1 * static_cast<double>(rng.index(6));
  c.solver.epochs = 1 + rng.index(500);
  c.solver.seed = rng.next();
  c.solver.x0 = c.kind == ExperimentKind::schlieren ? 0.01 + rng.uniform() : rng.uniform() - 0.5;
  c.solver.granularity = rng.index(2) ? RecordGranularity::epoch : RecordGranularity::iteration;
  c.solver.divergence_factor = 1e6 + 1e12 * rng.uniform();
  switch (rng.index(4)) {
    case 0: c.noise.kind = NoiseKind::none; break;
    case 1: c.noise.kind = NoiseKind::gaussian; c.noise.epsilon = 0.1 * rng.uniform(); break;
    case 2: c.noise.kind = NoiseKind::salt_pepper; c.noise.kappa = 0.05 + 0.5 * rng.uniform(); break;
    default:
      c.noise.kind = NoiseKind::impulsive;
      c.noise.kappa = 0.05 + 0.5 * rng.uniform();
      c.noise.epsilon = rng.uniform();
  }
  c.noise.seed = rng.index(100000);
  c.estimates.enabled = rng.index(2) == 1;
  c.estimates.radius = 0.01 + rng.uniform();
  c.rates.deltas = {0.2 * rng.uniform() + 0.05, 0.01, 0.001 * (1 + rng.uniform())};
  c.rates.n_seeds = 10 + rng.index(20);
  if (rng.index(2)) c.rates.C_alpha = 0.1 + rng.uniform();
  c.rates.alpha = 1.0 + rng.index(3);
  if (rng.index(2)) {
    c.sweep.axis = SweepAxis::batch_size;
    c.sweep.values = {1, 2, 5};
  }
  c.output_dir = "out/" + c.name;
  return c;
}

TEST(ConfigTest, RandomRoundTrip) {
  CounterRng rng(77);
  for (int i = 0; i < 200; ++i) {
    const RunConfig c = random_config(rng);
    ASSERT_NO_THROW(c.validate()) << serialize_config(c);
    std::istringstream in(serialize_config(c));
    const RunConfig back = parse_config(in);
    EXPECT_TRUE(back == c) << serialize_config(c) << "\n---\n" << serialize_config(back);
    EXPECT_EQ(serialize_config(back), serialize_config(c));
  }
}

TEST(ConfigTest, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(BSGD_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
  }
}

TEST(ConfigTest, MissingRequiredKeys) {
  const std::string base =
      "[experiment]\nkind = benchmark\n[solver]\nr_X = 2\nr_Y = 2\nepochs = 5\n";
  std::istringstream ok(base);
  EXPECT_NO_THROW(parse_config(ok));
  for (const std::string drop : {"kind = benchmark\n", "r_X = 2\n", "r_Y = 2\n", "epochs = 5\n"}) {
    std::string text = base;
    text.erase(text.find(drop), drop.size());
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in), InputError) << drop;
  }
}

TEST(ConfigTest, UnknownKeysAndBadValues) {
  const std::string base = "[experiment]\nkind = benchmark\n[solver]\nr_X = 2\nr_Y = 2\nepochs = 5\n";
  for (const std::string extra : {"[solver]\nlearning_rate = 3\n", "[mystery]\na = 1\n",
                                   "[noise]\nkind = poisson\n", "[solver]\nepochs = -1\n",
                                   "[problem]\nbeta = abc\n", "[solver]\nmode = theory\np = 3\n"}) {
    std::string text = base + extra;
    // Later duplicates would merge; put overrides in a fresh document instead.
    if (extra.rfind("[solver]", 0) == 0) {
      text = "[experiment]\nkind = benchmark\n[solver]\nr_X = 2\nr_Y = 2\n" +
             (extra.find("epochs") == std::string::npos ? std::string("epochs = 5\n") : std::string()) +
             extra.substr(9);
    }
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in), InputError) << text;
  }
  std::istringstream results(base + "[results]\nanything = 1\n");
  EXPECT_NO_THROW(parse_config(results));
}

TEST(ConfigTest, NumberLists) {
  EXPECT_EQ(parse_number_list("0.1, 0.03,0.01"), (std::vector<double>{0.1, 0.03, 0.01}));
  EXPECT_TRUE(parse_number_list("").empty());
  EXPECT_THROW(parse_number_list("0.1, x"), InputError);
  const std::vector<double> v = {1e-3, 0.1 + 0.2, 7.0};
  EXPECT_EQ(parse_number_list(format_number_list(v)), v);
}

TEST(ConfigTest, DefaultStepSizes) {
  EXPECT_EQ(default_mu0(ExperimentKind::benchmark, 2.0, 2.0), 1.0);
  for (auto [rx, ry] : {std::pair{2.0, 2.0}, std::pair{1.5, 2.0}, std::pair{1.1, 2.0}, std::pair{1.1, 1.1}}) {
    const double mu = default_mu0(ExperimentKind::schlieren, rx, ry);
    EXPECT_GT(mu, 0.0);
    EXPECT_TRUE(std::isfinite(mu));
  }
  RunConfig c = small_benchmark();
  c.solver.mu0.reset();
  EXPECT_EQ(c.resolved_mu0(), 1.0);
}

TEST(PhantomTest, EmptyAndDiskAreas) {
  const GridVector empty = make_phantom(PhantomKind::sparse_blobs, {16, 16}, 0, 1.0, 3);
  EXPECT_EQ(testing::max_abs(empty.values()), 0.0);

  const GridVector disks =
      make_disk_phantom({256, 256}, {Disk{0.0, 0.75, 0.2, 1.0}, Disk{0.0, -0.75, 0.2, 1.0}}, 0.0);
  const double expected = 2.0 * std::numbers::pi * 0.04 / 4.0;
  EXPECT_NEAR(nonzero_fraction(disks), expected, 0.02 * expected);
  // Row 0 is the top edge (y = 1): the upper disk sits in the first rows.
  EXPECT_EQ(disks[static_cast<std::size_t>(0.125 * 256) * 256 + 128], 1.0);
  EXPECT_EQ(disks[128 * 256 + 128], 0.0);
}

TEST(PhantomTest, SparseBlobsAreSparseAndReproducible) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GridVector a = make_phantom(PhantomKind::sparse_blobs, {64, 64}, 5, 1.0, seed);
    EXPECT_GT(nonzero_fraction(a), 0.0);
    EXPECT_LT(nonzero_fraction(a), 0.2);
    EXPECT_EQ(a, make_phantom(PhantomKind::sparse_blobs, {64, 64}, 5, 1.0, seed));
    for (double v : a.values()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
  EXPECT_THROW(parse_phantom_kind("shepp_logan"), InputError);
}

TEST(ExperimentTest, BuildsBothKinds) {
  const ForwardProblem bench = build_forward_problem(small_benchmark());
  EXPECT_EQ(bench.kind(), "benchmark");
  EXPECT_EQ(bench.num_blocks(), 10u);
  RunConfig s = small_benchmark();
  s.kind = ExperimentKind::schlieren;
  s.problem.rows = 12;
  s.problem.cols = 12;
  s.problem.n_angles = 6;
  s.problem.batch_size = 2;
  s.solver.x0 = 0.01;
  const ForwardProblem schl = build_forward_problem(s);
  EXPECT_EQ(schl.kind(), "schlieren");
  EXPECT_EQ(schl.num_blocks(), 3u);
  ASSERT_TRUE(schl.truth());
  s.solver.x0 = 0.0;
  EXPECT_THROW(build_forward_problem(s), InputError);
}

TEST(ExperimentTest, RunWritesOutputs) {
  TempDir dir("run");
  const RunConfig c = small_benchmark(12);
  const RunSummary s = execute_run(c, dir.path());
  EXPECT_FALSE(s.diverged);
  EXPECT_EQ(s.iterations, 120u);
  for (const char* f : {"history.csv", "best.bsgd", "final.bsgd", "manifest.txt"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;

  const auto lines = read_lines(dir.path() / "history.csv");
  ASSERT_EQ(lines.size(), 14u);
  EXPECT_EQ(lines[0], "epoch,iter,mu,batch,psi,residual,rel_l2_err,bregman");
  const auto first = split_csv(lines[1]);
  ASSERT_EQ(first.size(), 8u);
  EXPECT_EQ(first[1], "0");
  EXPECT_EQ(first[3], "");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    ASSERT_EQ(cells.size(), 8u) << lines[i];
    EXPECT_EQ(std::stoul(cells[0]), i - 1);
    EXPECT_EQ(std::stoul(cells[1]), 10 * (i - 1));
    for (std::size_t k = 2; k < cells.size(); ++k) EXPECT_TRUE(std::isfinite(std::stod(cells[k])));
  }

  const GridVector final_x = read_array(dir.path() / "final.bsgd");
  EXPECT_EQ(final_x.shape(), (Shape{10}));
  ASSERT_TRUE(s.final_rel_error);
  EXPECT_NEAR(relative_error(final_x, GridVector::filled({10}, 0.5)), *s.final_rel_error, 1e-15);

  // The manifest is a loadable config followed by a [results] section.
  // The manifest records the directory actually written to.
  RunConfig expected = c;
  expected.output_dir = dir.path().string();
  EXPECT_TRUE(load_config(dir.path() / "manifest.txt") == expected);
  std::ifstream manifest(dir.path() / "manifest.txt");
  const std::string text((std::istreambuf_iterator<char>(manifest)), {});
  for (const char* key : {"[results]", "mu0_used = 1", "gamma_hat", "L_hat", "admissible", "k_delta", "wall_seconds"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

TEST(ExperimentTest, RunIsDeterministic) {
  TempDir a("det_a");
  TempDir b("det_b");
  RunConfig c = small_benchmark(8);
  c.problem.beta = 0.02;
  c.solver.seed = 99;
  execute_run(c, a.path());
  execute_run(c, b.path());
  EXPECT_EQ(read_lines(a.path() / "history.csv"), read_lines(b.path() / "history.csv"));
  EXPECT_EQ(read_array(a.path() / "best.bsgd"), read_array(b.path() / "best.bsgd"));
}

TEST(ExperimentTest, DivergenceGivesFailureExitCode) {
  TempDir dir("diverge");
  RunConfig c = small_benchmark(50);
  c.problem.diag_min = 1.0;
  c.solver.mu0 = 5.0;
  EXPECT_EQ(cmd_run(c, dir.path(), true), kExitFailure);
  EXPECT_EQ(cmd_run(small_benchmark(5), dir.path() / "ok", true), kExitOk);
}

TEST(ExperimentTest, SweepSummaryRows) {
  TempDir dir("sweep");
  const RunConfig c = small_benchmark(5);
  EXPECT_EQ(cmd_sweep(c, dir.path(), SweepAxis::batch_size, {1, 2, 5}, true), kExitOk);
  const auto lines = read_lines(dir.path() / "summary.csv");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "axis,value,best_rel_l2_err,best_epoch,final_rel_l2_err,final_residual,iterations,diverged");
  EXPECT_EQ(split_csv(lines[3])[1], "5");
  EXPECT_EQ(split_csv(lines[3])[6], "10");
  for (const char* sub : {"batch_size_1", "batch_size_2", "batch_size_5"})
    EXPECT_TRUE(fs::exists(dir.path() / sub / "history.csv")) << sub;
  EXPECT_THROW(cmd_sweep(c, dir.path(), std::nullopt, {1}, true), InputError);
  EXPECT_THROW(cmd_sweep(c, dir.path(), SweepAxis::batch_size, {}, true), InputError);
  EXPECT_THROW(cmd_sweep(c, dir.path(), SweepAxis::batch_size, {1.5}, true), InputError);
}

TEST(ExperimentTest, SweepValuesApply) {
  const RunConfig c = small_benchmark();
  EXPECT_EQ(apply_sweep_value(c, SweepAxis::batch_size, 2).problem.batch_size, 2u);
  EXPECT_EQ(apply_sweep_value(c, SweepAxis::space_exponent, 1.5).solver.r_X, 1.5);
  RunConfig none = c;
  none.noise.kind = NoiseKind::none;
  const RunConfig noisy = apply_sweep_value(none, SweepAxis::noise_level, 0.05);
  EXPECT_EQ(noisy.noise.kind, NoiseKind::gaussian);
  EXPECT_EQ(noisy.noise.epsilon, 0.05);
}

TEST(ExperimentTest, RatesRejectEmptyDeltasAndSchlieren) {
  TempDir dir("rates");
  RunConfig c = small_benchmark();
  c.rates.deltas.clear();
  EXPECT_THROW(cmd_rates(c, dir.path(), true), InputError);
  RunConfig s = small_benchmark();
  s.kind = ExperimentKind::schlieren;
  s.solver.x0 = 0.01;
  EXPECT_THROW(cmd_rates(s, dir.path(), true), InputError);
}

TEST(ExperimentTest, PhantomCommand) {
  TempDir dir("phantom");
  RunConfig s = small_benchmark();
  s.kind = ExperimentKind::schlieren;
  s.problem.rows = 16;
  s.problem.cols = 16;
  s.problem.n_angles = 8;
  s.problem.batch_size = 2;
  s.solver.x0 = 0.01;
  EXPECT_EQ(cmd_phantom(s, dir.path()), kExitOk);
  const GridVector img = read_array(dir.path() / "phantom.bsgd");
  EXPECT_EQ(img.shape(), (Shape{16, 16}));
  EXPECT_EQ(img, make_phantom(PhantomKind::sparse_blobs, {16, 16}, 5, 1.0, 7));
  EXPECT_TRUE(fs::exists(dir.path() / "geometry.txt"));
  EXPECT_THROW(cmd_phantom(small_benchmark(), dir.path()), InputError);
}

TEST(TextFormatTest, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_optional(std::nullopt), "");
}

}  // namespace
}  // namespace bsgd
