#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stackrl/errors.hpp"
#include "stackrl/experiments.hpp"

using namespace stackrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/stackrl_exp_" + name) {
    std::string cmd = "mkdir -p " + path;
    REQUIRE(std::system(cmd.c_str()) == 0);
  }
};

}  // namespace

TEST_CASE("config hash is stable and sensitive") {
  RunConfig a;
  a.command = "train";
  RunConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.lambda = 0.2;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.seed = 8;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("RunConfig validation maps to usage errors") {
  RunConfig c;
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RunConfig{};
  c.a1 = 0.55;
  c.a2 = 0.7;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RunConfig{};
  c.minibatch = 1;
  CHECK_THROWS_AS(c.validate(), UsageError);
  CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("lambda_schedule grows like n^(2/3)") {
  const double l1 = lambda_schedule(500, 100.0, 0.02);
  const double l8 = lambda_schedule(4000, 100.0, 0.02);
  CHECK(l8 / l1 == doctest::Approx(4.0).epsilon(1e-12));  // (8^2)^(1/3)
  CHECK(l1 == doctest::Approx(0.02 * std::cbrt(500.0 * 500.0 * 100.0)).epsilon(1e-14));
}

TEST_CASE("fit_loglog_slope recovers an exact power law and refuses degenerate input") {
  std::vector<double> ns = {500, 1000, 2000, 4000, 8000};
  std::vector<double> vals;
  for (const double n : ns) vals.push_back(2.5 * std::pow(n, -1.0 / 3.0));
  const SlopeFit fit = fit_loglog_slope(ns, vals);
  CHECK_FALSE(fit.degenerate);
  CHECK(std::abs(fit.slope + 1.0 / 3.0) < 1e-6);

  vals[2] = 0.0;
  CHECK(fit_loglog_slope(ns, vals).degenerate);
  CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), InputError);
}

TEST_CASE("artifact round trip for both policy kinds") {
  TempDir dir("artifact");
  {
    PolicyArtifact art;
    SoftmaxPolicy pi;
    pi.omega = Eigen::Vector3d(0.25, -1.5, 3.125);
    pi.c_omega = 100.0;
    art.policy = pi;
    art.q = LinearQ{Eigen::Vector3d(1e-17, 2.0, -3.0), 60.0, 60.0};
    art.env_kind = "sim2d";
    art.degree = 2;
    art.gamma = 0.95;
    art.v_max = 60.0;
    const std::string path = dir.path + "/softmax.txt";
    save_artifact(art, path, "abc123");
    const PolicyArtifact back = load_artifact(path);
    CHECK(std::get<SoftmaxPolicy>(back.policy).omega == pi.omega);
    CHECK(back.q.theta == art.q.theta);
    CHECK(back.env_kind == "sim2d");
    CHECK(back.gamma == art.gamma);
  }
  {
    PolicyArtifact art;
    GaussianLinearPolicy pi;
    Rng rng(3);
    pi.mean_matrix = rng.gaussian_matrix(5, 6);
    pi.log_std = rng.gaussian_vector(5);
    art.policy = pi;
    art.q = LinearQ{rng.gaussian_vector(78), 4000.0, 4000.0};
    art.env_kind = "quadratic";
    art.env_seed = 17;
    art.degree = 2;
    art.gamma = 0.95;
    art.v_max = 4000.0;
    const std::string path = dir.path + "/gauss.txt";
    save_artifact(art, path, "def");
    const PolicyArtifact back = load_artifact(path);
    CHECK(std::get<GaussianLinearPolicy>(back.policy).mean_matrix == pi.mean_matrix);
    CHECK(std::get<GaussianLinearPolicy>(back.policy).log_std == pi.log_std);
    CHECK(back.env_seed == 17);
    CHECK(back.q.theta == art.q.theta);
  }
  CHECK_THROWS_AS(load_artifact("/tmp/stackrl_missing_artifact.txt"), IoError);
}

TEST_CASE("result tables carry provenance columns") {
  TempDir dir("table");
  const std::string path = dir.path + "/table.csv";
  write_result_table(path, {{"exp/a", "beef", 3, "metric", 1.25}});
  const std::string text = slurp(path);
  CHECK(text == "experiment_id,config_hash,seed,metric,value\nexp/a,beef,3,metric,1.25\n");
}

TEST_CASE("gen-data and train run end to end deterministically") {
  TempDir dir("pipeline");
  RunConfig gen;
  gen.command = "gen-data";
  gen.env = "sim2d";
  gen.n = 160;
  gen.seed = 5;
  gen.out_path = dir.path + "/d.csv";
  std::ostringstream sink;
  run_gen_data(gen, sink);
  const std::string first = slurp(gen.out_path);

  gen.out_path = dir.path + "/d2.csv";
  run_gen_data(gen, sink);
  CHECK(first == slurp(gen.out_path));  // byte-identical

  RunConfig tr;
  tr.command = "train";
  tr.data_path = dir.path + "/d.csv";
  tr.out_dir = dir.path;
  tr.iterations = 60;
  tr.minibatch = 16;
  tr.eval_every = 20;
  tr.seed = 5;
  run_train(tr, sink);
  const std::string policy_bytes = slurp(dir.path + "/policy.txt");
  const std::string trace_bytes = slurp(dir.path + "/trace.csv");
  CHECK(policy_bytes.find("policy_kind=softmax") != std::string::npos);
  // trace row count = iterations / eval_every (+ header + hash line)
  CHECK(std::count(trace_bytes.begin(), trace_bytes.end(), '\n') == 2 + 60 / 20);

  run_train(tr, sink);
  CHECK(policy_bytes == slurp(dir.path + "/policy.txt"));
  CHECK(trace_bytes == slurp(dir.path + "/trace.csv"));

  RunConfig ev;
  ev.command = "eval";
  ev.policy_path = dir.path + "/policy.txt";
  ev.out_dir = dir.path;
  ev.episodes = 4;
  ev.eval_seeds = 6;
  ev.seed = 3;
  run_eval(ev, sink);
  const std::string eval_bytes = slurp(dir.path + "/eval.csv");
  CHECK(std::count(eval_bytes.begin(), eval_bytes.end(), '\n') == 1 + 2 * 6);
  run_eval(ev, sink);
  CHECK(eval_bytes == slurp(dir.path + "/eval.csv"));

  RunConfig diag;
  diag.command = "diagnose";
  diag.data_path = dir.path + "/d.csv";
  diag.policy_path = dir.path + "/policy.txt";
  diag.out_dir = dir.path;
  diag.rollouts = 50;
  diag.seed = 2;
  run_diagnose(diag, sink);
  const std::string diag_bytes = slurp(dir.path + "/diagnose.csv");
  CHECK(std::count(diag_bytes.begin(), diag_bytes.end(), '\n') == 1 + 6);
  for (const char* metric : {"rcn", "kappa", "kernel_bandwidth", "grad_norm_leader",
                             "grad_norm_follower", "dse_verdict"})
    CHECK(diag_bytes.find(metric) != std::string::npos);
  run_diagnose(diag, sink);
  CHECK(diag_bytes == slurp(dir.path + "/diagnose.csv"));
}

TEST_CASE("eval of the behavior policy matches an independent MC run") {
  TempDir dir("behavior_eval");
  RunConfig gen;
  gen.command = "gen-data";
  gen.env = "sim2d";
  gen.n = 120;
  gen.seed = 11;
  gen.out_path = dir.path + "/d.csv";
  std::ostringstream sink;
  run_gen_data(gen, sink);

  RunConfig ev;
  ev.command = "eval";
  ev.eval_behavior = true;
  ev.data_path = gen.out_path;
  ev.out_dir = dir.path;
  ev.episodes = 60;
  ev.eval_seeds = 4;
  ev.seed = 13;
  run_eval(ev, sink);

  // independent oracle: rebuild the behavior and run mc_return directly
  const OfflineDataset data = load_dataset(gen.out_path);
  const EnvAny env = make_env("sim2d");
  const FeatureMap map = default_feature_map(env);
  const SoftmaxPolicy pi = behavior_softmax(env, map, 1.0, 3, 11);
  const McStats oracle = mc_return(env, pi, map, data.gamma, 240, -1, 99);

  const std::string table = slurp(dir.path + "/eval.csv");
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);  // header
  double mean = 0.0;
  int count = 0;
  double se_sum = 0.0;
  while (std::getline(lines, line)) {
    const auto pos = line.rfind(',');
    const double value = std::stod(line.substr(pos + 1));
    if (line.find("mc_return_stderr") != std::string::npos) {
      se_sum += value;
    } else {
      mean += value;
      ++count;
    }
  }
  mean /= count;
  const double se = se_sum / count / std::sqrt(static_cast<double>(count));
  const double combined =
      3.0 * std::sqrt(se * se * count + oracle.stderr_mean() * oracle.stderr_mean());
  CHECK(std::abs(mean - oracle.mean) <= combined + 1e-9);
}

TEST_CASE("regret sweep with the oracle debug flag refuses the slope fit") {
  TempDir dir("sweep_oracle");
  RunConfig sw;
  sw.command = "regret-sweep";
  sw.env = "quadratic";
  sw.env_seed = 1;
  sw.debug_oracle_policy = true;
  sw.sweep_n = {128, 256};
  sw.sweep_sigma0 = {0.5};
  sw.sweep_seeds = 2;
  sw.out_dir = dir.path;
  sw.seed = 1;
  std::ostringstream sink;
  run_regret_sweep(sw, sink);
  const std::string table = slurp(dir.path + "/regret_sweep.csv");
  CHECK(table.find("slope_degenerate") != std::string::npos);
  CHECK(table.find("loglog_slope") == std::string::npos);
  // all regrets at the analytic optimum are numerically zero
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (line.find(",exact_regret,") == std::string::npos) continue;
    const double value = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(value <= 1e-10);
  }
}

TEST_CASE("tiny regret sweep is deterministic under threading") {
  TempDir dir("sweep_tiny");
  RunConfig sw;
  sw.command = "regret-sweep";
  sw.env = "quadratic";
  sw.env_seed = 2;
  sw.sweep_n = {128, 192};
  sw.sweep_sigma0 = {1.0};
  sw.sweep_seeds = 2;
  sw.sweep_iterations = 40;
  sw.minibatch = 32;
  sw.out_dir = dir.path;
  sw.seed = 4;
  sw.threads = 2;
  std::ostringstream sink;
  run_regret_sweep(sw, sink);
  const std::string first = slurp(dir.path + "/regret_sweep.csv");

  sw.threads = 1;
  run_regret_sweep(sw, sink);
  CHECK(first == slurp(dir.path + "/regret_sweep.csv"));
}
