#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stackrl/datasets.hpp"
#include "stackrl/learner.hpp"

namespace stackrl {

// Flat option bag shared by all CLI commands; flags override the optional
// key=value config file. Everything that affects outputs feeds the config
// hash.
struct RunConfig {
  std::string command;

  std::string out_dir = ".";
  std::uint64_t seed = 7;
  int threads = 2;

  // environment / data generation
  std::string env = "sim2d";
  std::uint64_t env_seed = 0;
  int n = 1500;
  double alpha = 1.0;
  int fqi_rounds = 3;
  double sigma0 = 1.0;
  std::string data_path;
  std::string out_path;

  // learner
  double lambda = 0.1;
  bool lambda_rule = false;     // use the theorem schedule instead of the fixed value
  double lambda_scale = 0.01;   // calibration constant of the schedule
  double gamma_override = -1.0; // <= 0 keeps the environment default
  double c1 = 0.5, a1 = 0.9, c2 = 1.0, a2 = 0.6;
  int iterations = 20000;
  int minibatch = 128;
  int eval_every = 100;
  int degree = 2;
  double c_omega = 100.0;
  double v_max = -1.0;          // <= 0 uses the environment default; also c_theta

  // evaluation
  std::string policy_path;
  bool eval_behavior = false;   // evaluate the dataset's behavior policy instead
  int episodes = 100;
  int eval_seeds = 50;
  int eval_horizon = -1;

  // regret sweep
  std::vector<int> sweep_n = {500, 1000, 2000, 4000, 8000};
  std::vector<double> sweep_sigma0 = {0.5, 1.0, 2.0};
  int sweep_seeds = 5;
  int sweep_iterations = 4000;
  bool debug_oracle_policy = false;

  // diagnostics
  int rollouts = 4000;

  void validate() const;  // throws UsageError
};

std::string config_dump(const RunConfig& config);  // canonical key=value lines
std::string config_hash(const RunConfig& config);  // 64-bit FNV-1a of the dump, hex

// lambda = scale * cbrt(n^2 * v_max), the theorem schedule behind the
// n^{-1/3} regret rate.
double lambda_schedule(int n, double v_max, double scale);

struct ResultRow {
  std::string experiment_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

void write_result_table(const std::string& path, const std::vector<ResultRow>& rows);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = false;  // some input was nonpositive; fit refused
};

// Least-squares slope of log(value) against log(n).
SlopeFit fit_loglog_slope(const std::vector<double>& ns, const std::vector<double>& values);

// Trained-policy artifact: parameters plus everything needed to rebuild the
// feature map and environment deterministically.
struct PolicyArtifact {
  PolicyHandle policy;
  LinearQ q;
  std::string env_kind;
  std::uint64_t env_seed = 0;
  int degree = 2;
  double gamma = 0.95;
  double v_max = 1.0;
};

void save_artifact(const PolicyArtifact& artifact, const std::string& path,
                   const std::string& hash);
PolicyArtifact load_artifact(const std::string& path);

void save_trace(const TrainTrace& trace, const std::string& path, const std::string& hash);

// Command bodies used by the CLI; `log` receives human-readable progress.
// They throw the library error types; the CLI maps those to exit codes.
void run_gen_data(const RunConfig& config, std::ostream& log);
void run_train(const RunConfig& config, std::ostream& log);
void run_eval(const RunConfig& config, std::ostream& log);
void run_regret_sweep(const RunConfig& config, std::ostream& log);
void run_diagnose(const RunConfig& config, std::ostream& log);

}  // namespace stackrl
