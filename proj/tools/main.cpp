#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stackrl/errors.hpp"
#include "stackrl/experiments.hpp"

namespace {

void add_common(CLI::App* cmd, stackrl::RunConfig& config, std::string& config_path) {
  cmd->add_option("--out-dir", config.out_dir, "Output directory")
      ->envname("STACKRL_OUT_DIR");
  cmd->add_option("--seed", config.seed, "Master seed");
  cmd->add_option("--threads", config.threads, "Worker threads for sweeps");
  cmd->add_option("--config", config_path,
                  "Optional key=value config file (flags override it)");
}

// key=value lines; '#' starts a comment; keys are long option names without
// the leading dashes; values already given on the command line win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw stackrl::UsageError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
      line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto eq = line.find('=', start);
    if (eq == std::string::npos)
      throw stackrl::UsageError("config line " + std::to_string(line_no)
                                + " is not key=value");
    const std::string key = line.substr(start, eq - start);
    const std::string value = line.substr(eq + 1);
    CLI::Option* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr)
      throw stackrl::UsageError("unknown config key '" + key + "' at line "
                                + std::to_string(line_no));
    if (op->count() > 0) continue;  // flag given explicitly
    std::stringstream tokens(value);
    std::string token;
    while (std::getline(tokens, token, ',')) op->add_result(token);
    op->run_callback();
  }
}

void add_learner_flags(CLI::App* cmd, stackrl::RunConfig& config) {
  cmd->add_option("--lambda", config.lambda, "Pessimism weight");
  cmd->add_flag("--lambda-rule,!--no-lambda-rule", config.lambda_rule,
                "Use the n^(2/3) lambda schedule instead of the fixed value");
  cmd->add_option("--lambda-scale", config.lambda_scale, "Schedule calibration constant");
  cmd->add_option("--gamma", config.gamma_override, "Discount override");
  cmd->add_option("--c1", config.c1, "Leader step-size constant");
  cmd->add_option("--a1", config.a1, "Leader step-size exponent");
  cmd->add_option("--c2", config.c2, "Follower step-size constant");
  cmd->add_option("--a2", config.a2, "Follower step-size exponent");
  cmd->add_option("--iterations", config.iterations, "Training iterations");
  cmd->add_option("--minibatch", config.minibatch, "Minibatch size");
  cmd->add_option("--eval-every", config.eval_every, "Trace logging period");
  cmd->add_option("--degree", config.degree, "Polynomial feature degree");
  cmd->add_option("--c-omega", config.c_omega, "Policy parameter ball radius");
  cmd->add_option("--v-max", config.v_max, "Value range bound (also c_theta)");
}

}  // namespace

int main(int argc, char** argv) {
  stackrl::RunConfig config;
  std::string config_path;

  CLI::App app{"Stackelberg batch policy learning experiments"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  add_common(gen, config, config_path);
  gen->add_option("--env", config.env, "Environment: sim2d | cartpole | quadratic");
  gen->add_option("--env-seed", config.env_seed, "Environment construction seed");
  gen->add_option("--n", config.n, "Number of transitions");
  gen->add_option("--alpha", config.alpha, "Softmax behavior temperature");
  gen->add_option("--fqi-rounds", config.fqi_rounds, "Fitted-Q iterations for the behavior");
  gen->add_option("--sigma0", config.sigma0, "Gaussian behavior noise (quadratic env)");
  gen->add_option("--gamma", config.gamma_override, "Discount override");
  gen->add_option("--degree", config.degree, "Polynomial feature degree");
  gen->add_option("--out", config.out_path, "Output dataset path");

  auto* train = app.add_subcommand("train", "Train on an offline dataset");
  add_common(train, config, config_path);
  train->add_option("--data", config.data_path, "Dataset path")->required();
  add_learner_flags(train, config);

  auto* eval = app.add_subcommand("eval", "Monte Carlo evaluation of a policy");
  add_common(eval, config, config_path);
  eval->add_option("--policy", config.policy_path, "Trained artifact path");
  eval->add_flag("--eval-behavior", config.eval_behavior,
                 "Evaluate the dataset's behavior policy instead");
  eval->add_option("--data", config.data_path, "Dataset path (for --eval-behavior)");
  eval->add_option("--episodes", config.episodes, "Episodes per repeat");
  eval->add_option("--eval-seeds", config.eval_seeds, "Number of repeats");
  eval->add_option("--horizon", config.eval_horizon, "Episode horizon override");
  eval->add_option("--gamma", config.gamma_override, "Discount override");
  eval->add_option("--degree", config.degree, "Feature degree (behavior eval)");

  auto* sweep = app.add_subcommand("regret-sweep", "Regret-rate sweep on the quadratic env");
  add_common(sweep, config, config_path);
  sweep->add_option("--env", config.env, "Environment (must be quadratic)");
  sweep->add_option("--env-seed", config.env_seed, "Environment construction seed");
  sweep->add_option("--sweep-n", config.sweep_n, "Sample-size grid");
  sweep->add_option("--sweep-sigma0", config.sweep_sigma0, "Behavior noise grid");
  sweep->add_option("--sweep-seeds", config.sweep_seeds, "Seeds per cell");
  sweep->add_option("--sweep-iterations", config.sweep_iterations, "Training budget per cell");
  sweep->add_flag("--debug-oracle-policy", config.debug_oracle_policy,
                  "Skip training and score the analytic optimum");
  add_learner_flags(sweep, config);

  auto* diag = app.add_subcommand("diagnose", "Coverage and equilibrium diagnostics");
  add_common(diag, config, config_path);
  diag->add_option("--data", config.data_path, "Dataset path")->required();
  diag->add_option("--policy", config.policy_path, "Trained artifact path")->required();
  diag->add_option("--rollouts", config.rollouts, "On-policy rollouts for the RCN estimate");
  add_learner_flags(diag, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    for (CLI::App* cmd : {gen, train, eval, sweep, diag})
      if (cmd->parsed()) apply_config_file(cmd, config_path);
    if (gen->parsed()) {
      config.command = "gen-data";
      stackrl::run_gen_data(config, std::cout);
    } else if (train->parsed()) {
      config.command = "train";
      stackrl::run_train(config, std::cout);
    } else if (eval->parsed()) {
      config.command = "eval";
      stackrl::run_eval(config, std::cout);
    } else if (sweep->parsed()) {
      config.command = "regret-sweep";
      if (sweep->count("--env") == 0) config.env = "quadratic";
      if (sweep->count("--lambda-rule") == 0 && sweep->count("--no-lambda-rule") == 0)
        config.lambda_rule = true;  // the rate experiment uses the schedule by default
      stackrl::run_regret_sweep(config, std::cout);
    } else if (diag->parsed()) {
      config.command = "diagnose";
      stackrl::run_diagnose(config, std::cout);
    }
  } catch (const stackrl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const stackrl::UnsupportedError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const stackrl::InputError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const stackrl::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const stackrl::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
