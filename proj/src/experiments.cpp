#include "stackrl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "stackrl/detail/text_io.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

using detail::format_double;
using detail::parse_double;
using detail::parse_long;
using detail::split;

void RunConfig::validate() const {
  if (n < 1) throw UsageError("--n must be positive");
  if (!(alpha > 0.0)) throw UsageError("--alpha must be positive");
  if (fqi_rounds < 1) throw UsageError("--fqi-rounds must be positive");
  if (sigma0 < 0.0) throw UsageError("--sigma0 must be nonnegative");
  if (lambda < 0.0) throw UsageError("--lambda must be nonnegative");
  if (!(lambda_scale > 0.0)) throw UsageError("--lambda-scale must be positive");
  if (iterations < 1 || sweep_iterations < 1) throw UsageError("iteration counts must be positive");
  if (minibatch < 2) throw UsageError("--minibatch must be at least 2");
  if (eval_every < 1) throw UsageError("--eval-every must be positive");
  if (degree < 0) throw UsageError("--degree must be nonnegative");
  if (!(c_omega > 0.0)) throw UsageError("--c-omega must be positive");
  if (episodes < 1) throw UsageError("--episodes must be positive");
  if (eval_seeds < 1) throw UsageError("--eval-seeds must be positive");
  if (sweep_seeds < 1) throw UsageError("--sweep-seeds must be positive");
  if (rollouts < 1) throw UsageError("--rollouts must be positive");
  if (threads < 1) throw UsageError("--threads must be positive");
  if (sweep_n.empty() || sweep_sigma0.empty()) throw UsageError("sweep grids must be nonempty");
  for (int v : sweep_n)
    if (v < minibatch) throw UsageError("sweep n values must be at least the minibatch size");
  // two-timescale constraints are re-checked by LearnerConfig::validate; fail fast here
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(a1 > 0.5 && a1 <= 1.0) || !(a2 > 0.5 && a2 <= 1.0)
      || !(a1 > a2))
    throw UsageError("schedules need c1, c2 > 0 and 0.5 < a2 < a1 <= 1");
}

std::string config_dump(const RunConfig& c) {
  std::ostringstream out;
  out << "command=" << c.command << "\n";
  out << "out_dir=" << c.out_dir << "\n";
  out << "seed=" << c.seed << "\n";
  out << "threads=" << c.threads << "\n";
  out << "env=" << c.env << "\n";
  out << "env_seed=" << c.env_seed << "\n";
  out << "n=" << c.n << "\n";
  out << "alpha=" << format_double(c.alpha) << "\n";
  out << "fqi_rounds=" << c.fqi_rounds << "\n";
  out << "sigma0=" << format_double(c.sigma0) << "\n";
  out << "data=" << c.data_path << "\n";
  out << "out=" << c.out_path << "\n";
  out << "lambda=" << format_double(c.lambda) << "\n";
  out << "lambda_rule=" << (c.lambda_rule ? 1 : 0) << "\n";
  out << "lambda_scale=" << format_double(c.lambda_scale) << "\n";
  out << "gamma=" << format_double(c.gamma_override) << "\n";
  out << "c1=" << format_double(c.c1) << "\n";
  out << "a1=" << format_double(c.a1) << "\n";
  out << "c2=" << format_double(c.c2) << "\n";
  out << "a2=" << format_double(c.a2) << "\n";
  out << "iterations=" << c.iterations << "\n";
  out << "minibatch=" << c.minibatch << "\n";
  out << "eval_every=" << c.eval_every << "\n";
  out << "degree=" << c.degree << "\n";
  out << "c_omega=" << format_double(c.c_omega) << "\n";
  out << "v_max=" << format_double(c.v_max) << "\n";
  out << "policy=" << c.policy_path << "\n";
  out << "eval_behavior=" << (c.eval_behavior ? 1 : 0) << "\n";
  out << "episodes=" << c.episodes << "\n";
  out << "eval_seeds=" << c.eval_seeds << "\n";
  out << "eval_horizon=" << c.eval_horizon << "\n";
  out << "sweep_n=";
  for (size_t i = 0; i < c.sweep_n.size(); ++i) out << (i ? "," : "") << c.sweep_n[i];
  out << "\n";
  out << "sweep_sigma0=";
  for (size_t i = 0; i < c.sweep_sigma0.size(); ++i)
    out << (i ? "," : "") << format_double(c.sweep_sigma0[i]);
  out << "\n";
  out << "sweep_seeds=" << c.sweep_seeds << "\n";
  out << "sweep_iterations=" << c.sweep_iterations << "\n";
  out << "debug_oracle_policy=" << (c.debug_oracle_policy ? 1 : 0) << "\n";
  out << "rollouts=" << c.rollouts << "\n";
  return out.str();
}

std::string config_hash(const RunConfig& c) {
  // Execution details (paths, worker count) do not feed the hash: results
  // must be byte-identical no matter where the files live or how many
  // threads ran the sweep.
  std::ostringstream filtered;
  std::istringstream lines(config_dump(c));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("out_dir=", 0) == 0 || line.rfind("out=", 0) == 0
        || line.rfind("data=", 0) == 0 || line.rfind("policy=", 0) == 0
        || line.rfind("threads=", 0) == 0)
      continue;
    filtered << line << "\n";
  }
  const std::string dump = filtered.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

double lambda_schedule(int n, double v_max, double scale) {
  return scale * std::cbrt(static_cast<double>(n) * static_cast<double>(n) * v_max);
}

void write_result_table(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "experiment_id,config_hash,seed,metric,value\n";
  for (const auto& r : rows)
    out << r.experiment_id << "," << r.config_hash << "," << r.seed << "," << r.metric << ","
        << format_double(r.value) << "\n";
  if (!out) throw IoError("failed while writing '" + path + "'");
}

SlopeFit fit_loglog_slope(const std::vector<double>& ns, const std::vector<double>& values) {
  if (ns.size() != values.size() || ns.size() < 2)
    throw InputError("slope fit needs matching vectors with at least 2 points");
  SlopeFit fit;
  for (const double v : values) {
    if (!(v > 1e-12)) {
      fit.degenerate = true;
      return fit;
    }
  }
  const int k = static_cast<int>(ns.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < k; ++i) {
    const double x = std::log(ns[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = k * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) throw InputError("slope fit has a degenerate n grid");
  fit.slope = (k * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / k;
  return fit;
}

namespace {

std::string vector_csv(const Eigen::VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

Eigen::VectorXd parse_vector(const std::string& csv, int line_no) {
  const auto toks = split(csv, ',');
  Eigen::VectorXd v(static_cast<int>(toks.size()));
  for (size_t i = 0; i < toks.size(); ++i) v[static_cast<int>(i)] = parse_double(toks[i], line_no);
  return v;
}

}  // namespace

void save_artifact(const PolicyArtifact& artifact, const std::string& path,
                   const std::string& hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const bool softmax = std::holds_alternative<SoftmaxPolicy>(artifact.policy);
  out << "artifact=stackrl_policy env=" << artifact.env_kind << " env_seed=" << artifact.env_seed
      << " degree=" << artifact.degree << " gamma=" << format_double(artifact.gamma)
      << " v_max=" << format_double(artifact.v_max)
      << " policy_kind=" << (softmax ? "softmax" : "gaussian") << " config_hash=" << hash
      << "\n";
  if (softmax) {
    const auto& pi = std::get<SoftmaxPolicy>(artifact.policy);
    out << "omega=" << vector_csv(pi.omega) << "\n";
    out << "c_omega=" << format_double(pi.c_omega) << "\n";
  } else {
    const auto& pi = std::get<GaussianLinearPolicy>(artifact.policy);
    out << "action_dim=" << pi.action_dim() << "\n";
    out << "state_dim=" << pi.state_dim() << "\n";
    Eigen::VectorXd flat(pi.action_dim() * pi.state_dim());
    for (int i = 0; i < pi.action_dim(); ++i)
      flat.segment(i * pi.state_dim(), pi.state_dim()) = pi.mean_matrix.row(i);
    out << "mean_matrix=" << vector_csv(flat) << "\n";
    out << "log_std=" << vector_csv(pi.log_std) << "\n";
    out << "c_omega=" << format_double(pi.c_omega) << "\n";
  }
  out << "theta=" << vector_csv(artifact.q.theta) << "\n";
  out << "c_theta=" << format_double(artifact.q.c_theta) << "\n";
  if (!out) throw IoError("failed while writing '" + path + "'");
}

PolicyArtifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(in, header)) throw ParseError("line 1: missing artifact header");

  PolicyArtifact art;
  std::string policy_kind;
  for (const auto& tok : split(header, ' ')) {
    const size_t eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError("line 1: header token '" + tok + "' is not key=value");
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    if (key == "env") art.env_kind = value;
    else if (key == "env_seed") art.env_seed = static_cast<std::uint64_t>(parse_long(value, 1));
    else if (key == "degree") art.degree = static_cast<int>(parse_long(value, 1));
    else if (key == "gamma") art.gamma = parse_double(value, 1);
    else if (key == "v_max") art.v_max = parse_double(value, 1);
    else if (key == "policy_kind") policy_kind = value;
  }
  if (art.env_kind.empty() || policy_kind.empty())
    throw SchemaError("artifact header is missing env or policy_kind");

  std::map<std::string, std::string> fields;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw SchemaError("artifact is missing field '" + key + "'");
    return it->second;
  };

  if (policy_kind == "softmax") {
    SoftmaxPolicy pi;
    pi.omega = parse_vector(need("omega"), 0);
    pi.c_omega = parse_double(need("c_omega"), 0);
    art.policy = pi;
  } else if (policy_kind == "gaussian") {
    GaussianLinearPolicy pi;
    const int ad = static_cast<int>(parse_long(need("action_dim"), 0));
    const int sd = static_cast<int>(parse_long(need("state_dim"), 0));
    const Eigen::VectorXd flat = parse_vector(need("mean_matrix"), 0);
    if (flat.size() != ad * sd) throw SchemaError("mean_matrix size mismatch");
    pi.mean_matrix.resize(ad, sd);
    for (int i = 0; i < ad; ++i) pi.mean_matrix.row(i) = flat.segment(i * sd, sd);
    pi.log_std = parse_vector(need("log_std"), 0);
    if (pi.log_std.size() != ad) throw SchemaError("log_std size mismatch");
    pi.c_omega = parse_double(need("c_omega"), 0);
    art.policy = pi;
  } else {
    throw SchemaError("unknown policy_kind '" + policy_kind + "'");
  }
  art.q.theta = parse_vector(need("theta"), 0);
  art.q.c_theta = parse_double(need("c_theta"), 0);
  art.q.v_max = art.v_max;
  return art;
}

void save_trace(const TrainTrace& trace, const std::string& path, const std::string& hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# config_hash=" << hash << "\n";
  out << "k,leader_value,follower_loss,total_dj_norm,grad_q_l_norm,gamma1,gamma2\n";
  for (const auto& r : trace.rows)
    out << r.k << "," << format_double(r.leader_value) << "," << format_double(r.follower_loss)
        << "," << format_double(r.total_dj_norm) << "," << format_double(r.grad_q_l_norm) << ","
        << format_double(r.gamma1) << "," << format_double(r.gamma2) << "\n";
  if (!out) throw IoError("failed while writing '" + path + "'");
}

namespace {

struct LoadedProblem {
  OfflineDataset data;
  EnvAny env;
  FeatureMap map;
  double v_max;
};

std::uint64_t meta_u64(const OfflineDataset& data, const std::string& key, std::uint64_t fallback) {
  const auto it = data.meta.find(key);
  if (it == data.meta.end()) return fallback;
  return static_cast<std::uint64_t>(std::stoull(it->second));
}

LoadedProblem load_problem(const RunConfig& config) {
  if (config.data_path.empty()) throw UsageError("--data is required");
  OfflineDataset data = load_dataset(config.data_path);
  EnvAny env = make_env(data.env_kind, meta_u64(data, "env_seed", config.env_seed));
  if (config.gamma_override > 0.0) data.gamma = config.gamma_override;
  FeatureMap map = default_feature_map(env, config.degree);
  if (data.state_dim != map.state_dim())
    throw SchemaError("dataset state dimension does not match the environment");
  const double v_max = config.v_max > 0.0 ? config.v_max : default_v_max(env);
  return LoadedProblem{std::move(data), std::move(env), std::move(map), v_max};
}

Eigen::MatrixXd dataset_features(const FeatureMap& map, const OfflineDataset& data) {
  Eigen::MatrixXd feats(data.size(), map.dim());
  for (int i = 0; i < data.size(); ++i) {
    const auto& t = data.transitions[i];
    feats.row(i) = map.action_space().discrete()
                       ? map.features(t.s, static_cast<int>(t.a[0]))
                       : map.features(t.s, t.a);
  }
  return feats;
}

KernelSpec data_kernel(const FeatureMap& map, const OfflineDataset& data) {
  return KernelSpec::rbf(median_bandwidth(dataset_features(map, data), 0));
}

LearnerConfig learner_config(const RunConfig& config, int iterations, double lambda,
                             std::uint64_t seed) {
  LearnerConfig lc;
  lc.lambda = lambda;
  lc.c1 = config.c1;
  lc.a1 = config.a1;
  lc.c2 = config.c2;
  lc.a2 = config.a2;
  lc.iterations = iterations;
  lc.minibatch = config.minibatch;
  lc.seed = seed;
  lc.eval_every = config.eval_every;
  return lc;
}

PolicyHandle initial_policy(const EnvAny& env, const FeatureMap& map, double c_omega) {
  if (env_action_space(env).discrete()) return SoftmaxPolicy::zeros(map, c_omega);
  const auto& space = env_action_space(env);
  return GaussianLinearPolicy::zeros(space.dim(), env_state_dim(env), c_omega);
}

double effective_lambda(const RunConfig& config, int n, double v_max) {
  return config.lambda_rule ? lambda_schedule(n, v_max, config.lambda_scale) : config.lambda;
}

PolicyHandle behavior_from_meta(const OfflineDataset& data, const EnvAny& env,
                                const FeatureMap& map) {
  const auto it = data.meta.find("behavior");
  if (it == data.meta.end()) throw SchemaError("dataset has no behavior metadata");
  if (it->second == "softmax") {
    const double alpha = std::stod(data.meta.at("alpha"));
    const int rounds = static_cast<int>(std::stol(data.meta.at("fqi_rounds")));
    const std::uint64_t seed = meta_u64(data, "seed", 0);
    return behavior_softmax(env, map, alpha, rounds, seed);
  }
  if (it->second == "gaussian") {
    const double sigma0 = std::stod(data.meta.at("sigma0"));
    return behavior_gaussian(std::get<QuadraticRewardEnv>(env), sigma0);
  }
  throw SchemaError("unknown behavior kind '" + it->second + "' in dataset metadata");
}

std::string out_file(const RunConfig& config, const std::string& name) {
  if (config.out_dir.empty() || config.out_dir == ".") return name;
  return config.out_dir + "/" + name;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t k = v.size();
  if (k == 0) throw InputError("median of an empty set");
  return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

void run_gen_data(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  log << config_dump(config);

  const EnvAny env = make_env(config.env, config.env_seed);
  const FeatureMap map = default_feature_map(env, config.degree);

  PolicyHandle behavior;
  OfflineDataset data;
  if (env_action_space(env).discrete()) {
    behavior = behavior_softmax(env, map, config.alpha, config.fqi_rounds, config.seed);
    data = generate(env, behavior, map, config.n, config.seed);
    data.meta["behavior"] = "softmax";
    data.meta["alpha"] = format_double(config.alpha);
    data.meta["fqi_rounds"] = std::to_string(config.fqi_rounds);
  } else {
    behavior = behavior_gaussian(std::get<QuadraticRewardEnv>(env), config.sigma0);
    data = generate(env, behavior, map, config.n, config.seed);
    data.meta["behavior"] = "gaussian";
    data.meta["sigma0"] = format_double(config.sigma0);
  }
  data.meta["env_seed"] = std::to_string(config.env_seed);
  data.meta["config_hash"] = hash;
  if (config.gamma_override > 0.0) data.gamma = config.gamma_override;

  const std::string path =
      config.out_path.empty() ? out_file(config, "dataset.csv") : config.out_path;
  save_dataset(data, path);
  log << "gen-data: wrote " << data.size() << " transitions to " << path << "\n";
  log << "n=" << data.size() << " coverage="
      << (env_action_space(env).discrete() ? coverage_label(config.alpha)
                                           : ("sigma0=" + format_double(config.sigma0)))
      << " seed=" << config.seed << "\n";
}

void run_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  log << config_dump(config);

  auto problem = load_problem(config);
  const double lambda = effective_lambda(config, problem.data.size(), problem.v_max);
  if (lambda == 0.0) log << "warning: lambda = 0 disables pessimism\n";

  const KernelSpec kernel = data_kernel(problem.map, problem.data);
  log << "kernel bandwidth (median heuristic): " << format_double(kernel.bandwidth) << "\n";
  log << "lambda: " << format_double(lambda) << "\n";

  LearnerConfig lc = learner_config(config, config.iterations, lambda, config.seed);
  const PolicyHandle policy0 = initial_policy(problem.env, problem.map, config.c_omega);
  const LinearQ q0 = LinearQ::zeros(problem.map, problem.v_max, problem.v_max);

  const auto result = train(problem.map, problem.data, problem.data.initial_states, kernel,
                            policy0, q0, lc);

  PolicyArtifact art;
  art.policy = result.policy;
  art.q = result.q;
  art.env_kind = problem.data.env_kind;
  art.env_seed = meta_u64(problem.data, "env_seed", 0);
  art.degree = config.degree;
  art.gamma = problem.data.gamma;
  art.v_max = problem.v_max;
  save_artifact(art, out_file(config, "policy.txt"), hash);
  save_trace(result.trace, out_file(config, "trace.csv"), hash);

  const auto report = dse_check(problem.map, problem.data, kernel, result.policy, result.q,
                                problem.data.initial_states, lc, 1e-4, 512);
  {
    std::ofstream out(out_file(config, "dse.txt"), std::ios::binary);
    if (!out) throw IoError("cannot write DSE report");
    out << "# config_hash=" << hash << "\n";
    out << "grad_norm_leader=" << format_double(report.grad_norm_leader) << "\n";
    out << "grad_norm_follower=" << format_double(report.grad_norm_follower) << "\n";
    out << "leader_curvature_max_eig=" << format_double(report.leader_curvature_max_eig) << "\n";
    out << "follower_hessian_min_eig=" << format_double(report.follower_hessian_min_eig) << "\n";
    out << "is_dse=" << (report.is_dse ? 1 : 0) << "\n";
  }
  if (!result.trace.rows.empty()) {
    log << "train: final leader value " << format_double(result.trace.rows.back().leader_value)
        << ", final |DJ| " << format_double(result.trace.rows.back().total_dj_norm) << "\n";
  }
  log << "train: wrote policy.txt, trace.csv, dse.txt under " << config.out_dir << "\n";
}

void run_eval(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  log << config_dump(config);

  EnvAny env = make_env("sim2d");
  FeatureMap map = default_feature_map(env, config.degree);
  PolicyHandle policy;
  double gamma = 0.95;
  std::string label;

  if (config.eval_behavior) {
    if (config.data_path.empty()) throw UsageError("--eval-behavior needs --data");
    const OfflineDataset data = load_dataset(config.data_path);
    env = make_env(data.env_kind, meta_u64(data, "env_seed", 0));
    map = default_feature_map(env, config.degree);
    policy = behavior_from_meta(data, env, map);
    gamma = data.gamma;
    label = "behavior";
  } else {
    if (config.policy_path.empty()) throw UsageError("--policy is required (or --eval-behavior)");
    const PolicyArtifact art = load_artifact(config.policy_path);
    env = make_env(art.env_kind, art.env_seed);
    map = default_feature_map(env, art.degree);
    policy = art.policy;
    gamma = art.gamma;
    label = "trained";
  }
  if (config.gamma_override > 0.0) gamma = config.gamma_override;

  std::vector<ResultRow> rows;
  const std::string id = "eval/" + env_kind(env) + "/" + label;
  for (int i = 0; i < config.eval_seeds; ++i) {
    const std::uint64_t seed_i = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    const McStats stats =
        mc_return(env, policy, map, gamma, config.episodes, config.eval_horizon, seed_i);
    rows.push_back({id, hash, seed_i, "mc_return", stats.mean});
    rows.push_back({id, hash, seed_i, "mc_return_stderr", stats.stderr_mean()});
  }
  const std::string path = out_file(config, "eval.csv");
  write_result_table(path, rows);

  double mean = 0.0;
  for (const auto& r : rows)
    if (r.metric == "mc_return") mean += r.value;
  mean /= config.eval_seeds;
  log << "eval: mean return over " << config.eval_seeds << " repeats: " << format_double(mean)
      << " -> " << path << "\n";
}

void run_regret_sweep(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.env != "quadratic") throw UsageError("regret-sweep requires --env quadratic");
  const std::string hash = config_hash(config);
  log << config_dump(config);

  const QuadraticRewardEnv qenv(config.env_seed);
  const EnvAny env = qenv;
  const FeatureMap map = default_feature_map(env, config.degree);
  const double v_max = config.v_max > 0.0 ? config.v_max : default_v_max(env);

  struct Cell {
    int n = 0;
    double sigma0 = 0.0;
    int seed_index = 0;
  };
  std::vector<Cell> cells;
  for (const int n : config.sweep_n)
    for (const double s0 : config.sweep_sigma0)
      for (int r = 0; r < config.sweep_seeds; ++r) cells.push_back({n, s0, r});

  struct CellResult {
    bool ok = false;
    double regret = 0.0;
    std::uint64_t seed = 0;
    std::string error;
  };
  std::vector<CellResult> results(cells.size());

  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      const Cell& cell = cells[idx];
      CellResult& res = results[idx];
      res.seed = derive_seed(config.seed, static_cast<std::uint64_t>(idx));
      try {
        if (config.debug_oracle_policy) {
          res.regret = exact_regret_quadratic(qenv, qenv.optimal_policy());
          res.ok = true;
          continue;
        }
        const GaussianLinearPolicy behavior = behavior_gaussian(qenv, cell.sigma0);
        const OfflineDataset data = generate(env, behavior, map, cell.n, res.seed);
        const double lambda = effective_lambda(config, cell.n, v_max);
        LearnerConfig lc = learner_config(config, config.sweep_iterations, lambda, res.seed);
        lc.eval_every = config.sweep_iterations;  // trace kept minimal inside the sweep
        const PolicyHandle policy0 = initial_policy(env, map, config.c_omega);
        const LinearQ q0 = LinearQ::zeros(map, v_max, v_max);
        const auto trained =
            train(map, data, data.initial_states, KernelSpec::rbf(median_bandwidth(
                      dataset_features(map, data), 0)),
                  policy0, q0, lc);
        res.regret =
            exact_regret_quadratic(qenv, std::get<GaussianLinearPolicy>(trained.policy));
        res.ok = true;
      } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::max(1, std::min<int>(config.threads, static_cast<int>(cells.size())));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  size_t failures = 0;
  std::vector<ResultRow> rows;
  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const CellResult& res = results[i];
    std::ostringstream id;
    id << "regret/n=" << cell.n << "/sigma0=" << format_double(cell.sigma0);
    if (res.ok) {
      rows.push_back({id.str(), hash, res.seed, "exact_regret", res.regret});
    } else {
      ++failures;
      rows.push_back({id.str(), hash, res.seed, "cell_failed", 1.0});
      log << "sweep cell failed (" << id.str() << "): " << res.error << "\n";
    }
  }

  bool any_degenerate = false;
  for (const double s0 : config.sweep_sigma0) {
    std::vector<double> ns, medians;
    for (const int n : config.sweep_n) {
      std::vector<double> regrets;
      for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].n == n && cells[i].sigma0 == s0 && results[i].ok)
          regrets.push_back(results[i].regret);
      }
      if (regrets.empty()) continue;
      ns.push_back(n);
      medians.push_back(median_of(regrets));
      std::ostringstream id;
      id << "regret/n=" << n << "/sigma0=" << format_double(s0);
      rows.push_back({id.str(), hash, config.seed, "median_regret", medians.back()});
    }
    const std::string sid = "regret/sigma0=" + format_double(s0);
    if (ns.size() >= 2) {
      const SlopeFit fit = fit_loglog_slope(ns, medians);
      if (fit.degenerate) {
        any_degenerate = true;
        rows.push_back({sid, hash, config.seed, "slope_degenerate", 1.0});
        log << "slope fit refused for sigma0=" << format_double(s0)
            << ": regrets at or below numerical zero\n";
      } else {
        rows.push_back({sid, hash, config.seed, "loglog_slope", fit.slope});
        log << "sigma0=" << format_double(s0) << ": fitted log-log slope "
            << format_double(fit.slope) << "\n";
      }
    }
  }

  const std::string path = out_file(config, "regret_sweep.csv");
  write_result_table(path, rows);
  log << "regret-sweep: wrote " << rows.size() << " rows to " << path << "\n";
  (void)any_degenerate;

  const double fail_frac = static_cast<double>(failures) / static_cast<double>(cells.size());
  if (fail_frac >= 0.2)
    throw NumericError("regret sweep failed in " + std::to_string(failures) + " of "
                       + std::to_string(cells.size()) + " cells");
}

void run_diagnose(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  log << config_dump(config);

  if (config.policy_path.empty()) throw UsageError("--policy is required");
  const PolicyArtifact art = load_artifact(config.policy_path);
  auto problem = load_problem(config);
  if (art.env_kind != problem.data.env_kind)
    throw SchemaError("artifact environment does not match the dataset");
  const FeatureMap map = default_feature_map(problem.env, art.degree);

  const KernelSpec kernel = data_kernel(map, problem.data);
  const auto rcn =
      relative_condition_number(problem.data, art.policy, problem.env, map, config.rollouts,
                                config.seed);
  LearnerConfig lc = learner_config(config, 1, effective_lambda(config, problem.data.size(),
                                                                problem.v_max),
                                    config.seed);
  const auto report = dse_check(map, problem.data, kernel, art.policy, art.q,
                                problem.data.initial_states, lc, 1e-4, 512);

  std::vector<ResultRow> rows;
  const std::string id = "diagnose/" + problem.data.env_kind;
  rows.push_back({id, hash, config.seed, "rcn", rcn.rcn});
  rows.push_back({id, hash, config.seed, "kappa", rcn.kappa});
  rows.push_back({id, hash, config.seed, "kernel_bandwidth", kernel.bandwidth});
  rows.push_back({id, hash, config.seed, "grad_norm_leader", report.grad_norm_leader});
  rows.push_back({id, hash, config.seed, "grad_norm_follower", report.grad_norm_follower});
  rows.push_back({id, hash, config.seed, "dse_verdict", report.is_dse ? 1.0 : 0.0});
  const std::string path = out_file(config, "diagnose.csv");
  write_result_table(path, rows);
  log << "diagnose: rcn=" << format_double(rcn.rcn) << " kappa=" << format_double(rcn.kappa)
      << " -> " << path << "\n";
}

}  // namespace stackrl
