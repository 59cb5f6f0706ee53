#include "stackrl/datasets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "stackrl/detail/text_io.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

namespace {

struct Rollout {
  std::vector<Transition> transitions;
};

// Roll one episode under an arbitrary action sampler, respecting horizon
// and termination.
template <typename Env, typename ActFn>
Rollout roll_episode(const Env& env, ActFn&& act, Rng& rng, int max_steps) {
  Rollout out;
  Eigen::VectorXd s = env.initial_state(rng);
  for (int t = 0; t < max_steps; ++t) {
    const auto action = act(s, rng);
    const auto step = env.step(s, action, rng);
    Transition tr;
    tr.s = s;
    if constexpr (std::is_same_v<std::decay_t<decltype(action)>, int>) {
      tr.a = Eigen::VectorXd::Constant(1, static_cast<double>(action));
    } else {
      tr.a = action;
    }
    tr.r = step.r;
    tr.s_next = step.s_next;
    tr.done = step.done || t + 1 >= max_steps;
    out.transitions.push_back(std::move(tr));
    if (step.done) break;
    s = step.s_next;
  }
  return out;
}

template <typename Env>
std::vector<Transition> uniform_exploration(const Env& env, int count, Rng& rng) {
  const int na = env.action_space().cardinality;
  std::vector<Transition> out;
  while (static_cast<int>(out.size()) < count) {
    auto ep = roll_episode(
        env, [&](const Eigen::VectorXd&, Rng& r) { return r.uniform_int(na); }, rng,
        env.horizon);
    for (auto& tr : ep.transitions) {
      out.push_back(std::move(tr));
      if (static_cast<int>(out.size()) == count) break;
    }
  }
  return out;
}

}  // namespace

SoftmaxPolicy behavior_softmax(const EnvAny& env, const FeatureMap& map, double alpha,
                               int fqi_rounds, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw InputError("behavior temperature alpha must be positive");
  if (fqi_rounds < 1) throw InputError("fqi_rounds must be positive");
  if (!env_action_space(env).discrete())
    throw UnsupportedError("behavior_softmax requires a discrete action space");

  Rng rng(derive_seed(seed, 0xf91));
  std::vector<Transition> explore;
  if (std::holds_alternative<Sim2dEnv>(env)) {
    explore = uniform_exploration(std::get<Sim2dEnv>(env), fqi_rounds * 500, rng);
  } else {
    explore = uniform_exploration(std::get<CartPoleEnv>(env), fqi_rounds * 500, rng);
  }

  const int n = static_cast<int>(explore.size());
  const int p = map.dim();
  const int na = env_action_space(env).cardinality;
  const double gamma = env_gamma(env);

  Eigen::MatrixXd phi(n, p);
  std::vector<Eigen::MatrixXd> next_phi(na, Eigen::MatrixXd(n, p));
  Eigen::VectorXd rewards(n);
  for (int i = 0; i < n; ++i) {
    phi.row(i) = map.features(explore[i].s, static_cast<int>(explore[i].a[0]));
    rewards[i] = explore[i].r;
    for (int a = 0; a < na; ++a)
      next_phi[a].row(i) = map.features(explore[i].s_next, a);
  }

  constexpr double kRidge = 1e-3;
  Eigen::MatrixXd gram_ridge = phi.transpose() * phi;
  gram_ridge.diagonal().array() += kRidge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram_ridge);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (int round = 0; round < fqi_rounds; ++round) {
    Eigen::VectorXd target = rewards;
    for (int i = 0; i < n; ++i) {
      if (explore[i].done) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < na; ++a) best = std::max(best, next_phi[a].row(i).dot(theta));
      target[i] += gamma * best;
    }
    theta = solver.solve(phi.transpose() * target);
  }

  SoftmaxPolicy pi;
  pi.omega = theta / alpha;
  return pi;
}

GaussianLinearPolicy behavior_gaussian(const QuadraticRewardEnv& env, double sigma0) {
  return env.behavior(sigma0);
}

OfflineDataset generate(const EnvAny& env, const PolicyHandle& behavior, const FeatureMap& map,
                        int n, std::uint64_t seed, int m_init) {
  if (n < 1) throw InputError("dataset size must be positive");
  if (m_init < 1) throw InputError("initial-state count must be positive");

  OfflineDataset data;
  data.env_kind = env_kind(env);
  data.state_dim = env_state_dim(env);
  data.action_space = env_action_space(env);
  data.gamma = env_gamma(env);
  data.meta["seed"] = std::to_string(seed);

  Rng rng(derive_seed(seed, 0));
  const int horizon = env_horizon(env);
  while (data.size() < n) {
    Rollout ep;
    if (const auto* soft = std::get_if<SoftmaxPolicy>(&behavior)) {
      auto act = [&](const Eigen::VectorXd& s, Rng& r) {
        return sample_discrete_action(*soft, map, s, r);
      };
      if (std::holds_alternative<Sim2dEnv>(env)) {
        ep = roll_episode(std::get<Sim2dEnv>(env), act, rng, horizon);
      } else {
        ep = roll_episode(std::get<CartPoleEnv>(env), act, rng, horizon);
      }
    } else {
      const auto& gauss = std::get<GaussianLinearPolicy>(behavior);
      const auto& qenv = std::get<QuadraticRewardEnv>(env);
      const ActionSpace space = qenv.action_space();
      auto act = [&](const Eigen::VectorXd& s, Rng& r) {
        return sample_box_action(gauss, space, s, r);
      };
      ep = roll_episode(qenv, act, rng, horizon);
    }
    for (auto& tr : ep.transitions) {
      data.transitions.push_back(std::move(tr));
      if (data.size() == n) break;
    }
  }

  Rng init_rng(derive_seed(seed, 1));
  for (int i = 0; i < m_init; ++i)
    data.initial_states.states.push_back(env_initial_state(env, init_rng));
  return data;
}

RcnReport rcn_from_moments(const Eigen::MatrixXd& sigma_pi, const Eigen::MatrixXd& sigma_mu) {
  if (sigma_pi.rows() != sigma_mu.rows() || sigma_pi.cols() != sigma_mu.cols())
    throw InputError("moment matrices must have matching shape");
  if (sigma_mu.norm() < 1e-12) throw NumericError("data moment matrix is numerically zero");
  Eigen::MatrixXd reg = sigma_mu;
  reg.diagonal().array() += 1e-8;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_pi, reg);
  RcnReport out;
  out.rcn = es.eigenvalues().maxCoeff();
  out.kappa = sigma_mu.trace();
  return out;
}

RcnReport relative_condition_number(const OfflineDataset& data, const PolicyHandle& target,
                                    const EnvAny& env, const FeatureMap& map, int rollouts,
                                    std::uint64_t seed) {
  if (rollouts < 1) throw InputError("relative_condition_number needs rollouts >= 1");
  const int p = map.dim();
  // The offline distribution is the behavior's discounted visitation, so the
  // data moment discounts each transition by gamma^t within its episode
  // (episode boundaries are recovered from the done flags).
  const double gamma_mu = env_gamma(env);
  Eigen::MatrixXd sigma_mu = Eigen::MatrixXd::Zero(p, p);
  double weight_sum = 0.0;
  double weight = 1.0;
  for (const auto& tr : data.transitions) {
    const Eigen::VectorXd phi = map.action_space().discrete()
                                    ? map.features(tr.s, static_cast<int>(tr.a[0]))
                                    : map.features(tr.s, tr.a);
    sigma_mu.noalias() += weight * phi * phi.transpose();
    weight_sum += weight;
    weight = tr.done ? 1.0 : weight * gamma_mu;
  }
  sigma_mu /= weight_sum;

  const double gamma = env_gamma(env);
  const int horizon = env_horizon(env);
  Eigen::MatrixXd sigma_pi = Eigen::MatrixXd::Zero(p, p);
  for (int r = 0; r < rollouts; ++r) {
    Rng rng(derive_seed(seed, 0x7c0 + static_cast<std::uint64_t>(r)));
    // geometric time draw truncated at the horizon
    int t_target = 0;
    while (rng.uniform() < gamma && t_target + 1 < horizon) ++t_target;

    Eigen::VectorXd s = env_initial_state(env, rng);
    Eigen::VectorXd phi;
    if (const auto* soft = std::get_if<SoftmaxPolicy>(&target)) {
      const auto step_env = [&](const Eigen::VectorXd& st, int a, Rng& rg) {
        return std::holds_alternative<Sim2dEnv>(env) ? std::get<Sim2dEnv>(env).step(st, a, rg)
                                                     : std::get<CartPoleEnv>(env).step(st, a, rg);
      };
      int a = sample_discrete_action(*soft, map, s, rng);
      for (int t = 0; t < t_target; ++t) {
        const auto out = step_env(s, a, rng);
        if (out.done) break;
        s = out.s_next;
        a = sample_discrete_action(*soft, map, s, rng);
      }
      phi = map.features(s, a);
    } else {
      const auto& gauss = std::get<GaussianLinearPolicy>(target);
      const auto& qenv = std::get<QuadraticRewardEnv>(env);
      const Eigen::VectorXd a = sample_box_action(gauss, qenv.action_space(), s, rng);
      phi = map.features(s, a);
    }
    sigma_pi.noalias() += phi * phi.transpose();
  }
  sigma_pi /= static_cast<double>(rollouts);
  return rcn_from_moments(sigma_pi, sigma_mu);
}

std::string coverage_label(double alpha) {
  if (alpha < 0.5) return "poor";
  if (alpha < 2.5) return "medium";
  return "well";
}

}  // namespace stackrl
