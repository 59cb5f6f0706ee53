#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <Eigen/Core>

#include "stackrl/action_space.hpp"
#include "stackrl/feature_map.hpp"
#include "stackrl/rng.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl {

struct StepOut {
  Eigen::VectorXd s_next;
  double r = 0.0;
  bool done = false;
};

// Planar system with sign-alternating contraction, a bilinear coupling term
// (s1*s2 added to both coordinates) and N(0, 0.25 I) transition noise. The
// reward grows like ||s'||^3, so states are kept in a bounded box
// (componentwise clamp at +-kStateClip) to keep returns finite.
class Sim2dEnv {
 public:
  static constexpr double kNoiseStd = 0.5;
  static constexpr double kStateClip = 3.0;

  double gamma = 0.95;
  int horizon = 100;

  int state_dim() const { return 2; }
  ActionSpace action_space() const { return ActionSpace::make_discrete(2); }

  Eigen::VectorXd initial_state(Rng& rng) const;
  StepOut step(const Eigen::VectorXd& s, int a, Rng& rng) const;

  // Noise-free transition (pre-clamp), for oracle tests.
  static Eigen::VectorXd dynamics_mean(const Eigen::VectorXd& s, int a);
  static double reward(const Eigen::VectorXd& s_next, int a);
};

// Classic cart-pole physics (Euler integration, standard constants) with a
// reward that peaks at the centered upright state and vanishes at the
// termination thresholds: r = (2 - |x|/x_clip)(2 - |th|/th_clip) - 1.
class CartPoleEnv {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXClip = 2.4;
  static constexpr double kThetaClip = 12.0 * M_PI / 180.0;

  double gamma = 0.95;
  int horizon = 200;

  int state_dim() const { return 4; }
  ActionSpace action_space() const { return ActionSpace::make_discrete(2); }

  Eigen::VectorXd initial_state(Rng& rng) const;
  StepOut step(const Eigen::VectorXd& s, int a, Rng& rng) const;

  static double reward(const Eigen::VectorXd& s);
  static bool out_of_bounds(const Eigen::VectorXd& s);
};

// One-step continuous-action environment with mean reward
// r(s, a) = (a - W s)' M (a - W s), M negative definite, s ~ U[0, 1.5]^6,
// observation noise N(0, 1). The optimal policy a = W s has zero regret in
// closed form.
class QuadraticRewardEnv {
 public:
  static constexpr int kStateDim = 6;
  static constexpr int kActionDim = 5;
  static constexpr double kStateHigh = 1.5;
  static constexpr double kActionLow = -8.0;
  static constexpr double kActionHigh = 17.0;

  explicit QuadraticRewardEnv(std::uint64_t seed);

  double gamma = 0.95;  // horizon-1 episodes; unused by returns
  int horizon = 1;

  int state_dim() const { return kStateDim; }
  ActionSpace action_space() const;

  Eigen::VectorXd initial_state(Rng& rng) const;
  StepOut step(const Eigen::VectorXd& s, const Eigen::VectorXd& a, Rng& rng) const;

  double mean_reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const;

  const Eigen::MatrixXd& w() const { return w_; }
  const Eigen::MatrixXd& m() const { return m_; }

  // Deterministic optimal policy a = W s (zero action noise).
  GaussianLinearPolicy optimal_policy() const;
  // Behavior a = W s + sigma0 * z.
  GaussianLinearPolicy behavior(double sigma0) const;

 private:
  Eigen::MatrixXd w_, m_;
};

// Closed-form regret of a Gaussian linear policy against the analytic
// optimum: E_s[-(A s - W s)' M (A s - W s)] - trace(M Sigma) >= 0, using the
// exact second moment of the uniform initial-state distribution.
double exact_regret_quadratic(const QuadraticRewardEnv& env, const GaussianLinearPolicy& policy);

using EnvAny = std::variant<Sim2dEnv, CartPoleEnv, QuadraticRewardEnv>;

EnvAny make_env(const std::string& kind, std::uint64_t env_seed = 0);
std::string env_kind(const EnvAny& env);
int env_state_dim(const EnvAny& env);
ActionSpace env_action_space(const EnvAny& env);
double env_gamma(const EnvAny& env);
int env_horizon(const EnvAny& env);
Eigen::VectorXd env_initial_state(const EnvAny& env, Rng& rng);

// Feature map over the environment's natural domain box.
FeatureMap default_feature_map(const EnvAny& env, int degree = 2);

// Range bound used for c_theta defaults.
double default_v_max(const EnvAny& env);

struct McStats {
  double mean = 0.0;
  double stddev = 0.0;  // across episode returns
  int episodes = 0;

  double stderr_mean() const;
};

// Monte Carlo discounted return of a policy; horizon <= 0 uses the
// environment default. Generic over the environment so tests can plug in
// stubs.
template <typename Env, typename ActFn>
McStats mc_return_impl(const Env& env, ActFn&& act, double gamma, int episodes, int horizon,
                       std::uint64_t seed) {
  if (episodes < 1) throw InputError("mc_return needs at least one episode");
  const int t_max = horizon > 0 ? horizon : env.horizon;
  double sum = 0.0, sumsq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    Eigen::VectorXd s = env.initial_state(rng);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < t_max; ++t) {
      const auto out = env.step(s, act(s, rng), rng);
      ret += disc * out.r;
      disc *= gamma;
      if (out.done) break;
      s = out.s_next;
    }
    sum += ret;
    sumsq += ret * ret;
  }
  McStats stats;
  stats.episodes = episodes;
  stats.mean = sum / episodes;
  const double var =
      episodes > 1 ? std::max(0.0, (sumsq - episodes * stats.mean * stats.mean) / (episodes - 1))
                   : 0.0;
  stats.stddev = std::sqrt(var);
  return stats;
}

McStats mc_return(const EnvAny& env, const PolicyHandle& policy, const FeatureMap& map,
                  double gamma, int episodes, int horizon, std::uint64_t seed);

}  // namespace stackrl
