#include "stackrl/environments.hpp"

#include <cmath>
#include <Eigen/Eigenvalues>

#include "stackrl/errors.hpp"

namespace stackrl {

Eigen::VectorXd Sim2dEnv::initial_state(Rng& rng) const {
  Eigen::VectorXd s(2);
  s << kNoiseStd * rng.gaussian(), kNoiseStd * rng.gaussian();
  return s;
}

Eigen::VectorXd Sim2dEnv::dynamics_mean(const Eigen::VectorXd& s, int a) {
  const double sign = 2.0 * a - 1.0;
  Eigen::VectorXd next(2);
  const double coupling = s[0] * s[1];  // [[0,1],[1,0]] .* s s' summed per row
  next[0] = 0.75 * sign * s[0] + coupling;
  next[1] = -0.75 * sign * s[1] + coupling;
  return next;
}

double Sim2dEnv::reward(const Eigen::VectorXd& s_next, int a) {
  const double sign = 2.0 * a - 1.0;
  const double sq = s_next.squaredNorm();
  return 2.0 * s_next[0] + s_next[1] - 0.25 * sign + 0.75 * std::pow(sq, 1.5);
}

StepOut Sim2dEnv::step(const Eigen::VectorXd& s, int a, Rng& rng) const {
  if (s.size() != 2) throw InputError("sim2d expects a 2-dimensional state");
  if (a != 0 && a != 1) throw InputError("sim2d expects a binary action");
  Eigen::VectorXd next = dynamics_mean(s, a);
  next[0] += kNoiseStd * rng.gaussian();
  next[1] += kNoiseStd * rng.gaussian();
  next = next.cwiseMax(-kStateClip).cwiseMin(kStateClip);
  return StepOut{next, reward(next, a), false};
}

Eigen::VectorXd CartPoleEnv::initial_state(Rng& rng) const {
  Eigen::VectorXd s(4);
  for (int i = 0; i < 4; ++i) s[i] = rng.uniform(-0.05, 0.05);
  return s;
}

double CartPoleEnv::reward(const Eigen::VectorXd& s) {
  const double fx = 2.0 - std::abs(s[0]) / kXClip;
  const double fth = 2.0 - std::abs(s[2]) / kThetaClip;
  return std::abs(fx) * std::abs(fth) - 1.0;
}

bool CartPoleEnv::out_of_bounds(const Eigen::VectorXd& s) {
  return std::abs(s[0]) >= kXClip || std::abs(s[2]) >= kThetaClip;
}

StepOut CartPoleEnv::step(const Eigen::VectorXd& s, int a, Rng&) const {
  if (s.size() != 4) throw InputError("cart-pole expects a 4-dimensional state");
  if (a != 0 && a != 1) throw InputError("cart-pole expects a binary action");
  const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  const double force = a == 1 ? kForceMag : -kForceMag;
  const double total_mass = kMassCart + kMassPole;
  const double polemass_length = kMassPole * kHalfLength;
  const double costh = std::cos(theta), sinth = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sinth) / total_mass;
  const double theta_acc =
      (kGravity * sinth - costh * temp)
      / (kHalfLength * (4.0 / 3.0 - kMassPole * costh * costh / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * costh / total_mass;

  Eigen::VectorXd next(4);
  next[0] = x + kTau * x_dot;
  next[1] = x_dot + kTau * x_acc;
  next[2] = theta + kTau * theta_dot;
  next[3] = theta_dot + kTau * theta_acc;

  const bool done = out_of_bounds(s) || out_of_bounds(next);
  return StepOut{next, reward(s), done};
}

QuadraticRewardEnv::QuadraticRewardEnv(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9d2c));
  w_.resize(kActionDim, kStateDim);
  for (int i = 0; i < kActionDim; ++i)
    for (int j = 0; j < kStateDim; ++j) w_(i, j) = rng.uniform();
  const Eigen::MatrixXd m0 = rng.gaussian_matrix(kActionDim, kActionDim);
  m_ = -(m0.transpose() * m0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
  if (es.eigenvalues().maxCoeff() >= 0.0)
    throw NumericError("quadratic-reward environment drew a singular M; use another seed");
}

ActionSpace QuadraticRewardEnv::action_space() const {
  return ActionSpace::make_box(Eigen::VectorXd::Constant(kActionDim, kActionLow),
                               Eigen::VectorXd::Constant(kActionDim, kActionHigh));
}

Eigen::VectorXd QuadraticRewardEnv::initial_state(Rng& rng) const {
  Eigen::VectorXd s(kStateDim);
  for (int i = 0; i < kStateDim; ++i) s[i] = rng.uniform(0.0, kStateHigh);
  return s;
}

double QuadraticRewardEnv::mean_reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const {
  const Eigen::VectorXd d = a - w_ * s;
  return d.dot(m_ * d);
}

StepOut QuadraticRewardEnv::step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                 Rng& rng) const {
  if (s.size() != kStateDim) throw InputError("quadratic env state dimension mismatch");
  if (a.size() != kActionDim) throw InputError("quadratic env action dimension mismatch");
  return StepOut{s, mean_reward(s, a) + rng.gaussian(), true};
}

GaussianLinearPolicy QuadraticRewardEnv::optimal_policy() const {
  GaussianLinearPolicy pi;
  pi.mean_matrix = w_;
  pi.log_std = Eigen::VectorXd::Constant(kActionDim, -std::numeric_limits<double>::infinity());
  return pi;
}

GaussianLinearPolicy QuadraticRewardEnv::behavior(double sigma0) const {
  if (sigma0 < 0.0) throw InputError("sigma0 must be nonnegative");
  if (sigma0 == 0.0) return optimal_policy();
  GaussianLinearPolicy pi;
  pi.mean_matrix = w_;
  pi.log_std = Eigen::VectorXd::Constant(kActionDim, std::log(sigma0));
  return pi;
}

double exact_regret_quadratic(const QuadraticRewardEnv& env,
                              const GaussianLinearPolicy& policy) {
  if (policy.state_dim() != QuadraticRewardEnv::kStateDim
      || policy.action_dim() != QuadraticRewardEnv::kActionDim)
    throw InputError("policy dimensions do not match the quadratic environment");
  const int d = QuadraticRewardEnv::kStateDim;
  const double high = QuadraticRewardEnv::kStateHigh;
  // E[s s'] of U[0, high]^d: mean^2 off-diagonal, second moment high^2/3 on
  // the diagonal.
  const double mean = high / 2.0;
  Eigen::MatrixXd smom = Eigen::MatrixXd::Constant(d, d, mean * mean);
  smom.diagonal().setConstant(high * high / 3.0);

  const Eigen::MatrixXd diff = policy.mean_matrix - env.w();
  const double mean_term = -(diff.transpose() * env.m() * diff * smom).trace();
  const Eigen::VectorXd sig = policy.sigma();
  double noise_term = 0.0;
  for (int i = 0; i < sig.size(); ++i) noise_term -= env.m()(i, i) * sig[i] * sig[i];
  return std::max(0.0, mean_term + noise_term);
}

EnvAny make_env(const std::string& kind, std::uint64_t env_seed) {
  if (kind == "sim2d") return Sim2dEnv{};
  if (kind == "cartpole") return CartPoleEnv{};
  if (kind == "quadratic") return QuadraticRewardEnv(env_seed);
  throw InputError("unknown environment kind: " + kind);
}

std::string env_kind(const EnvAny& env) {
  if (std::holds_alternative<Sim2dEnv>(env)) return "sim2d";
  if (std::holds_alternative<CartPoleEnv>(env)) return "cartpole";
  return "quadratic";
}

int env_state_dim(const EnvAny& env) {
  return std::visit([](const auto& e) { return e.state_dim(); }, env);
}

ActionSpace env_action_space(const EnvAny& env) {
  return std::visit([](const auto& e) { return e.action_space(); }, env);
}

double env_gamma(const EnvAny& env) {
  return std::visit([](const auto& e) { return e.gamma; }, env);
}

int env_horizon(const EnvAny& env) {
  return std::visit([](const auto& e) { return e.horizon; }, env);
}

Eigen::VectorXd env_initial_state(const EnvAny& env, Rng& rng) {
  return std::visit([&rng](const auto& e) { return e.initial_state(rng); }, env);
}

FeatureMap default_feature_map(const EnvAny& env, int degree) {
  if (std::holds_alternative<Sim2dEnv>(env)) {
    const double c = Sim2dEnv::kStateClip;
    return FeatureMap::polynomial(degree, 2, ActionSpace::make_discrete(2),
                                  Eigen::Vector2d(-c, -c), Eigen::Vector2d(c, c));
  }
  if (std::holds_alternative<CartPoleEnv>(env)) {
    Eigen::VectorXd lo(4), hi(4);
    lo << -CartPoleEnv::kXClip, -4.0, -CartPoleEnv::kThetaClip, -4.0;
    hi = -lo;
    return FeatureMap::polynomial(degree, 4, ActionSpace::make_discrete(2), lo, hi);
  }
  const auto& qenv = std::get<QuadraticRewardEnv>(env);
  return FeatureMap::polynomial(degree, qenv.state_dim(), qenv.action_space(),
                                Eigen::VectorXd::Zero(qenv.state_dim()),
                                Eigen::VectorXd::Constant(qenv.state_dim(),
                                                          QuadraticRewardEnv::kStateHigh));
}

double default_v_max(const EnvAny& env) {
  if (std::holds_alternative<Sim2dEnv>(env)) {
    const double c = Sim2dEnv::kStateClip;
    const double r_max = 3.0 * c + 0.25 + 0.75 * std::pow(2.0 * c * c, 1.5);
    return r_max / (1.0 - env_gamma(env));
  }
  if (std::holds_alternative<CartPoleEnv>(env)) return 3.0 / (1.0 - env_gamma(env));
  return 4000.0;
}

double McStats::stderr_mean() const {
  return episodes > 0 ? stddev / std::sqrt(static_cast<double>(episodes)) : 0.0;
}

McStats mc_return(const EnvAny& env, const PolicyHandle& policy, const FeatureMap& map,
                  double gamma, int episodes, int horizon, std::uint64_t seed) {
  if (env_action_space(env).discrete()) {
    const auto* soft = std::get_if<SoftmaxPolicy>(&policy);
    if (soft == nullptr) throw InputError("discrete environment needs a softmax policy");
    auto act = [&](const Eigen::VectorXd& s, Rng& rng) {
      return sample_discrete_action(*soft, map, s, rng);
    };
    if (std::holds_alternative<Sim2dEnv>(env))
      return mc_return_impl(std::get<Sim2dEnv>(env), act, gamma, episodes, horizon, seed);
    return mc_return_impl(std::get<CartPoleEnv>(env), act, gamma, episodes, horizon, seed);
  }
  const auto* gauss = std::get_if<GaussianLinearPolicy>(&policy);
  if (gauss == nullptr) throw InputError("box-action environment needs a Gaussian policy");
  const auto& qenv = std::get<QuadraticRewardEnv>(env);
  const ActionSpace space = qenv.action_space();
  auto act = [&](const Eigen::VectorXd& s, Rng& rng) {
    return sample_box_action(*gauss, space, s, rng);
  };
  return mc_return_impl(qenv, act, gamma, episodes, horizon, seed);
}

}  // namespace stackrl
