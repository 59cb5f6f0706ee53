#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "stackrl/environments.hpp"
#include "stackrl/errors.hpp"

using namespace stackrl;

TEST_CASE("sim2d dynamics: hand evaluation of the displayed system") {
  // a = 1: diag(0.75, -0.75) s + (s1 s2, s1 s2)
  const Eigen::Vector2d s(1.0, 1.0);
  const Eigen::VectorXd next = Sim2dEnv::dynamics_mean(s, 1);
  CHECK(next[0] == doctest::Approx(1.75));
  CHECK(next[1] == doctest::Approx(0.25));

  // zero state is a fixed point of the noise-free dynamics
  const Eigen::VectorXd z = Sim2dEnv::dynamics_mean(Eigen::Vector2d(0, 0), 0);
  CHECK(z.norm() == 0.0);
  CHECK(Sim2dEnv::reward(Eigen::Vector2d(0, 0), 0) == doctest::Approx(0.25));
  CHECK(Sim2dEnv::reward(Eigen::Vector2d(0, 0), 1) == doctest::Approx(-0.25));
}

TEST_CASE("sim2d quadratic term equals the antidiagonal Hadamard construction") {
  Rng rng(61);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d s(rng.uniform(-2, 2), rng.uniform(-2, 2));
    // [[0,1],[1,0]] .* (s s^T) * ones = (s1 s2, s1 s2)
    Eigen::Matrix2d mask;
    mask << 0, 1, 1, 0;
    const Eigen::Vector2d quad = (mask.array() * (s * s.transpose()).array()).matrix()
                                 * Eigen::Vector2d(1, 1);
    for (const int a : {0, 1}) {
      const double sign = 2.0 * a - 1.0;
      Eigen::Vector2d linear(0.75 * sign * s[0], -0.75 * sign * s[1]);
      const Eigen::VectorXd got = Sim2dEnv::dynamics_mean(s, a);
      CHECK((got - (linear + quad)).norm() < 1e-14);
    }
  }
}

TEST_CASE("sim2d reward follows the adopted scalar interpretation") {
  Rng rng(62);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d sn(rng.uniform(-2, 2), rng.uniform(-2, 2));
    for (const int a : {0, 1}) {
      const double expected = 2.0 * sn[0] + sn[1] - 0.25 * (2.0 * a - 1.0)
                              + 0.75 * std::pow(sn.squaredNorm(), 1.5);
      CHECK(Sim2dEnv::reward(sn, a) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("sim2d noise moments match N(0, 0.25 I) within 3 standard errors") {
  const Sim2dEnv env;
  Rng rng(63);
  const int n = 100000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    // from the origin the next state is exactly the noise draw (clamp inactive)
    const auto out = env.step(Eigen::Vector2d(0, 0), rng.uniform_int(2), rng);
    mean += out.s_next;
    second += out.s_next * out.s_next.transpose();
  }
  mean /= n;
  second /= n;
  const double se_mean = 0.5 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean[0]) <= 3 * se_mean);
  CHECK(std::abs(mean[1]) <= 3 * se_mean);
  // var of x^2 for N(0, 0.25): 2 * 0.25^2 = 0.125
  const double se_var = std::sqrt(0.125 / n);
  CHECK(std::abs(second(0, 0) - 0.25) <= 3 * se_var);
  CHECK(std::abs(second(1, 1) - 0.25) <= 3 * se_var);
  const double se_cov = 0.25 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(second(0, 1)) <= 3 * se_cov);

  // initial states share the same distribution
  Eigen::Vector2d imean = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) imean += env.initial_state(rng);
  CHECK(std::abs(imean[0] / n) <= 3 * se_mean);
}

TEST_CASE("sim2d states stay in the clamp box") {
  const Sim2dEnv env;
  Rng rng(64);
  Eigen::VectorXd s = env.initial_state(rng);
  for (int t = 0; t < 2000; ++t) {
    const auto out = env.step(s, rng.uniform_int(2), rng);
    CHECK(out.s_next.cwiseAbs().maxCoeff() <= Sim2dEnv::kStateClip);
    CHECK(std::isfinite(out.r));
    s = out.s_next;
  }
}

TEST_CASE("cart-pole reward boundary values") {
  Eigen::VectorXd s(4);
  s << 0, 0, 0, 0;
  CHECK(CartPoleEnv::reward(s) == doctest::Approx(3.0));
  s << CartPoleEnv::kXClip, 0, CartPoleEnv::kThetaClip, 0;
  CHECK(CartPoleEnv::reward(s) == doctest::Approx(0.0));
  s << CartPoleEnv::kXClip, 0, 0, 0;
  CHECK(CartPoleEnv::reward(s) == doctest::Approx(1.0));
  s << -CartPoleEnv::kXClip, 0, -CartPoleEnv::kThetaClip, 0;
  CHECK(CartPoleEnv::reward(s) == doctest::Approx(0.0));

  Rng rng(65);
  for (int i = 0; i < 1000; ++i) {
    s << rng.uniform(-CartPoleEnv::kXClip, CartPoleEnv::kXClip), rng.uniform(-3, 3),
        rng.uniform(-CartPoleEnv::kThetaClip, CartPoleEnv::kThetaClip), rng.uniform(-3, 3);
    const double r = CartPoleEnv::reward(s);
    CHECK(r >= -1.0);
    CHECK(r <= 3.0);
  }
}

TEST_CASE("cart-pole step: termination at the clip and plausible physics") {
  const CartPoleEnv env;
  Rng rng(66);
  Eigen::VectorXd s(4);
  s << CartPoleEnv::kXClip, 0, CartPoleEnv::kThetaClip, 0;
  CHECK(env.step(s, 0, rng).done);

  s << 0, 0, 0, 0;
  const auto right = env.step(s, 1, rng);
  CHECK_FALSE(right.done);
  CHECK(right.s_next[1] > 0.0);  // push to the right accelerates the cart
  const auto left = env.step(s, 0, rng);
  CHECK(left.s_next[1] < 0.0);

  // uniform random play keeps the pole up only briefly
  int t = 0;
  Eigen::VectorXd state = env.initial_state(rng);
  for (; t < env.horizon; ++t) {
    const auto out = env.step(state, rng.uniform_int(2), rng);
    if (out.done) break;
    state = out.s_next;
  }
  CHECK(t < env.horizon);
}

TEST_CASE("quadratic env: negative definite M, optimum at a = W s") {
  const QuadraticRewardEnv env(7);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(env.m());
  CHECK(es.eigenvalues().maxCoeff() < 0.0);
  CHECK((env.w().array() > 0.0).all());
  CHECK((env.w().array() < 1.0).all());

  Rng rng(67);
  const Eigen::VectorXd s = env.initial_state(rng);
  CHECK((s.array() >= 0.0).all());
  CHECK((s.array() <= QuadraticRewardEnv::kStateHigh).all());
  const Eigen::VectorXd opt = env.w() * s;
  CHECK(env.mean_reward(s, opt) == doctest::Approx(0.0));
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd delta = rng.gaussian_vector(QuadraticRewardEnv::kActionDim);
    CHECK(env.mean_reward(s, opt + delta) < 0.0);
  }
  const auto out = env.step(s, opt, rng);
  CHECK(out.done);
}

TEST_CASE("exact_regret_quadratic: optimal policy, isotropic noise, MC oracle") {
  const QuadraticRewardEnv env(8);
  CHECK(exact_regret_quadratic(env, env.optimal_policy()) == doctest::Approx(0.0));

  const double sigma = 0.7;
  GaussianLinearPolicy noisy = env.behavior(sigma);
  CHECK(exact_regret_quadratic(env, noisy)
        == doctest::Approx(-sigma * sigma * env.m().trace()).epsilon(1e-12));

  // arbitrary policy vs Monte Carlo over states and actions
  Rng rng(68);
  GaussianLinearPolicy arb;
  arb.mean_matrix = env.w() + 0.2 * rng.gaussian_matrix(5, 6);
  arb.log_std = Eigen::VectorXd::Constant(5, std::log(0.4));
  const double exact = exact_regret_quadratic(env, arb);

  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  const Eigen::VectorXd sig = arb.sigma();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd s = env.initial_state(rng);
    Eigen::VectorXd a = arb.mean(s);
    for (int j = 0; j < a.size(); ++j) a[j] += sig[j] * rng.gaussian();
    const double sample = -env.mean_reward(s, a);
    sum += sample;
    sumsq += sample * sample;
  }
  const double mc = sum / n;
  const double se = std::sqrt((sumsq / n - mc * mc) / n);
  CHECK(std::abs(exact - mc) <= 3 * se);

  CHECK(exact >= 0.0);
}

namespace {

// reward-1 stub used by the geometric-series oracle
struct ConstRewardEnv {
  double gamma = 0.95;
  int horizon = 400;
  Eigen::VectorXd initial_state(Rng&) const { return Eigen::VectorXd::Zero(1); }
  StepOut step(const Eigen::VectorXd& s, int, Rng&) const { return StepOut{s, 1.0, false}; }
};

}  // namespace

TEST_CASE("mc_return: geometric series on a constant-reward stub") {
  const ConstRewardEnv env;
  const auto act = [](const Eigen::VectorXd&, Rng&) { return 0; };
  const int horizon = 400;
  const auto stats = mc_return_impl(env, act, 0.95, 3, horizon, 1);
  const double expected = (1.0 - std::pow(0.95, horizon)) / (1.0 - 0.95);
  CHECK(stats.mean == doctest::Approx(expected).epsilon(1e-12));
  CHECK(stats.stddev == doctest::Approx(0.0));
  CHECK(expected == doctest::Approx(20.0).epsilon(1e-8));

  const auto myopic = mc_return_impl(env, act, 0.0, 5, horizon, 1);
  CHECK(myopic.mean == doctest::Approx(1.0));
}

TEST_CASE("mc_return on the quadratic env matches the exact-regret-implied value") {
  const QuadraticRewardEnv qenv(9);
  const EnvAny env = qenv;
  const FeatureMap map = default_feature_map(env);
  GaussianLinearPolicy pi = qenv.behavior(0.8);
  const double regret = exact_regret_quadratic(qenv, pi);

  const McStats stats = mc_return(env, pi, map, qenv.gamma, 40000, -1, 77);
  // J(pi*) = 0, so the one-step return is -regret up to noise
  CHECK(std::abs(stats.mean + regret) <= 3 * stats.stderr_mean());

  // determinism
  const McStats again = mc_return(env, pi, map, qenv.gamma, 100, -1, 77);
  const McStats again2 = mc_return(env, pi, map, qenv.gamma, 100, -1, 77);
  CHECK(again.mean == again2.mean);
  CHECK(again.stddev == again2.stddev);
}

TEST_CASE("make_env dispatch and default feature maps") {
  CHECK(env_kind(make_env("sim2d")) == "sim2d");
  CHECK(env_kind(make_env("cartpole")) == "cartpole");
  CHECK(env_kind(make_env("quadratic", 3)) == "quadratic");
  CHECK_THROWS_AS(make_env("nope"), InputError);

  const auto sim_map = default_feature_map(make_env("sim2d"));
  CHECK(sim_map.dim() == 12);  // 6 monomials x 2 actions
  const auto quad_map = default_feature_map(make_env("quadratic", 3));
  CHECK(quad_map.dim() == 78);  // C(11 + 2, 2) joint monomials
  CHECK(default_v_max(make_env("cartpole")) == doctest::Approx(60.0));
}
