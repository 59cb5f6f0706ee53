#include <doctest.h>

#include <cmath>

#include "stackrl/errors.hpp"
#include "stackrl/learner.hpp"
#include "support/fd.hpp"
#include "support/instances.hpp"

using namespace stackrl;
using testsupport::make_gaussian_instance;
using testsupport::make_softmax_instance;
using testsupport::rel_err;

TEST_CASE("LearnerConfig validation enforces the two-timescale contract") {
  LearnerConfig ok;
  CHECK_NOTHROW(ok.validate());
  LearnerConfig bad = ok;
  bad.a1 = 0.6;
  bad.a2 = 0.9;  // a1 must exceed a2
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = ok;
  bad.a2 = 0.4;  // outside (0.5, 1]
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = ok;
  bad.c1 = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = ok;
  bad.minibatch = 1;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("step_sizes: k = 0 gives the constants; defaults at k = 99; ratio vanishes") {
  LearnerConfig config;
  const auto [g1_0, g2_0] = step_sizes(0, config);
  CHECK(g1_0 == doctest::Approx(config.c1));
  CHECK(g2_0 == doctest::Approx(config.c2));

  const auto [g1_99, g2_99] = step_sizes(99, config);
  CHECK(g1_99 == doctest::Approx(0.5 / std::pow(100.0, 0.9)).epsilon(1e-14));
  CHECK(g2_99 == doctest::Approx(1.0 / std::pow(100.0, 0.6)).epsilon(1e-14));

  const auto [g1_m, g2_m] = step_sizes(1000000, config);
  CHECK(g1_m / g2_m < std::pow(10.0, -(0.9 - 0.6) * 6.0 + 1.0));

  double prev_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const auto [g1, g2] = step_sizes(k, config);
    CHECK(g1 / g2 < prev_ratio);
    prev_ratio = g1 / g2;
  }
}

TEST_CASE("quadratic game: equilibrium is a critical point of the Stackelberg value") {
  for (int trial = 0; trial < 4; ++trial) {
    const QuadraticGame game = make_convergent_game(40 + trial, 3, 4);
    const auto [x1s, x2s] = game.equilibrium();
    CHECK(game.total_leader_grad(x1s, x2s).norm() < 1e-10);
    CHECK(game.grad2_f2(x1s, x2s).norm() < 1e-10);
    CHECK(rel_err(game.response(x1s), x2s) < 1e-10);
    // the constructed leader curvature is -I
    CHECK((game.leader_curvature() + Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-9);

    // numerical cross-check of the Stackelberg value gradient
    const auto g_of = [&](const Eigen::VectorXd& x1) { return game.f1(x1, game.response(x1)); };
    CHECK(testsupport::fd_gradient(g_of, x1s).norm() < 1e-6);
  }
}

TEST_CASE("run_quadratic_game: a noise-free start at the equilibrium stays there") {
  const QuadraticGame game = make_convergent_game(3, 3, 4);
  const auto [x1s, x2s] = game.equilibrium();
  LearnerConfig config;
  config.iterations = 2000;
  config.seed = 5;
  const auto traj = run_quadratic_game(game, config, 0.0, x1s, x2s, 500);
  CHECK((traj.x1_final - x1s).norm() < 1e-12);
  CHECK((traj.x2_final - x2s).norm() < 1e-12);
}

TEST_CASE("run_quadratic_game: noise-free dynamics contract to the equilibrium") {
  const QuadraticGame game = make_convergent_game(4, 3, 4);
  const auto [x1s, x2s] = game.equilibrium();
  LearnerConfig config;
  config.iterations = 50000;
  config.seed = 6;
  Rng rng(9);
  Eigen::VectorXd x1 = x1s + 0.7 * rng.gaussian_vector(3);
  Eigen::VectorXd x2 = x2s + 0.7 * rng.gaussian_vector(4);
  const auto traj = run_quadratic_game(game, config, 0.0, x1, x2, 100);
  CHECK((traj.x1_final - x1s).norm() < 1e-3);

  // distance to equilibrium is eventually monotone over the stored tail
  const size_t half = traj.x1.size() / 2;
  double prev = std::numeric_limits<double>::infinity();
  for (size_t i = half; i < traj.x1.size(); ++i) {
    const double dist = std::sqrt((traj.x1[i] - x1s).squaredNorm()
                                  + (traj.x2[i] - x2s).squaredNorm());
    CHECK(dist <= prev + 1e-12);
    prev = dist;
  }
}

TEST_CASE("run_quadratic_game: noisy runs reach the equilibrium neighborhood") {
  const QuadraticGame game = make_convergent_game(5, 3, 4);
  const auto [x1s, x2s] = game.equilibrium();
  int hits = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    LearnerConfig config;
    config.iterations = 50000;
    config.seed = 100 + s;
    Rng rng(derive_seed(777, s));
    Eigen::VectorXd start(7);
    for (int i = 0; i < 7; ++i) start[i] = rng.gaussian();
    start *= rng.uniform() / std::max(start.norm(), 1e-9);
    const auto traj = run_quadratic_game(game, config, 0.01, start.head(3), start.tail(4),
                                         config.iterations);
    const double dist = std::sqrt((traj.x1_final - x1s).squaredNorm()
                                  + (traj.x2_final - x2s).squaredNorm());
    if (dist < 1e-2) ++hits;
  }
  CHECK(hits >= 19);
}

TEST_CASE("saddle game: noise escapes, the exact saddle is a fixed point") {
  const QuadraticGame game = make_saddle_game(11, 3);
  const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(3);
  CHECK(game.total_leader_grad(zero1, zero2).norm() == 0.0);

  LearnerConfig config;
  config.iterations = 10000;
  config.seed = 12;
  const auto still = run_quadratic_game(game, config, 0.0, zero1, zero2, 10000);
  CHECK(still.x1_final.norm() < 1e-6);
  CHECK(still.x2_final.norm() < 1e-6);

  int escaped = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    LearnerConfig noisy = config;
    noisy.seed = 200 + s;
    const auto traj = run_quadratic_game(game, noisy, 0.01, zero1, zero2, 100);
    double max_dist = 0.0;
    for (size_t i = 0; i < traj.x1.size(); ++i)
      max_dist = std::max(max_dist, std::sqrt(traj.x1[i].squaredNorm()
                                              + traj.x2[i].squaredNorm()));
    if (max_dist > 0.1) ++escaped;
  }
  CHECK(escaped >= 19);
}

TEST_CASE("run_quadratic_game reports divergence") {
  QuadraticGame game = make_convergent_game(13, 2, 2);
  game.p1 = 1e4 * Eigen::MatrixXd::Identity(2, 2);  // ascent on +x1^2 explodes
  LearnerConfig config;
  config.iterations = 200000;
  config.c1 = 1.0;
  config.seed = 1;
  CHECK_THROWS_AS(run_quadratic_game(game, config, 0.0, Eigen::Vector2d(1, 1),
                                     Eigen::Vector2d(0, 0)),
                  DivergenceError);
}

TEST_CASE("dse_check_game classifies equilibria, generic points, and saddles") {
  const QuadraticGame game = make_convergent_game(21, 3, 4);
  const auto [x1s, x2s] = game.equilibrium();
  const auto at_eq = dse_check_game(game, x1s, x2s, 1e-6, 1e-6);
  CHECK(at_eq.is_dse);
  CHECK(at_eq.grad_norm_leader <= 1e-6);
  CHECK(at_eq.leader_curvature_max_eig < 0.0);
  CHECK(at_eq.follower_hessian_min_eig > 0.0);
  CHECK(at_eq.j_s_eigenvalues.size() == 7);

  Rng rng(22);
  const auto off = dse_check_game(game, x1s + rng.gaussian_vector(3),
                                  x2s + rng.gaussian_vector(4));
  CHECK_FALSE(off.is_dse);
  CHECK(off.grad_norm_leader > 1e-4);

  const QuadraticGame saddle = make_saddle_game(23, 3);
  const auto at_saddle = dse_check_game(saddle, Eigen::VectorXd::Zero(2),
                                        Eigen::VectorXd::Zero(3));
  CHECK(at_saddle.grad_norm_leader < 1e-10);
  CHECK(at_saddle.grad_norm_follower < 1e-10);
  CHECK_FALSE(at_saddle.is_dse);  // indefinite leader curvature
  CHECK(at_saddle.leader_curvature_max_eig > 0.5);
}

TEST_CASE("train is reproducible bit for bit and respects the projection balls") {
  const auto inst = make_softmax_instance(31, 60);
  LearnerConfig config;
  config.lambda = 0.3;
  config.iterations = 200;
  config.minibatch = 16;
  config.seed = 99;
  config.eval_every = 50;

  SoftmaxPolicy pi0;
  pi0.omega = Eigen::VectorXd::Zero(inst.map.dim());
  pi0.c_omega = 2.0;  // tight ball so the projection actually binds
  LinearQ q0 = LinearQ::zeros(inst.map, 0.5, 50.0);

  const auto r1 = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config);
  const auto r2 = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config);

  CHECK(policy_params(r1.policy) == policy_params(r2.policy));
  CHECK(r1.q.theta == r2.q.theta);
  REQUIRE(r1.trace.rows.size() == r2.trace.rows.size());
  CHECK(r1.trace.rows.size() == 4);  // iterations / eval_every
  for (size_t i = 0; i < r1.trace.rows.size(); ++i) {
    CHECK(r1.trace.rows[i].leader_value == r2.trace.rows[i].leader_value);
    CHECK(r1.trace.rows[i].follower_loss == r2.trace.rows[i].follower_loss);
    CHECK(r1.trace.rows[i].total_dj_norm == r2.trace.rows[i].total_dj_norm);
  }
  CHECK(policy_params(r1.policy).norm() <= 2.0 + 1e-12);
  CHECK(r1.q.theta.norm() <= 0.5 + 1e-12);

  LearnerConfig other = config;
  other.seed = 100;
  const auto r3 = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, other);
  CHECK(policy_params(r3.policy) != policy_params(r1.policy));
}

TEST_CASE("train with lambda = 0: follower gradient collapses to grad_q_J") {
  auto inst = make_softmax_instance(32, 40);
  for (auto& t : inst.data.transitions) t.r = 0.0;
  inst.data.gamma = 0.0;

  // with the pair term disabled the follower direction is exactly grad_q_J
  const Eigen::VectorXd g = grad_q_L(inst.map, inst.q, inst.policy, inst.data, inst.kernel,
                                     0.0, 0.0, inst.init);
  CHECK(rel_err(g, grad_q_J(inst.map, inst.policy, inst.init)) < 1e-14);

  LearnerConfig config;
  config.lambda = 0.0;
  config.iterations = 100;
  config.minibatch = 8;
  config.seed = 5;
  config.eval_every = 100;
  SoftmaxPolicy pi0;
  pi0.omega = Eigen::VectorXd::Zero(inst.map.dim());
  const LinearQ q0 = LinearQ::zeros(inst.map, 50.0, 50.0);
  const auto result = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config);
  CHECK(policy_params(result.policy).allFinite());
  CHECK(result.q.theta.allFinite());
  CHECK(result.q.theta.norm() <= 50.0 + 1e-12);
}

TEST_CASE("train propagates gaussian instances") {
  const auto inst = make_gaussian_instance(33, 50);
  LearnerConfig config;
  config.lambda = 0.2;
  config.iterations = 120;
  config.minibatch = 16;
  config.seed = 7;
  config.eval_every = 40;
  config.m_act = 8;
  const auto pi0 = GaussianLinearPolicy::zeros(2, 2);
  const LinearQ q0 = LinearQ::zeros(inst.map, 50.0, 50.0);
  const auto result = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config);
  CHECK(result.trace.rows.size() == 3);
  CHECK(policy_params(result.policy).allFinite());

  const auto again = train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config);
  CHECK(policy_params(result.policy) == policy_params(again.policy));
}

TEST_CASE("train rejects a dataset smaller than the minibatch") {
  const auto inst = make_softmax_instance(34, 10);
  LearnerConfig config;
  config.minibatch = 32;
  SoftmaxPolicy pi0;
  pi0.omega = Eigen::VectorXd::Zero(inst.map.dim());
  const LinearQ q0 = LinearQ::zeros(inst.map, 1.0, 1.0);
  CHECK_THROWS_AS(train(inst.map, inst.data, inst.init, inst.kernel, pi0, q0, config),
                  InputError);
}

TEST_CASE("dse_check on an RL instance produces a coherent report") {
  const auto inst = make_softmax_instance(35, 40);
  LearnerConfig config;
  config.lambda = inst.lambda;
  config.seed = 3;
  const auto report = dse_check(inst.map, inst.data, inst.kernel, inst.policy, inst.q,
                                inst.init, config);
  CHECK(std::isfinite(report.grad_norm_leader));
  CHECK(std::isfinite(report.grad_norm_follower));
  CHECK(std::isfinite(report.leader_curvature_max_eig));
  CHECK(report.follower_hessian_min_eig >= -1e-8);
  CHECK(report.j_s_eigenvalues.size()
        == static_cast<size_t>(inst.map.dim() + policy_param_dim(inst.policy, inst.map)));
  // a random point is not an equilibrium
  CHECK_FALSE(report.is_dse);
}
