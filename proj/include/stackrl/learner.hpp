#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>
#include <Eigen/Core>

#include "stackrl/dataset_types.hpp"
#include "stackrl/gradients.hpp"
#include "stackrl/kernel.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl {

// Two-timescale configuration: gamma_{1,k} = c1/(1+k)^{a1} for the leader,
// gamma_{2,k} = c2/(1+k)^{a2} for the follower, with a1 > a2 so the leader
// moves on the slower timescale.
struct LearnerConfig {
  double lambda = 0.1;

  bool beta_auto = true;     // beta = 1e-3 trace(H)/p + 1e-8, per iteration
  double beta_fixed = 1e-3;  // used when beta_auto is false
  double solve_tol = 1e-8;

  double c1 = 0.5;
  double a1 = 0.9;
  double c2 = 1.0;
  double a2 = 0.6;

  int iterations = 20000;
  int minibatch = 128;
  std::uint64_t seed = 0;
  int eval_every = 100;

  int m_act = 32;           // Gaussian-policy expectation samples per iteration
  int eval_subsample = 512; // rows used for logged diagnostics on large datasets

  void validate() const;
};

std::pair<double, double> step_sizes(int k, const LearnerConfig& config);

struct TraceRow {
  int k = 0;
  double leader_value = 0.0;
  double follower_loss = 0.0;
  double total_dj_norm = 0.0;
  double grad_q_l_norm = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double wall_ms = 0.0;  // excluded from persisted traces to keep outputs byte-stable
};

struct TrainTrace {
  std::vector<TraceRow> rows;
};

struct TrainResult {
  PolicyHandle policy;
  LinearQ q;
  TrainTrace trace;
};

// Algorithm: for k = 1..K, draw a minibatch, form the stochastic total
// derivative and follower gradient, ascend the policy, descend q, project
// both onto their balls. Deterministic given (data, config, seed).
TrainResult train(const FeatureMap& map, const OfflineDataset& data,
                  const InitialStateSet& init, const KernelSpec& kernel,
                  const PolicyHandle& policy0, const LinearQ& q0, const LearnerConfig& config);

// First/second-order certificate at a candidate equilibrium. The leader
// maximizes, so its curvature test is max-eigenvalue <= -tol_c while the
// follower Hessian test is min-eigenvalue >= tol_c.
struct DSEReport {
  double grad_norm_leader = 0.0;
  double grad_norm_follower = 0.0;
  double leader_curvature_max_eig = 0.0;
  double follower_hessian_min_eig = 0.0;
  bool is_dse = false;
  std::vector<std::complex<double>> j_s_eigenvalues;
  double tol_g = 1e-4;
  double tol_c = 1e-6;
};

// Full-dataset check; leader curvature and the leader rows of the game
// Jacobian are estimated by central finite differences of the total
// derivative. Datasets larger than max_rows are deterministically
// subsampled for the pair statistics.
DSEReport dse_check(const FeatureMap& map, const OfflineDataset& data, const KernelSpec& kernel,
                    const PolicyHandle& policy, const LinearQ& q, const InitialStateSet& init,
                    const LearnerConfig& config, double fd_step = 1e-4, int max_rows = 1500,
                    double tol_g = 1e-4, double tol_c = 1e-6);

// Leader maximizes f1, follower minimizes f2:
//   f1(x1, x2) = 1/2 x1' P1 x1 + x1' P12 x2 + 1/2 x2' P2 x2 + q1'x1 + q2'x2
//   f2(x1, x2) = 1/2 x2' A x2 + x2' (B x1 + b0)
// with A positive definite, so the best response x2*(x1) = -A^{-1}(B x1 + b0)
// is unique and the Stackelberg value g(x1) = f1(x1, x2*(x1)) is quadratic.
struct QuadraticGame {
  Eigen::MatrixXd p1, p12, p2;
  Eigen::VectorXd q1, q2;
  Eigen::MatrixXd a, b;
  Eigen::VectorXd b0;

  int d1() const { return static_cast<int>(p1.rows()); }
  int d2() const { return static_cast<int>(a.rows()); }

  double f1(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;
  double f2(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;
  Eigen::VectorXd grad1_f1(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;
  Eigen::VectorXd grad2_f1(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;
  Eigen::VectorXd grad2_f2(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;

  Eigen::MatrixXd response_matrix() const;  // R = -A^{-1} B
  Eigen::VectorXd response(const Eigen::VectorXd& x1) const;

  // Total derivative of f1 given the follower's implicit response,
  // evaluated at the current joint point.
  Eigen::VectorXd total_leader_grad(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;

  // D^2 g, constant for quadratics: P1 + P12 R + R'P12' + R'P2 R.
  Eigen::MatrixXd leader_curvature() const;

  // Unique critical point of g plus the follower response; throws
  // NumericError when the curvature is singular.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> equilibrium() const;
};

// Well-conditioned game with leader curvature -I and equilibrium away from
// the origin; the noisy two-timescale dynamics contract to it.
QuadraticGame make_convergent_game(std::uint64_t seed, int d1, int d2);

// Strict-saddle construction: zero gradients at the origin with leader
// curvature diag(+1, -1, ...), so noise pushes iterates out along the
// ascent direction.
QuadraticGame make_saddle_game(std::uint64_t seed, int d2);

struct GameTrajectory {
  std::vector<Eigen::VectorXd> x1;  // thinned by store_every, final always kept
  std::vector<Eigen::VectorXd> x2;
  Eigen::VectorXd x1_final, x2_final;
  int steps = 0;
};

// Exact Stackelberg dynamics with additive Gaussian noise of the given
// standard deviation on both players' gradients. Throws DivergenceError when
// the joint iterate norm exceeds 1e6.
GameTrajectory run_quadratic_game(const QuadraticGame& game, const LearnerConfig& config,
                                  double noise_std, const Eigen::VectorXd& x1_0,
                                  const Eigen::VectorXd& x2_0, int store_every = 1);

// Analytic certificate for quadratic games at the given joint point.
DSEReport dse_check_game(const QuadraticGame& game, const Eigen::VectorXd& x1,
                         const Eigen::VectorXd& x2, double tol_g = 1e-4, double tol_c = 1e-6);

}  // namespace stackrl
