#include "stackrl/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stackrl/errors.hpp"
#include "stackrl/rng.hpp"

namespace stackrl {

void LearnerConfig::validate() const {
  if (lambda < 0.0) throw InputError("lambda must be nonnegative");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw InputError("step-size constants must be positive");
  if (!(a1 > 0.5 && a1 <= 1.0) || !(a2 > 0.5 && a2 <= 1.0))
    throw InputError("step-size exponents must lie in (0.5, 1]");
  if (!(a1 > a2)) throw InputError("two-timescale order requires a1 > a2");
  if (iterations < 1) throw InputError("iterations must be positive");
  if (minibatch < 2) throw InputError("minibatch must be at least 2");
  if (eval_every < 1) throw InputError("eval_every must be positive");
  if (m_act < 1) throw InputError("m_act must be positive");
  if (beta_auto == false && beta_fixed < 0.0) throw InputError("beta must be nonnegative");
}

std::pair<double, double> step_sizes(int k, const LearnerConfig& config) {
  if (k < 0) throw InputError("step index must be nonnegative");
  const double base = 1.0 + static_cast<double>(k);
  return {config.c1 / std::pow(base, config.a1), config.c2 / std::pow(base, config.a2)};
}

namespace {

std::vector<int> sample_without_replacement(int n, int b, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < b; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> deterministic_subsample(int n, int cap, std::uint64_t seed) {
  if (n <= cap) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  Rng rng(derive_seed(seed, 0xe7a1));
  auto idx = sample_without_replacement(n, cap, rng);
  return idx;
}

ActionNoise draw_noise(const PolicyHandle& policy, int m_act, Rng& rng) {
  const auto& gauss = std::get<GaussianLinearPolicy>(policy);
  ActionNoise z(m_act, gauss.action_dim());
  for (int r = 0; r < m_act; ++r)
    for (int c = 0; c < gauss.action_dim(); ++c) z(r, c) = rng.gaussian();
  return z;
}

}  // namespace

TrainResult train(const FeatureMap& map, const OfflineDataset& data,
                  const InitialStateSet& init, const KernelSpec& kernel,
                  const PolicyHandle& policy0, const LinearQ& q0, const LearnerConfig& config) {
  config.validate();
  const int n = data.size();
  if (n < config.minibatch)
    throw InputError("dataset smaller than the minibatch size");
  const bool gaussian = std::holds_alternative<GaussianLinearPolicy>(policy0);

  TrainResult result{policy0, q0, {}};
  Eigen::VectorXd omega = policy_params(result.policy);
  const double c_omega = policy_radius(result.policy);
  const double c_theta = q0.c_theta;

  const auto eval_rows =
      deterministic_subsample(n, std::max(config.eval_subsample, config.minibatch), config.seed);

  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= config.iterations; ++k) {
    Rng it_rng(derive_seed(config.seed, static_cast<std::uint64_t>(k)));
    const auto rows = sample_without_replacement(n, config.minibatch, it_rng);
    ActionNoise z;
    const ActionNoise* zp = nullptr;
    if (gaussian) {
      z = draw_noise(result.policy, config.m_act, it_rng);
      zp = &z;
    }

    GradientBundle bundle;
    try {
      SolverConfig solver{config.beta_fixed, config.solve_tol};
      bundle = compute_bundle(map, result.q, result.policy, data, kernel, data.gamma,
                              config.lambda, init, zp, &rows,
                              config.beta_auto ? nullptr : &solver);
    } catch (const SingularSystemError& e) {
      throw SingularSystemError("step " + std::to_string(k) + ": " + e.what());
    }

    const auto [gamma1, gamma2] = step_sizes(k, config);
    omega = project_ball(omega + gamma1 * bundle.total_dj, c_omega);
    set_policy_params(result.policy, omega);
    result.q.theta = project_ball(result.q.theta - gamma2 * bundle.d_q_l, c_theta);

    if (!omega.allFinite() || !result.q.theta.allFinite())
      throw NumericError("non-finite parameters at step " + std::to_string(k));

    if (k % config.eval_every == 0) {
      ActionNoise ze;
      const ActionNoise* zep = nullptr;
      if (gaussian) {
        Rng eval_rng(derive_seed(config.seed, 0x5eed));
        ze = draw_noise(result.policy, config.m_act, eval_rng);
        zep = &ze;
      }
      const auto eb = compute_bundle(map, result.q, result.policy, data, kernel, data.gamma,
                                     config.lambda, init, zep, &eval_rows, nullptr);
      TraceRow row;
      row.k = k;
      row.leader_value = leader_value(map, result.q, result.policy, init, zep);
      row.follower_loss = follower_loss(map, result.q, result.policy, data, kernel, data.gamma,
                                        config.lambda, init, zep, &eval_rows);
      row.total_dj_norm = eb.total_dj.norm();
      row.grad_q_l_norm = eb.d_q_l.norm();
      row.gamma1 = gamma1;
      row.gamma2 = gamma2;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
      result.trace.rows.push_back(row);
    }
  }
  return result;
}

DSEReport dse_check(const FeatureMap& map, const OfflineDataset& data, const KernelSpec& kernel,
                    const PolicyHandle& policy, const LinearQ& q, const InitialStateSet& init,
                    const LearnerConfig& config, double fd_step, int max_rows, double tol_g,
                    double tol_c) {
  const bool gaussian = std::holds_alternative<GaussianLinearPolicy>(policy);
  ActionNoise z;
  const ActionNoise* zp = nullptr;
  if (gaussian) {
    Rng rng(derive_seed(config.seed, 0xd5e));
    z = draw_noise(policy, config.m_act, rng);
    zp = &z;
  }
  const auto rows = deterministic_subsample(data.size(), max_rows, config.seed);

  const auto dj_at = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& theta) {
    PolicyHandle pol = policy;
    set_policy_params(pol, w);
    LinearQ qq = q;
    qq.theta = theta;
    const auto bundle = compute_bundle(map, qq, pol, data, kernel, data.gamma, config.lambda,
                                       init, zp, &rows, nullptr);
    return bundle;
  };

  const Eigen::VectorXd w0 = policy_params(policy);
  const int dw = static_cast<int>(w0.size());
  const int p = map.dim();

  const auto base = dj_at(w0, q.theta);
  DSEReport report;
  report.tol_g = tol_g;
  report.tol_c = tol_c;
  report.grad_norm_leader = base.total_dj.norm();
  report.grad_norm_follower = base.d_q_l.norm();

  // D(DJ) in omega by central differences.
  Eigen::MatrixXd d1_dj(dw, dw);
  for (int i = 0; i < dw; ++i) {
    Eigen::VectorXd wp = w0, wm = w0;
    wp[i] += fd_step;
    wm[i] -= fd_step;
    d1_dj.col(i) = (dj_at(wp, q.theta).total_dj - dj_at(wm, q.theta).total_dj) / (2.0 * fd_step);
  }
  if (!d1_dj.allFinite()) throw NumericError("dse_check: non-finite finite-difference estimate");
  const Eigen::MatrixXd leader_curv = 0.5 * (d1_dj + d1_dj.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> les(leader_curv);
  report.leader_curvature_max_eig = les.eigenvalues().maxCoeff();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hes(base.hess_q_l);
  report.follower_hessian_min_eig = hes.eigenvalues().minCoeff();

  // D2(DJ) in theta for the game Jacobian's upper-right block.
  Eigen::MatrixXd d2_dj(dw, p);
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd tp = q.theta, tm = q.theta;
    tp[i] += fd_step;
    tm[i] -= fd_step;
    d2_dj.col(i) = (dj_at(w0, tp).total_dj - dj_at(w0, tm).total_dj) / (2.0 * fd_step);
  }
  if (!d2_dj.allFinite()) throw NumericError("dse_check: non-finite finite-difference estimate");

  Eigen::MatrixXd js(dw + p, dw + p);
  js.topLeftCorner(dw, dw) = d1_dj;
  js.topRightCorner(dw, p) = d2_dj;
  js.bottomLeftCorner(p, dw) = base.cross_q_pi_l.transpose();
  js.bottomRightCorner(p, p) = base.hess_q_l;
  Eigen::EigenSolver<Eigen::MatrixXd> jes(js, false);
  report.j_s_eigenvalues.reserve(dw + p);
  for (int i = 0; i < dw + p; ++i) report.j_s_eigenvalues.push_back(jes.eigenvalues()[i]);

  report.is_dse = report.grad_norm_leader <= tol_g && report.grad_norm_follower <= tol_g
                  && report.leader_curvature_max_eig <= -tol_c
                  && report.follower_hessian_min_eig >= tol_c;
  return report;
}

double QuadraticGame::f1(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const {
  return 0.5 * x1.dot(p1 * x1) + x1.dot(p12 * x2) + 0.5 * x2.dot(p2 * x2) + q1.dot(x1)
         + q2.dot(x2);
}

double QuadraticGame::f2(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const {
  return 0.5 * x2.dot(a * x2) + x2.dot(b * x1 + b0);
}

Eigen::VectorXd QuadraticGame::grad1_f1(const Eigen::VectorXd& x1,
                                        const Eigen::VectorXd& x2) const {
  return p1 * x1 + p12 * x2 + q1;
}

Eigen::VectorXd QuadraticGame::grad2_f1(const Eigen::VectorXd& x1,
                                        const Eigen::VectorXd& x2) const {
  return p12.transpose() * x1 + p2 * x2 + q2;
}

Eigen::VectorXd QuadraticGame::grad2_f2(const Eigen::VectorXd& x1,
                                        const Eigen::VectorXd& x2) const {
  return a * x2 + b * x1 + b0;
}

Eigen::MatrixXd QuadraticGame::response_matrix() const {
  return -a.llt().solve(b);
}

Eigen::VectorXd QuadraticGame::response(const Eigen::VectorXd& x1) const {
  return -a.llt().solve(b * x1 + b0);
}

Eigen::VectorXd QuadraticGame::total_leader_grad(const Eigen::VectorXd& x1,
                                                 const Eigen::VectorXd& x2) const {
  return grad1_f1(x1, x2) - b.transpose() * a.llt().solve(grad2_f1(x1, x2));
}

Eigen::MatrixXd QuadraticGame::leader_curvature() const {
  const Eigen::MatrixXd r = response_matrix();
  return p1 + p12 * r + r.transpose() * p12.transpose() + r.transpose() * p2 * r;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> QuadraticGame::equilibrium() const {
  const Eigen::MatrixXd r = response_matrix();
  const Eigen::VectorXd r0 = -a.llt().solve(b0);
  const Eigen::MatrixXd mg = leader_curvature();
  const Eigen::VectorXd rhs = -((p12 + r.transpose() * p2) * r0 + q1 + r.transpose() * q2);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(mg);
  if (!lu.isInvertible()) throw NumericError("quadratic game has singular leader curvature");
  const Eigen::VectorXd x1 = lu.solve(rhs);
  return {x1, r * x1 + r0};
}

QuadraticGame make_convergent_game(std::uint64_t seed, int d1, int d2) {
  Rng rng(derive_seed(seed, 0x9a3e));
  QuadraticGame g;
  Eigen::MatrixXd l = 0.3 * rng.gaussian_matrix(d2, d2);
  g.a = l * l.transpose() + Eigen::MatrixXd::Identity(d2, d2);
  g.b = 0.5 * rng.gaussian_matrix(d2, d1);
  g.b0 = 0.3 * rng.gaussian_vector(d2);
  g.p12 = 0.4 * rng.gaussian_matrix(d1, d2);
  Eigen::MatrixXd p2r = 0.3 * rng.gaussian_matrix(d2, d2);
  g.p2 = 0.5 * (p2r + p2r.transpose());
  g.q1 = 0.3 * rng.gaussian_vector(d1);
  g.q2 = 0.3 * rng.gaussian_vector(d2);
  // Force the Stackelberg curvature to -I.
  const Eigen::MatrixXd r = g.response_matrix();
  g.p1 = -Eigen::MatrixXd::Identity(d1, d1) - g.p12 * r - r.transpose() * g.p12.transpose()
         - r.transpose() * g.p2 * r;
  return g;
}

QuadraticGame make_saddle_game(std::uint64_t seed, int d2) {
  Rng rng(derive_seed(seed, 0x5add));
  const int d1 = 2;
  QuadraticGame g;
  Eigen::MatrixXd l = 0.3 * rng.gaussian_matrix(d2, d2);
  g.a = l * l.transpose() + Eigen::MatrixXd::Identity(d2, d2);
  g.b = 0.5 * rng.gaussian_matrix(d2, d1);
  g.b0 = Eigen::VectorXd::Zero(d2);
  g.p12 = 0.4 * rng.gaussian_matrix(d1, d2);
  Eigen::MatrixXd p2r = 0.3 * rng.gaussian_matrix(d2, d2);
  g.p2 = 0.5 * (p2r + p2r.transpose());
  g.q1 = Eigen::VectorXd::Zero(d1);
  g.q2 = Eigen::VectorXd::Zero(d2);
  Eigen::MatrixXd target = Eigen::MatrixXd::Identity(d1, d1);
  target(1, 1) = -1.0;  // ascent direction 0 escapes, direction 1 contracts
  const Eigen::MatrixXd r = g.response_matrix();
  g.p1 = target - g.p12 * r - r.transpose() * g.p12.transpose() - r.transpose() * g.p2 * r;
  return g;
}

GameTrajectory run_quadratic_game(const QuadraticGame& game, const LearnerConfig& config,
                                  double noise_std, const Eigen::VectorXd& x1_0,
                                  const Eigen::VectorXd& x2_0, int store_every) {
  config.validate();
  if (x1_0.size() != game.d1() || x2_0.size() != game.d2())
    throw InputError("run_quadratic_game: start point dimension mismatch");
  Rng rng(derive_seed(config.seed, 0x4a6e));
  GameTrajectory traj;
  Eigen::VectorXd x1 = x1_0, x2 = x2_0;
  const Eigen::LLT<Eigen::MatrixXd> allt(game.a);
  for (int k = 1; k <= config.iterations; ++k) {
    const auto [gamma1, gamma2] = step_sizes(k, config);
    Eigen::VectorXd dj = game.grad1_f1(x1, x2)
                         - game.b.transpose() * allt.solve(game.grad2_f1(x1, x2));
    Eigen::VectorXd df = game.grad2_f2(x1, x2);
    if (noise_std > 0.0) {
      for (int i = 0; i < dj.size(); ++i) dj[i] += noise_std * rng.gaussian();
      for (int i = 0; i < df.size(); ++i) df[i] += noise_std * rng.gaussian();
    }
    x1 += gamma1 * dj;
    x2 -= gamma2 * df;
    if (std::sqrt(x1.squaredNorm() + x2.squaredNorm()) > 1e6)
      throw DivergenceError("quadratic game diverged at step " + std::to_string(k)
                            + " with |x1| = " + std::to_string(x1.norm()));
    if (k % store_every == 0) {
      traj.x1.push_back(x1);
      traj.x2.push_back(x2);
    }
    traj.steps = k;
  }
  traj.x1_final = x1;
  traj.x2_final = x2;
  if (traj.x1.empty() || (config.iterations % store_every) != 0) {
    traj.x1.push_back(x1);
    traj.x2.push_back(x2);
  }
  return traj;
}

DSEReport dse_check_game(const QuadraticGame& game, const Eigen::VectorXd& x1,
                         const Eigen::VectorXd& x2, double tol_g, double tol_c) {
  DSEReport report;
  report.tol_g = tol_g;
  report.tol_c = tol_c;
  report.grad_norm_leader = game.total_leader_grad(x1, x2).norm();
  report.grad_norm_follower = game.grad2_f2(x1, x2).norm();
  const Eigen::MatrixXd curv = game.leader_curvature();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> les(curv);
  report.leader_curvature_max_eig = les.eigenvalues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fes(game.a);
  report.follower_hessian_min_eig = fes.eigenvalues().minCoeff();

  const int d1 = game.d1(), d2 = game.d2();
  const Eigen::MatrixXd ainvb = game.a.llt().solve(game.b);
  Eigen::MatrixXd js(d1 + d2, d1 + d2);
  js.topLeftCorner(d1, d1) = game.p1 - ainvb.transpose() * game.p12.transpose();
  js.topRightCorner(d1, d2) = game.p12 - ainvb.transpose() * game.p2;
  js.bottomLeftCorner(d2, d1) = game.b;
  js.bottomRightCorner(d2, d2) = game.a;
  Eigen::EigenSolver<Eigen::MatrixXd> jes(js, false);
  for (int i = 0; i < d1 + d2; ++i) report.j_s_eigenvalues.push_back(jes.eigenvalues()[i]);

  report.is_dse = report.grad_norm_leader <= tol_g && report.grad_norm_follower <= tol_g
                  && report.leader_curvature_max_eig <= -tol_c
                  && report.follower_hessian_min_eig >= tol_c;
  return report;
}

}  // namespace stackrl
