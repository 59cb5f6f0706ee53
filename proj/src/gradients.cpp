#include "stackrl/gradients.hpp"

#include <Eigen/Cholesky>

#include "stackrl/detail/pairwise.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

namespace {

void require_pairs(const OfflineDataset& data, const std::vector<int>* rows) {
  const int n = rows ? static_cast<int>(rows->size()) : data.size();
  if (n < 2) throw InputError("pairwise gradient needs at least 2 transitions");
}

double pair_count(const detail::PairwiseParts& w) {
  const double n = static_cast<double>(w.delta.size());
  return n * (n - 1.0);
}

}  // namespace

Eigen::VectorXd grad_pi_J(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                          const InitialStateSet& init, const ActionNoise* z) {
  return detail::build_init(map, policy, init, z).cross_j * q.theta;
}

Eigen::VectorXd grad_q_J(const FeatureMap& map, const PolicyHandle& policy,
                         const InitialStateSet& init, const ActionNoise* z) {
  return detail::build_init(map, policy, init, z).phibar0;
}

Eigen::VectorXd grad_q_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                         const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                         double lambda, const InitialStateSet& init, const ActionNoise* z,
                         const std::vector<int>* rows) {
  require_pairs(data, rows);
  const auto w =
      detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, false, false);
  const Eigen::VectorXd kd = detail::offdiag_apply(w.kmat, w.delta);
  return grad_q_J(map, policy, init, z)
         + (2.0 * lambda / pair_count(w)) * (w.u.transpose() * kd);
}

Eigen::MatrixXd hess_q_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                         const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                         double lambda, const ActionNoise* z, const std::vector<int>* rows) {
  const auto w =
      detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, false, false);
  const double n = static_cast<double>(w.delta.size());
  Eigen::MatrixXd h = (2.0 * lambda / (n * n)) * (w.u.transpose() * w.kmat * w.u);
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd grad_pi_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                          const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                          double lambda, const InitialStateSet& init, const ActionNoise* z,
                          const std::vector<int>* rows) {
  require_pairs(data, rows);
  const auto w =
      detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, true, false);
  const Eigen::VectorXd kd = detail::offdiag_apply(w.kmat, w.delta);
  return grad_pi_J(map, q, policy, init, z)
         + (2.0 * lambda / pair_count(w)) * (w.ddelta_dw.transpose() * kd);
}

Eigen::MatrixXd cross_grad(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                           const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                           double lambda, const InitialStateSet& init, const ActionNoise* z,
                           const std::vector<int>* rows) {
  require_pairs(data, rows);
  const auto w =
      detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, true, true);
  const Eigen::VectorXd kd = detail::offdiag_apply(w.kmat, w.delta);
  const Eigen::MatrixXd ku = detail::offdiag_apply(w.kmat, w.u);

  Eigen::MatrixXd cross = detail::build_init(map, policy, init, z).cross_j;
  const double scale = 2.0 * lambda / pair_count(w);
  for (int i = 0; i < w.delta.size(); ++i) {
    if (w.ddelta_jac[i].size() > 0) cross.noalias() += scale * kd[i] * w.ddelta_jac[i];
  }
  cross.noalias() += scale * (w.ddelta_dw.transpose() * ku);
  return cross;
}

double default_beta(const Eigen::MatrixXd& hess) {
  const double p = static_cast<double>(hess.rows());
  return 1e-3 * hess.trace() / p + 1e-8;
}

Eigen::VectorXd regularized_solve(const Eigen::MatrixXd& hess, double beta,
                                  const Eigen::VectorXd& v, double solve_tol) {
  if (beta < 0.0) throw InputError("beta must be nonnegative");
  if (!hess.allFinite() || !v.allFinite())
    throw NumericError("regularized_solve: non-finite input");
  Eigen::MatrixXd a = hess;
  a.diagonal().array() += beta;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw SingularSystemError(
        "regularized Hessian is not positive definite; increase beta");
  const Eigen::VectorXd x = llt.solve(v);
  if ((a * x - v).norm() > solve_tol * std::max(v.norm(), 1e-300))
    throw SingularSystemError(
        "regularized solve residual exceeds tolerance; increase beta");
  return x;
}

Eigen::VectorXd total_derivative(const Eigen::VectorXd& d_pi_j,
                                 const Eigen::MatrixXd& cross_q_pi_l,
                                 const Eigen::MatrixXd& hess_q_l, const Eigen::VectorXd& d_q_j,
                                 const SolverConfig& solver) {
  return d_pi_j - cross_q_pi_l * regularized_solve(hess_q_l, solver.beta, d_q_j,
                                                   solver.solve_tol);
}

GradientBundle compute_bundle(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                              const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                              double lambda, const InitialStateSet& init, const ActionNoise* z,
                              const std::vector<int>* rows, const SolverConfig* solver) {
  require_pairs(data, rows);
  const auto w =
      detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, true, true);
  const auto ip = detail::build_init(map, policy, init, z);
  const double pairs = pair_count(w);
  const double n = static_cast<double>(w.delta.size());
  const Eigen::VectorXd kd = detail::offdiag_apply(w.kmat, w.delta);
  const Eigen::MatrixXd ku = detail::offdiag_apply(w.kmat, w.u);
  const double scale = 2.0 * lambda / pairs;

  GradientBundle out;
  out.d_q_j = ip.phibar0;
  out.d_pi_j = ip.cross_j * q.theta;
  out.d_q_l = out.d_q_j + scale * (w.u.transpose() * kd);
  out.d_pi_l = out.d_pi_j + scale * (w.ddelta_dw.transpose() * kd);

  Eigen::MatrixXd h = (2.0 * lambda / (n * n)) * (w.u.transpose() * w.kmat * w.u);
  out.hess_q_l = 0.5 * (h + h.transpose());

  out.cross_q_pi_l = ip.cross_j;
  for (int i = 0; i < w.delta.size(); ++i) {
    if (w.ddelta_jac[i].size() > 0)
      out.cross_q_pi_l.noalias() += scale * kd[i] * w.ddelta_jac[i];
  }
  out.cross_q_pi_l.noalias() += scale * (w.ddelta_dw.transpose() * ku);

  SolverConfig cfg;
  if (solver != nullptr) {
    cfg = *solver;
  } else {
    cfg.beta = default_beta(out.hess_q_l);
  }
  out.beta_used = cfg.beta;
  out.total_dj = total_derivative(out.d_pi_j, out.cross_q_pi_l, out.hess_q_l, out.d_q_j, cfg);
  return out;
}

}  // namespace stackrl
