#pragma once

#include <vector>
#include <Eigen/Core>

#include "stackrl/dataset_types.hpp"
#include "stackrl/kernel.hpp"
#include "stackrl/objectives.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl {

struct SolverConfig {
  double beta = 0.0;
  double solve_tol = 1e-8;
};

// All first- and second-order pieces of one leader-follower gradient step.
// cross_q_pi_l rows index policy parameters, columns index theta components.
struct GradientBundle {
  Eigen::VectorXd d_pi_j;
  Eigen::VectorXd d_q_j;
  Eigen::VectorXd d_q_l;
  Eigen::MatrixXd hess_q_l;
  Eigen::VectorXd d_pi_l;
  Eigen::MatrixXd cross_q_pi_l;
  Eigen::VectorXd total_dj;
  double beta_used = 0.0;
};

// Leader policy gradient at the initial states (policy gradient theorem for
// softmax, pathwise derivative through the fixed samples for Gaussian).
Eigen::VectorXd grad_pi_J(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                          const InitialStateSet& init, const ActionNoise* z = nullptr);

// d J / d theta = average policy-expected feature vector at the initial states.
Eigen::VectorXd grad_q_J(const FeatureMap& map, const PolicyHandle& policy,
                         const InitialStateSet& init, const ActionNoise* z = nullptr);

// d L / d theta: grad_q_J plus the U-statistic pair term
// 2 lambda / (n(n-1)) sum_{i != j} u_i K_ij Delta_j.
Eigen::VectorXd grad_q_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                         const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                         double lambda, const InitialStateSet& init,
                         const ActionNoise* z = nullptr,
                         const std::vector<int>* rows = nullptr);

// d^2 L / d theta^2 = 2 lambda / n^2 sum_{i,j} u_i K_ij u_j^T (V-statistic;
// positive semidefinite, all second derivatives of the linear q vanish).
Eigen::MatrixXd hess_q_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                         const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                         double lambda, const ActionNoise* z = nullptr,
                         const std::vector<int>* rows = nullptr);

// d L / d omega: grad_pi_J plus 2 lambda / (n(n-1)) sum_{i != j} gq_i K_ij Delta_j
// with gq_i the omega-derivative of Delta_i (carries the discount factor).
Eigen::VectorXd grad_pi_L(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                          const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                          double lambda, const InitialStateSet& init,
                          const ActionNoise* z = nullptr,
                          const std::vector<int>* rows = nullptr);

// Exact Jacobian of grad_pi_L with respect to theta (theta-free by linearity).
Eigen::MatrixXd cross_grad(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                           const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                           double lambda, const InitialStateSet& init,
                           const ActionNoise* z = nullptr,
                           const std::vector<int>* rows = nullptr);

// x = (H + beta I)^{-1} v via Cholesky; throws SingularSystemError when the
// regularized matrix is not positive definite or the residual exceeds
// solve_tol * ||v||.
Eigen::VectorXd regularized_solve(const Eigen::MatrixXd& hess, double beta,
                                  const Eigen::VectorXd& v, double solve_tol = 1e-8);

// Scale-aware Tikhonov default: 1e-3 * trace(H)/p + 1e-8.
double default_beta(const Eigen::MatrixXd& hess);

// DJ = d_pi_j - cross * (H + beta I)^{-1} d_q_j.
Eigen::VectorXd total_derivative(const Eigen::VectorXd& d_pi_j,
                                 const Eigen::MatrixXd& cross_q_pi_l,
                                 const Eigen::MatrixXd& hess_q_l, const Eigen::VectorXd& d_q_j,
                                 const SolverConfig& solver);

// Everything at once, sharing the pairwise sums. Pass solver = nullptr to use
// the default beta rule.
GradientBundle compute_bundle(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                              const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                              double lambda, const InitialStateSet& init,
                              const ActionNoise* z = nullptr,
                              const std::vector<int>* rows = nullptr,
                              const SolverConfig* solver = nullptr);

}  // namespace stackrl
