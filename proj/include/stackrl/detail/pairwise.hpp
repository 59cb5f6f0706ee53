#pragma once

// Shared per-batch quantities behind the objective values, the gradient
// formulas, and the training loop. Everything here treats the linear-q
// structure explicitly:
//
//   Delta_i = r_i + u_i^T theta  with  u_i = gamma * phibar(s'_i) - phi_i,
//   d Delta_i / d omega = gq_i = gamma * G(s'_i) theta,
//
// where phibar and G are the policy-averaged features and their
// omega-Jacobian (zero for terminal rows).

#include <vector>
#include <Eigen/Core>

#include "stackrl/dataset_types.hpp"
#include "stackrl/kernel.hpp"
#include "stackrl/objectives.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl::detail {

struct PairwiseParts {
  Eigen::MatrixXd phi;        // b x p
  Eigen::VectorXd rewards;    // b
  Eigen::MatrixXd u;          // b x p
  Eigen::VectorXd delta;      // b
  Eigen::MatrixXd ddelta_dw;  // b x dim_omega (rows gq_i^T); empty unless requested
  std::vector<Eigen::MatrixXd> ddelta_jac;  // gamma * G(s'_i); empty unless requested
  Eigen::MatrixXd kmat;       // b x b Gram
};

PairwiseParts build_pairwise(const FeatureMap& map, const KernelSpec& kernel, const LinearQ& q,
                             const PolicyHandle& policy, const OfflineDataset& data,
                             const std::vector<int>* rows, double gamma, const ActionNoise* z,
                             bool need_omega, bool need_cross);

struct InitParts {
  Eigen::VectorXd phibar0;  // = grad_q_J
  Eigen::MatrixXd cross_j;  // dim_omega x p; grad_pi_J = cross_j * theta
};

InitParts build_init(const FeatureMap& map, const PolicyHandle& policy,
                     const InitialStateSet& init, const ActionNoise* z);

// (K w) with the diagonal term removed per row: sum_{j != i} K_ij w_j.
inline Eigen::VectorXd offdiag_apply(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  return k * w - k.diagonal().cwiseProduct(w);
}

inline Eigen::MatrixXd offdiag_apply(const Eigen::MatrixXd& k, const Eigen::MatrixXd& w) {
  return k * w - k.diagonal().asDiagonal() * w;
}

inline double ustat_pairs(const PairwiseParts& w) {
  const double n = static_cast<double>(w.delta.size());
  return w.delta.dot(offdiag_apply(w.kmat, w.delta)) / (n * (n - 1.0));
}

inline double vstat_pairs(const PairwiseParts& w) {
  const double n = static_cast<double>(w.delta.size());
  return w.delta.dot(w.kmat * w.delta) / (n * n);
}

}  // namespace stackrl::detail
