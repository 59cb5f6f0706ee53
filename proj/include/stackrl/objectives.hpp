#pragma once

#include <vector>
#include <Eigen/Core>

#include "stackrl/dataset_types.hpp"
#include "stackrl/kernel.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl {

// Residuals Delta_i = r_i + gamma * qbar(s'_i) - q(s_i, a_i) together with
// the features of the points they were evaluated at.
struct BellmanResidualBatch {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd features;  // row i = phi(s_i, a_i)
};

// Single-transition Bellman residual; terminal transitions drop the
// next-state term.
double bellman_residual(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                        const Transition& t, double gamma, const ActionNoise* z = nullptr);

BellmanResidualBatch bellman_residuals(const FeatureMap& map, const LinearQ& q,
                                       const PolicyHandle& policy, const OfflineDataset& data,
                                       double gamma, const ActionNoise* z = nullptr,
                                       const std::vector<int>* rows = nullptr);

// U-statistic (off-diagonal) estimate of E[Delta K Delta~] over independent
// transition pairs: sum_{i != j} Delta_i K_ij Delta_j / (n (n-1)).
double kernel_bellman_loss(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                           const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                           const ActionNoise* z = nullptr,
                           const std::vector<int>* rows = nullptr);

// V-statistic variant (diagonal included, denominator n^2); nonnegative for
// positive semidefinite kernels. Used by the Hessian and its oracles.
double kernel_bellman_loss_v(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                             const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                             const ActionNoise* z = nullptr,
                             const std::vector<int>* rows = nullptr);

// J(pi, q) = average over the initial-state set of E_{a~pi}[q(s0, a)].
double leader_value(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                    const InitialStateSet& init, const ActionNoise* z = nullptr);

// L(pi, q) = J(pi, q) + lambda * kernel_bellman_loss.
double follower_loss(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                     const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                     double lambda, const InitialStateSet& init, const ActionNoise* z = nullptr,
                     const std::vector<int>* rows = nullptr);

// Same with the V-statistic loss term.
double follower_loss_v(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                       const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                       double lambda, const InitialStateSet& init, const ActionNoise* z = nullptr,
                       const std::vector<int>* rows = nullptr);

}  // namespace stackrl
