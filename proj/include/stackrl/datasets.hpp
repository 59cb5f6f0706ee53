#pragma once

#include <cstdint>

#include "stackrl/dataset_types.hpp"
#include "stackrl/environments.hpp"
#include "stackrl/feature_map.hpp"
#include "stackrl/value_policy.hpp"

namespace stackrl {

// Behavior policy for discrete environments: linear fitted-Q iteration on
// uniformly explored transitions gives a sub-optimal q-hat, and the behavior
// is its softmax with temperature alpha: pi_b(a|s) ~ exp(q_hat(s, a)/alpha).
// Smaller alpha concentrates the behavior and shrinks coverage.
SoftmaxPolicy behavior_softmax(const EnvAny& env, const FeatureMap& map, double alpha,
                               int fqi_rounds, std::uint64_t seed);

// Behavior for the quadratic-reward environment: a = W s + sigma0 * z.
GaussianLinearPolicy behavior_gaussian(const QuadraticRewardEnv& env, double sigma0);

// Rolls episodes under the behavior policy until exactly n transitions are
// collected (the last episode is truncated), then draws m_init fresh
// initial states. Deterministic given the seed.
OfflineDataset generate(const EnvAny& env, const PolicyHandle& behavior, const FeatureMap& map,
                        int n, std::uint64_t seed, int m_init = 64);

struct RcnReport {
  double rcn = 0.0;    // max generalized eigenvalue of (Sigma_pi, Sigma_mu + 1e-8 I)
  double kappa = 0.0;  // trace(Sigma_mu)
};

// Injected-moment form used by both the diagnostic and its tests.
RcnReport rcn_from_moments(const Eigen::MatrixXd& sigma_pi, const Eigen::MatrixXd& sigma_mu);

// Sigma_pi from discounted-visitation-weighted on-policy rollouts (one
// geometric time draw per rollout), Sigma_mu from the data.
RcnReport relative_condition_number(const OfflineDataset& data, const PolicyHandle& target,
                                    const EnvAny& env, const FeatureMap& map, int rollouts,
                                    std::uint64_t seed);

// coverage label used by the CLI: poor / medium / well by temperature.
std::string coverage_label(double alpha);

}  // namespace stackrl
