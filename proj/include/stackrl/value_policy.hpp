#pragma once

#include <variant>
#include <Eigen/Core>

#include "stackrl/feature_map.hpp"
#include "stackrl/rng.hpp"

namespace stackrl {

// Projection onto the L2 ball of the given radius.
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius);

// q(s, a) = <phi(s, a), theta>, ||theta|| <= c_theta.
struct LinearQ {
  Eigen::VectorXd theta;
  double c_theta = 1.0;
  double v_max = 1.0;

  static LinearQ zeros(const FeatureMap& map, double c_theta, double v_max) {
    return LinearQ{Eigen::VectorXd::Zero(map.dim()), c_theta, v_max};
  }
};

// pi(a|s) proportional to exp(<phi(s, a), omega>), discrete actions.
struct SoftmaxPolicy {
  Eigen::VectorXd omega;
  double c_omega = 100.0;

  static SoftmaxPolicy zeros(const FeatureMap& map, double c_omega = 100.0) {
    return SoftmaxPolicy{Eigen::VectorXd::Zero(map.dim()), c_omega};
  }
};

// Continuous-action policy: a = mean_matrix * s + exp(log_std) .* z with z
// standard normal. Mean is linear in the raw state. Sampled actions are
// clipped to the action box; expectations used in training leave them
// unclipped so gradients stay exact.
struct GaussianLinearPolicy {
  Eigen::MatrixXd mean_matrix;  // action_dim x state_dim
  Eigen::VectorXd log_std;      // action_dim
  double c_omega = 100.0;

  static GaussianLinearPolicy zeros(int action_dim, int state_dim, double c_omega = 100.0) {
    return GaussianLinearPolicy{Eigen::MatrixXd::Zero(action_dim, state_dim),
                                Eigen::VectorXd::Zero(action_dim), c_omega};
  }

  int action_dim() const { return static_cast<int>(log_std.size()); }
  int state_dim() const { return static_cast<int>(mean_matrix.cols()); }
  Eigen::VectorXd mean(const Eigen::VectorXd& s) const { return mean_matrix * s; }
  Eigen::VectorXd sigma() const { return log_std.array().exp().matrix(); }

  // Parameter vector [vec_rowmajor(mean_matrix); log_std].
  int param_dim() const { return action_dim() * state_dim() + action_dim(); }
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& w);

  double log_density(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const;
};

using PolicyHandle = std::variant<SoftmaxPolicy, GaussianLinearPolicy>;

double q_value(const LinearQ& q, const FeatureMap& map, const Eigen::VectorXd& s, int a);
double q_value(const LinearQ& q, const FeatureMap& map, const Eigen::VectorXd& s,
               const Eigen::VectorXd& a);

// Softmax probabilities over discrete actions, computed with max-subtraction.
Eigen::VectorXd policy_probs(const SoftmaxPolicy& policy, const FeatureMap& map,
                             const Eigen::VectorXd& s);

// grad_omega log pi(a|s) = phi(s, a) - sum_b pi(b|s) phi(s, b).
Eigen::VectorXd score(const SoftmaxPolicy& policy, const FeatureMap& map,
                      const Eigen::VectorXd& s, int a);

// Common-random-number action draws for Gaussian-policy expectations:
// row j holds the standard normal z_j shared across states.
using ActionNoise = Eigen::MatrixXd;

// phibar(s) = E_{a~pi(.|s)} phi(s, a); exact sum for softmax, fixed-sample
// average a_j = mean + sigma .* z_j (unclipped) for Gaussian policies.
Eigen::VectorXd avg_features(const FeatureMap& map, const PolicyHandle& policy,
                             const Eigen::VectorXd& s, const ActionNoise* z = nullptr);

// G(s) = d/d omega of E_{a~pi(.|s)}[q(s, a)] expressed as G(s) * theta:
// rows index policy parameters, columns index theta components.
// Softmax: sum_a pi(a) score(s,a) phi(s,a)^T (exact policy gradient).
// Gaussian: fixed-sample pathwise derivative through a_j(omega).
Eigen::MatrixXd qbar_omega_jacobian(const FeatureMap& map, const PolicyHandle& policy,
                                    const Eigen::VectorXd& s, const ActionNoise* z = nullptr);

// E_{a~pi(.|s)}[q(s, a)] = <phibar(s), theta>.
double q_expected(const LinearQ& q, const FeatureMap& map, const PolicyHandle& policy,
                  const Eigen::VectorXd& s, const ActionNoise* z = nullptr);

int policy_param_dim(const PolicyHandle& policy, const FeatureMap& map);
Eigen::VectorXd policy_params(const PolicyHandle& policy);
void set_policy_params(PolicyHandle& policy, const Eigen::VectorXd& w);
double policy_radius(const PolicyHandle& policy);

// Draw an action for environment interaction (clips Gaussian samples to the box).
int sample_discrete_action(const SoftmaxPolicy& policy, const FeatureMap& map,
                           const Eigen::VectorXd& s, Rng& rng);
Eigen::VectorXd sample_box_action(const GaussianLinearPolicy& policy, const ActionSpace& space,
                                  const Eigen::VectorXd& s, Rng& rng);

}  // namespace stackrl
