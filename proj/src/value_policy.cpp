#include "stackrl/value_policy.hpp"

#include <cmath>

#include "stackrl/errors.hpp"

namespace stackrl {

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) throw InputError("projection radius must be positive");
  if (!v.allFinite()) throw NumericError("project_ball: non-finite entries");
  const double norm = v.norm();
  if (norm <= radius) return v;
  Eigen::VectorXd out = v * (radius / norm);
  // roundoff can leave the norm a hair above the radius; rescale so the
  // projection is exactly idempotent
  for (int i = 0; i < 4 && out.norm() > radius; ++i) out *= radius / out.norm();
  return out;
}

Eigen::VectorXd GaussianLinearPolicy::params() const {
  Eigen::VectorXd w(param_dim());
  const int sd = state_dim();
  for (int i = 0; i < action_dim(); ++i) w.segment(i * sd, sd) = mean_matrix.row(i);
  w.tail(action_dim()) = log_std;
  return w;
}

void GaussianLinearPolicy::set_params(const Eigen::VectorXd& w) {
  if (w.size() != param_dim()) throw InputError("Gaussian policy parameter size mismatch");
  const int sd = state_dim();
  for (int i = 0; i < action_dim(); ++i) mean_matrix.row(i) = w.segment(i * sd, sd);
  log_std = w.tail(action_dim());
}

double GaussianLinearPolicy::log_density(const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& a) const {
  const Eigen::VectorXd mu = mean(s);
  const Eigen::VectorXd sig = sigma();
  double lp = -0.5 * action_dim() * std::log(2.0 * M_PI);
  for (int i = 0; i < action_dim(); ++i) {
    const double zi = (a[i] - mu[i]) / sig[i];
    lp += -log_std[i] - 0.5 * zi * zi;
  }
  return lp;
}

double q_value(const LinearQ& q, const FeatureMap& map, const Eigen::VectorXd& s, int a) {
  return map.features(s, a).dot(q.theta);
}

double q_value(const LinearQ& q, const FeatureMap& map, const Eigen::VectorXd& s,
               const Eigen::VectorXd& a) {
  return map.features(s, a).dot(q.theta);
}

Eigen::VectorXd policy_probs(const SoftmaxPolicy& policy, const FeatureMap& map,
                             const Eigen::VectorXd& s) {
  if (!map.action_space().discrete())
    throw UnsupportedError("policy_probs requires a discrete action space");
  const int na = map.action_space().cardinality;
  Eigen::VectorXd logits(na);
  for (int a = 0; a < na; ++a) logits[a] = map.features(s, a).dot(policy.omega);
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  return p / p.sum();
}

Eigen::VectorXd score(const SoftmaxPolicy& policy, const FeatureMap& map,
                      const Eigen::VectorXd& s, int a) {
  const Eigen::VectorXd probs = policy_probs(policy, map, s);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(map.dim());
  for (int b = 0; b < probs.size(); ++b) mean += probs[b] * map.features(s, b);
  return map.features(s, a) - mean;
}

namespace {

void require_noise(const ActionNoise* z, const GaussianLinearPolicy& policy) {
  if (z == nullptr || z->rows() < 1)
    throw InputError("Gaussian-policy expectation needs an ActionNoise sample set");
  if (z->cols() != policy.action_dim())
    throw InputError("ActionNoise column count must equal the action dimension");
}

}  // namespace

Eigen::VectorXd avg_features(const FeatureMap& map, const PolicyHandle& policy,
                             const Eigen::VectorXd& s, const ActionNoise* z) {
  if (const auto* soft = std::get_if<SoftmaxPolicy>(&policy)) {
    const Eigen::VectorXd probs = policy_probs(*soft, map, s);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(map.dim());
    for (int a = 0; a < probs.size(); ++a) out += probs[a] * map.features(s, a);
    return out;
  }
  const auto& gauss = std::get<GaussianLinearPolicy>(policy);
  require_noise(z, gauss);
  const Eigen::VectorXd mu = gauss.mean(s);
  const Eigen::VectorXd sig = gauss.sigma();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(map.dim());
  for (int j = 0; j < z->rows(); ++j) {
    const Eigen::VectorXd a = mu + sig.cwiseProduct(z->row(j).transpose());
    out += map.features(s, a);
  }
  return out / static_cast<double>(z->rows());
}

Eigen::MatrixXd qbar_omega_jacobian(const FeatureMap& map, const PolicyHandle& policy,
                                    const Eigen::VectorXd& s, const ActionNoise* z) {
  if (const auto* soft = std::get_if<SoftmaxPolicy>(&policy)) {
    const Eigen::VectorXd probs = policy_probs(*soft, map, s);
    const int p = map.dim();
    Eigen::MatrixXd phis(p, probs.size());
    for (int a = 0; a < probs.size(); ++a) phis.col(a) = map.features(s, a);
    const Eigen::VectorXd mean = phis * probs;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
    for (int a = 0; a < probs.size(); ++a) {
      const Eigen::VectorXd sc = phis.col(a) - mean;
      g.noalias() += probs[a] * sc * phis.col(a).transpose();
    }
    return g;
  }

  const auto& gauss = std::get<GaussianLinearPolicy>(policy);
  require_noise(z, gauss);
  const int ad = gauss.action_dim();
  const int sd = gauss.state_dim();
  const Eigen::VectorXd mu = gauss.mean(s);
  const Eigen::VectorXd sig = gauss.sigma();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(gauss.param_dim(), map.dim());
  for (int j = 0; j < z->rows(); ++j) {
    const Eigen::VectorXd zj = z->row(j).transpose();
    const Eigen::VectorXd a = mu + sig.cwiseProduct(zj);
    const Eigen::MatrixXd jac = map.action_jacobian(s, a);  // p x ad
    for (int i = 0; i < ad; ++i) {
      // mean-matrix rows: d a_i / d A_{ik} = s_k
      for (int k = 0; k < sd; ++k)
        g.row(i * sd + k).noalias() += s[k] * jac.col(i).transpose();
      // log-std rows: d a_i / d log sigma_i = sigma_i z_{j,i}
      g.row(ad * sd + i).noalias() += sig[i] * zj[i] * jac.col(i).transpose();
    }
  }
  return g / static_cast<double>(z->rows());
}

double q_expected(const LinearQ& q, const FeatureMap& map, const PolicyHandle& policy,
                  const Eigen::VectorXd& s, const ActionNoise* z) {
  return avg_features(map, policy, s, z).dot(q.theta);
}

int policy_param_dim(const PolicyHandle& policy, const FeatureMap& map) {
  if (std::holds_alternative<SoftmaxPolicy>(policy)) return map.dim();
  return std::get<GaussianLinearPolicy>(policy).param_dim();
}

Eigen::VectorXd policy_params(const PolicyHandle& policy) {
  if (const auto* soft = std::get_if<SoftmaxPolicy>(&policy)) return soft->omega;
  return std::get<GaussianLinearPolicy>(policy).params();
}

void set_policy_params(PolicyHandle& policy, const Eigen::VectorXd& w) {
  if (auto* soft = std::get_if<SoftmaxPolicy>(&policy)) {
    if (w.size() != soft->omega.size()) throw InputError("softmax parameter size mismatch");
    soft->omega = w;
    return;
  }
  std::get<GaussianLinearPolicy>(policy).set_params(w);
}

double policy_radius(const PolicyHandle& policy) {
  if (const auto* soft = std::get_if<SoftmaxPolicy>(&policy)) return soft->c_omega;
  return std::get<GaussianLinearPolicy>(policy).c_omega;
}

int sample_discrete_action(const SoftmaxPolicy& policy, const FeatureMap& map,
                           const Eigen::VectorXd& s, Rng& rng) {
  const Eigen::VectorXd probs = policy_probs(policy, map, s);
  double u = rng.uniform();
  for (int a = 0; a < probs.size(); ++a) {
    u -= probs[a];
    if (u < 0.0) return a;
  }
  return static_cast<int>(probs.size()) - 1;
}

Eigen::VectorXd sample_box_action(const GaussianLinearPolicy& policy, const ActionSpace& space,
                                  const Eigen::VectorXd& s, Rng& rng) {
  Eigen::VectorXd a = policy.mean(s);
  const Eigen::VectorXd sig = policy.sigma();
  for (int i = 0; i < a.size(); ++i) a[i] += sig[i] * rng.gaussian();
  return a.cwiseMax(space.lower).cwiseMin(space.upper);
}

}  // namespace stackrl
