#include "stackrl/detail/pairwise.hpp"

#include <numeric>

#include "stackrl/errors.hpp"

namespace stackrl::detail {

namespace {

Eigen::VectorXd row_features(const FeatureMap& map, const Transition& t) {
  if (map.action_space().discrete())
    return map.features(t.s, static_cast<int>(t.a[0]));
  return map.features(t.s, t.a);
}

}  // namespace

PairwiseParts build_pairwise(const FeatureMap& map, const KernelSpec& kernel, const LinearQ& q,
                             const PolicyHandle& policy, const OfflineDataset& data,
                             const std::vector<int>* rows, double gamma, const ActionNoise* z,
                             bool need_omega, bool need_cross) {
  std::vector<int> all;
  if (rows == nullptr) {
    all.resize(data.transitions.size());
    std::iota(all.begin(), all.end(), 0);
    rows = &all;
  }
  const int b = static_cast<int>(rows->size());
  if (b < 1) throw InputError("empty batch");
  const int p = map.dim();
  const int dw = need_omega || need_cross ? policy_param_dim(policy, map) : 0;

  PairwiseParts parts;
  parts.phi.resize(b, p);
  parts.rewards.resize(b);
  parts.u.resize(b, p);
  if (need_omega || need_cross) parts.ddelta_dw.resize(b, dw);
  if (need_cross) parts.ddelta_jac.resize(b);

  for (int i = 0; i < b; ++i) {
    const Transition& t = data.transitions[(*rows)[i]];
    parts.phi.row(i) = row_features(map, t);
    parts.rewards[i] = t.r;
    if (t.done || gamma == 0.0) {
      parts.u.row(i) = -parts.phi.row(i);
      if (need_omega || need_cross) parts.ddelta_dw.row(i).setZero();
      if (need_cross) parts.ddelta_jac[i] = Eigen::MatrixXd::Zero(dw, p);
    } else {
      parts.u.row(i) = gamma * avg_features(map, policy, t.s_next, z).transpose()
                       - parts.phi.row(i);
      if (need_omega || need_cross) {
        Eigen::MatrixXd gq = gamma * qbar_omega_jacobian(map, policy, t.s_next, z);
        parts.ddelta_dw.row(i) = (gq * q.theta).transpose();
        if (need_cross) parts.ddelta_jac[i] = std::move(gq);
      }
    }
  }
  parts.delta = parts.rewards + parts.u * q.theta;
  parts.kmat = gram(kernel, parts.phi);
  return parts;
}

InitParts build_init(const FeatureMap& map, const PolicyHandle& policy,
                     const InitialStateSet& init, const ActionNoise* z) {
  if (init.size() < 1) throw InputError("initial-state set is empty");
  const int p = map.dim();
  const int dw = policy_param_dim(policy, map);
  InitParts parts;
  parts.phibar0 = Eigen::VectorXd::Zero(p);
  parts.cross_j = Eigen::MatrixXd::Zero(dw, p);
  for (const auto& s0 : init.states) {
    parts.phibar0 += avg_features(map, policy, s0, z);
    parts.cross_j += qbar_omega_jacobian(map, policy, s0, z);
  }
  const double m = static_cast<double>(init.size());
  parts.phibar0 /= m;
  parts.cross_j /= m;
  return parts;
}

}  // namespace stackrl::detail
