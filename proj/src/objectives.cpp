#include "stackrl/objectives.hpp"

#include "stackrl/detail/pairwise.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

double bellman_residual(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                        const Transition& t, double gamma, const ActionNoise* z) {
  double next = 0.0;
  if (!t.done && gamma != 0.0) next = gamma * q_expected(q, map, policy, t.s_next, z);
  const double here = map.action_space().discrete()
                          ? q_value(q, map, t.s, static_cast<int>(t.a[0]))
                          : q_value(q, map, t.s, t.a);
  return t.r + next - here;
}

BellmanResidualBatch bellman_residuals(const FeatureMap& map, const LinearQ& q,
                                       const PolicyHandle& policy, const OfflineDataset& data,
                                       double gamma, const ActionNoise* z,
                                       const std::vector<int>* rows) {
  const auto parts = detail::build_pairwise(map, KernelSpec::linear(), q, policy, data, rows,
                                            gamma, z, false, false);
  return BellmanResidualBatch{parts.delta, parts.phi};
}

namespace {

detail::PairwiseParts loss_parts(const FeatureMap& map, const LinearQ& q,
                                 const PolicyHandle& policy, const OfflineDataset& data,
                                 const KernelSpec& kernel, double gamma, const ActionNoise* z,
                                 const std::vector<int>* rows) {
  const int n = rows ? static_cast<int>(rows->size()) : data.size();
  if (n < 2) throw InputError("kernel Bellman loss needs at least 2 transitions");
  return detail::build_pairwise(map, kernel, q, policy, data, rows, gamma, z, false, false);
}

}  // namespace

double kernel_bellman_loss(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                           const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                           const ActionNoise* z, const std::vector<int>* rows) {
  return detail::ustat_pairs(loss_parts(map, q, policy, data, kernel, gamma, z, rows));
}

double kernel_bellman_loss_v(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                             const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                             const ActionNoise* z, const std::vector<int>* rows) {
  return detail::vstat_pairs(loss_parts(map, q, policy, data, kernel, gamma, z, rows));
}

double leader_value(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                    const InitialStateSet& init, const ActionNoise* z) {
  if (init.size() < 1) throw InputError("initial-state set is empty");
  double total = 0.0;
  for (const auto& s0 : init.states) total += q_expected(q, map, policy, s0, z);
  return total / static_cast<double>(init.size());
}

double follower_loss(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                     const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                     double lambda, const InitialStateSet& init, const ActionNoise* z,
                     const std::vector<int>* rows) {
  if (lambda < 0.0) throw InputError("lambda must be nonnegative");
  return leader_value(map, q, policy, init, z)
         + lambda * kernel_bellman_loss(map, q, policy, data, kernel, gamma, z, rows);
}

double follower_loss_v(const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
                       const OfflineDataset& data, const KernelSpec& kernel, double gamma,
                       double lambda, const InitialStateSet& init, const ActionNoise* z,
                       const std::vector<int>* rows) {
  if (lambda < 0.0) throw InputError("lambda must be nonnegative");
  return leader_value(map, q, policy, init, z)
         + lambda * kernel_bellman_loss_v(map, q, policy, data, kernel, gamma, z, rows);
}

}  // namespace stackrl
