#pragma once

// Fully enumerable 3-state / 2-action MDP used as an independent oracle:
// exact q^pi by linear solve, exact population kernel-Bellman expectations
// by enumeration over the finite support.

#include <Eigen/Dense>
#include <vector>

#include "stackrl/dataset_types.hpp"
#include "stackrl/feature_map.hpp"
#include "stackrl/kernel.hpp"
#include "stackrl/rng.hpp"
#include "stackrl/value_policy.hpp"

namespace testsupport {

using namespace stackrl;

struct TabularMdp {
  static constexpr int kStates = 3;
  static constexpr int kActions = 2;

  // trans[s][a] is a distribution over next states; rewards are
  // deterministic per (s, a); mu is the data distribution over (s, a).
  double trans[kStates][kActions][kStates];
  double reward[kStates][kActions];
  double mu[kStates][kActions];
  double gamma = 0.8;

  static TabularMdp make(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x7ab));
    TabularMdp mdp;
    for (int s = 0; s < kStates; ++s) {
      for (int a = 0; a < kActions; ++a) {
        double total = 0.0;
        for (int t = 0; t < kStates; ++t) {
          mdp.trans[s][a][t] = 0.1 + rng.uniform();
          total += mdp.trans[s][a][t];
        }
        for (int t = 0; t < kStates; ++t) mdp.trans[s][a][t] /= total;
        mdp.reward[s][a] = rng.uniform(-1.0, 1.0);
      }
    }
    double total = 0.0;
    for (int s = 0; s < kStates; ++s)
      for (int a = 0; a < kActions; ++a) {
        mdp.mu[s][a] = 0.2 + rng.uniform();
        total += mdp.mu[s][a];
      }
    for (int s = 0; s < kStates; ++s)
      for (int a = 0; a < kActions; ++a) mdp.mu[s][a] /= total;
    return mdp;
  }

  static Eigen::VectorXd state_vec(int s) {
    return Eigen::VectorXd::Constant(1, static_cast<double>(s));
  }

  static FeatureMap feature_map() {
    return FeatureMap::polynomial(2, 1, ActionSpace::make_discrete(kActions),
                                  Eigen::VectorXd::Constant(1, -0.5),
                                  Eigen::VectorXd::Constant(1, 2.5));
  }

  static int pair_index(int s, int a) { return s * kActions + a; }

  // Exact q^pi: solve (I - gamma P_pi) q = r over the 6 state-action pairs.
  Eigen::VectorXd exact_q(const SoftmaxPolicy& pi, const FeatureMap& map) const {
    const int m = kStates * kActions;
    Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd r(m);
    for (int s = 0; s < kStates; ++s) {
      for (int a = 0; a < kActions; ++a) {
        r[pair_index(s, a)] = reward[s][a];
        for (int t = 0; t < kStates; ++t) {
          const Eigen::VectorXd probs = policy_probs(pi, map, state_vec(t));
          for (int b = 0; b < kActions; ++b)
            p_pi(pair_index(s, a), pair_index(t, b)) = trans[s][a][t] * probs[b];
        }
      }
    }
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - gamma * p_pi;
    return lhs.fullPivLu().solve(r);
  }

  // theta reproducing the given tabular q exactly (the feature matrix over
  // the 6 pairs is invertible).
  static Eigen::VectorXd theta_for(const Eigen::VectorXd& q_table, const FeatureMap& map) {
    const int m = kStates * kActions;
    Eigen::MatrixXd phi(m, map.dim());
    for (int s = 0; s < kStates; ++s)
      for (int a = 0; a < kActions; ++a)
        phi.row(pair_index(s, a)) = map.features(state_vec(s), a);
    return phi.fullPivLu().solve(q_table);
  }

  // Residual Delta(q; s, a, s') under a policy, computed from tabular data.
  double residual(const Eigen::VectorXd& theta, const SoftmaxPolicy& pi, const FeatureMap& map,
                  int s, int a, int s_next) const {
    const Eigen::VectorXd probs = policy_probs(pi, map, state_vec(s_next));
    double next = 0.0;
    for (int b = 0; b < kActions; ++b)
      next += probs[b] * map.features(state_vec(s_next), b).dot(theta);
    return reward[s][a] + gamma * next - map.features(state_vec(s), a).dot(theta);
  }

  // Population value E[Delta K Delta~] over independent transitions, by
  // enumeration over the finite support.
  double population_kernel_loss(const Eigen::VectorXd& theta, const SoftmaxPolicy& pi,
                                const FeatureMap& map, const KernelSpec& kernel) const {
    double total = 0.0;
    for (int s1 = 0; s1 < kStates; ++s1)
      for (int a1 = 0; a1 < kActions; ++a1)
        for (int t1 = 0; t1 < kStates; ++t1)
          for (int s2 = 0; s2 < kStates; ++s2)
            for (int a2 = 0; a2 < kActions; ++a2)
              for (int t2 = 0; t2 < kStates; ++t2) {
                const double p1 = mu[s1][a1] * trans[s1][a1][t1];
                const double p2 = mu[s2][a2] * trans[s2][a2][t2];
                const double k = kernel_eval(kernel, map.features(state_vec(s1), a1),
                                             map.features(state_vec(s2), a2));
                total += p1 * p2 * residual(theta, pi, map, s1, a1, t1) * k
                         * residual(theta, pi, map, s2, a2, t2);
              }
    return total;
  }

  OfflineDataset sample_dataset(int n, Rng& rng) const {
    OfflineDataset data;
    data.env_kind = "tabular";
    data.state_dim = 1;
    data.action_space = ActionSpace::make_discrete(kActions);
    data.gamma = gamma;
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform();
      int s = 0, a = 0;
      for (int ss = 0; ss < kStates && u >= 0.0; ++ss)
        for (int aa = 0; aa < kActions; ++aa) {
          u -= mu[ss][aa];
          if (u < 0.0) {
            s = ss;
            a = aa;
            goto picked;
          }
        }
    picked:
      double v = rng.uniform();
      int t = kStates - 1;
      for (int tt = 0; tt < kStates; ++tt) {
        v -= trans[s][a][tt];
        if (v < 0.0) {
          t = tt;
          break;
        }
      }
      Transition tr;
      tr.s = state_vec(s);
      tr.a = Eigen::VectorXd::Constant(1, static_cast<double>(a));
      tr.r = reward[s][a];
      tr.s_next = state_vec(t);
      tr.done = false;
      data.transitions.push_back(std::move(tr));
    }
    data.initial_states.states.push_back(state_vec(0));
    return data;
  }
};

}  // namespace testsupport
