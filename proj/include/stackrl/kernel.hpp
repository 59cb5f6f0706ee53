#pragma once

#include <cstdint>
#include <Eigen/Core>

#include "stackrl/errors.hpp"

namespace stackrl {

// Positive-definite kernel over featurized state-action pairs. The RKHS
// ball radius c_k enters the theory only; evaluation is parameter-free
// beyond the bandwidth.
struct KernelSpec {
  enum class Kind { rbf, linear };

  Kind kind = Kind::rbf;
  double bandwidth = 1.0;
  double c_k = 1.0;

  static KernelSpec rbf(double bandwidth, double c_k = 1.0) {
    if (!(bandwidth > 0.0)) throw InputError("kernel bandwidth must be positive");
    return KernelSpec{Kind::rbf, bandwidth, c_k};
  }
  static KernelSpec linear(double c_k = 1.0) { return KernelSpec{Kind::linear, 1.0, c_k}; }
};

// K(z1, z2) on feature vectors; rbf: exp(-||f1 - f2||^2 / (2 b^2)).
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& f1, const Eigen::VectorXd& f2);

// Gram matrix for rows of `feats` (n x p).
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& feats);

// Median of pairwise Euclidean distances over at most 2000 rows
// (deterministic subsample by seed). Falls back to the mean distance when
// the median is zero, and to 1 when all points coincide.
double median_bandwidth(const Eigen::MatrixXd& feats, std::uint64_t seed = 0);

}  // namespace stackrl
