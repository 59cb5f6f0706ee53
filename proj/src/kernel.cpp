#include "stackrl/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stackrl/rng.hpp"

namespace stackrl {

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& f1,
                   const Eigen::VectorXd& f2) {
  if (!f1.allFinite() || !f2.allFinite()) throw NumericError("kernel_eval: non-finite input");
  if (f1.size() != f2.size()) throw InputError("kernel_eval: dimension mismatch");
  if (spec.kind == KernelSpec::Kind::linear) return f1.dot(f2);
  const double d2 = (f1 - f2).squaredNorm();
  return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& feats) {
  const Eigen::Index n = feats.rows();
  if (n < 1) throw InputError("gram: empty point set");
  if (!feats.allFinite()) throw NumericError("gram: non-finite features");
  if (spec.kind == KernelSpec::Kind::linear) {
    Eigen::MatrixXd g = feats * feats.transpose();
    return 0.5 * (g + g.transpose());
  }
  const Eigen::VectorXd sq = feats.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1)
                       - 2.0 * feats * feats.transpose();
  d2 = d2.cwiseMax(0.0);
  Eigen::MatrixXd g = (-d2 / (2.0 * spec.bandwidth * spec.bandwidth)).array().exp();
  return 0.5 * (g + g.transpose());
}

double median_bandwidth(const Eigen::MatrixXd& feats, std::uint64_t seed) {
  const int n = static_cast<int>(feats.rows());
  if (n < 2) throw InputError("median_bandwidth needs at least 2 points");

  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  constexpr int kMaxPoints = 2000;
  if (n > kMaxPoints) {
    Rng rng(derive_seed(seed, 0xb4d));
    for (int i = 0; i < kMaxPoints; ++i) {
      const int j = i + rng.uniform_int(n - i);
      std::swap(rows[i], rows[j]);
    }
    rows.resize(kMaxPoints);
    std::sort(rows.begin(), rows.end());
  }

  const int m = static_cast<int>(rows.size());
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      dists.push_back((feats.row(rows[i]) - feats.row(rows[j])).norm());

  std::sort(dists.begin(), dists.end());
  const size_t cnt = dists.size();
  double median;
  if (cnt % 2 == 1) {
    median = dists[cnt / 2];
  } else {
    median = 0.5 * (dists[cnt / 2 - 1] + dists[cnt / 2]);
  }
  if (median > 0.0) return median;
  const double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / cnt;
  return mean > 0.0 ? mean : 1.0;
}

}  // namespace stackrl
