#include "stackrl/feature_map.hpp"

#include <cmath>

#include "stackrl/rng.hpp"

namespace stackrl {

namespace {

// All exponent vectors over `vars` variables with total degree <= degree,
// ordered by total degree then lexicographically. Degree-2 over (x1, x2)
// enumerates [1, x1, x2, x1^2, x1*x2, x2^2].
void enumerate_monomials(int vars, int degree, std::vector<std::vector<int>>& out) {
  std::vector<int> current(vars, 0);
  for (int total = 0; total <= degree; ++total) {
    // lexicographic walk over compositions of `total`
    std::vector<int> e(vars, 0);
    e[0] = total;
    if (vars == 0) continue;
    while (true) {
      out.push_back(e);
      // next composition in reverse-lex order of the tail
      int k = vars - 2;
      while (k >= 0 && e[k] == 0) --k;
      if (k < 0) break;
      --e[k];
      int rest = total;
      for (int i = 0; i <= k; ++i) rest -= e[i];
      e[k + 1] = rest;
      for (int i = k + 2; i < vars; ++i) e[i] = 0;
    }
  }
}

double monomial_value(const std::vector<int>& expo, const Eigen::VectorXd& x) {
  double v = 1.0;
  for (size_t i = 0; i < expo.size(); ++i) {
    for (int k = 0; k < expo[i]; ++k) v *= x[static_cast<int>(i)];
  }
  return v;
}

}  // namespace

void FeatureMap::finalize_dims() {
  if (action_space_.discrete()) {
    output_dim_ = base_dim_ * action_space_.cardinality;
  } else {
    output_dim_ = base_dim_;
  }
}

FeatureMap FeatureMap::polynomial(int degree, int state_dim, ActionSpace action_space,
                                  Eigen::VectorXd state_lower, Eigen::VectorXd state_upper) {
  if (degree < 0) throw InputError("polynomial degree must be nonnegative");
  if (state_dim < 1) throw InputError("state_dim must be positive");
  if (state_lower.size() != state_dim || state_upper.size() != state_dim)
    throw InputError("state box bounds must have length state_dim");
  if (!((state_lower.array() < state_upper.array()).all()))
    throw InputError("state box needs lower < upper componentwise");

  FeatureMap m;
  m.kind_ = Kind::polynomial;
  m.degree_ = degree;
  m.state_dim_ = state_dim;
  m.action_space_ = std::move(action_space);
  m.state_lower_ = std::move(state_lower);
  m.state_upper_ = std::move(state_upper);
  m.base_input_dim_ =
      m.action_space_.discrete() ? state_dim : state_dim + m.action_space_.dim();
  enumerate_monomials(m.base_input_dim_, degree, m.monomials_);
  m.base_dim_ = static_cast<int>(m.monomials_.size());
  m.finalize_dims();

  // sup of |monomial| over the box is the product of per-variable
  // max(|lo|, |hi|)^exponent; the 2-norm bound follows.
  Eigen::VectorXd absmax(m.base_input_dim_);
  for (int i = 0; i < m.state_dim_; ++i)
    absmax[i] = std::max(std::abs(m.state_lower_[i]), std::abs(m.state_upper_[i]));
  if (!m.action_space_.discrete()) {
    for (int i = 0; i < m.action_space_.dim(); ++i)
      absmax[m.state_dim_ + i] =
          std::max(std::abs(m.action_space_.lower[i]), std::abs(m.action_space_.upper[i]));
  }
  double sq = 0.0;
  for (const auto& expo : m.monomials_) {
    double bound = 1.0;
    for (size_t i = 0; i < expo.size(); ++i)
      bound *= std::pow(absmax[static_cast<int>(i)], expo[i]);
    sq += bound * bound;
  }
  m.scale_ = 1.0 / std::sqrt(sq);
  return m;
}

FeatureMap FeatureMap::random_fourier(int count, double bandwidth, std::uint64_t seed,
                                      int state_dim, ActionSpace action_space,
                                      Eigen::VectorXd state_lower, Eigen::VectorXd state_upper) {
  if (count < 1) throw InputError("random fourier count must be positive");
  if (!(bandwidth > 0.0)) throw InputError("random fourier bandwidth must be positive");
  if (state_dim < 1) throw InputError("state_dim must be positive");
  if (state_lower.size() != state_dim || state_upper.size() != state_dim)
    throw InputError("state box bounds must have length state_dim");

  FeatureMap m;
  m.kind_ = Kind::random_fourier;
  m.fourier_count_ = count;
  m.fourier_bandwidth_ = bandwidth;
  m.seed_ = seed;
  m.state_dim_ = state_dim;
  m.action_space_ = std::move(action_space);
  m.state_lower_ = std::move(state_lower);
  m.state_upper_ = std::move(state_upper);
  m.base_input_dim_ =
      m.action_space_.discrete() ? state_dim : state_dim + m.action_space_.dim();
  m.base_dim_ = count;
  m.finalize_dims();

  Rng rng(derive_seed(seed, 0x8f1f));
  m.fourier_w_ = rng.gaussian_matrix(count, m.base_input_dim_) / bandwidth;
  m.fourier_b_ = Eigen::VectorXd(count);
  for (int i = 0; i < count; ++i) m.fourier_b_[i] = rng.uniform(0.0, 2.0 * M_PI);
  m.scale_ = 1.0;  // cos(.)/sqrt(m) already has 2-norm <= 1
  return m;
}

void FeatureMap::check_state(const Eigen::VectorXd& s) const {
  if (s.size() != state_dim_) throw InputError("state dimension mismatch in feature map");
}

Eigen::VectorXd FeatureMap::base_features_raw(const Eigen::VectorXd& x) const {
  if (x.size() != base_input_dim_) throw InputError("feature input dimension mismatch");
  if (kind_ == Kind::polynomial) {
    Eigen::VectorXd out(base_dim_);
    for (int i = 0; i < base_dim_; ++i) out[i] = monomial_value(monomials_[i], x);
    return out;
  }
  Eigen::VectorXd phase = fourier_w_ * x + fourier_b_;
  return phase.array().cos().matrix() / std::sqrt(static_cast<double>(fourier_count_));
}

Eigen::VectorXd FeatureMap::joint_vector(const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& a) const {
  Eigen::VectorXd x(base_input_dim_);
  x.head(state_dim_) = s;
  x.tail(a.size()) = a;
  return x;
}

Eigen::VectorXd FeatureMap::features(const Eigen::VectorXd& s, int action) const {
  check_state(s);
  if (!action_space_.discrete())
    throw InputError("integer action passed to a box-action feature map");
  if (action < 0 || action >= action_space_.cardinality)
    throw InputError("action index out of range");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(output_dim_);
  out.segment(action * base_dim_, base_dim_) = scale_ * base_features_raw(s);
  return out;
}

Eigen::VectorXd FeatureMap::features(const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& action) const {
  check_state(s);
  if (action_space_.discrete())
    throw InputError("vector action passed to a discrete-action feature map");
  if (action.size() != action_space_.dim())
    throw InputError("action dimension mismatch in feature map");
  return scale_ * base_features_raw(joint_vector(s, action));
}

Eigen::MatrixXd FeatureMap::action_jacobian(const Eigen::VectorXd& s,
                                            const Eigen::VectorXd& action) const {
  check_state(s);
  if (action_space_.discrete())
    throw UnsupportedError("action_jacobian is defined for box actions only");
  if (action.size() != action_space_.dim())
    throw InputError("action dimension mismatch in feature map");
  const int adim = action_space_.dim();
  const Eigen::VectorXd x = joint_vector(s, action);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(output_dim_, adim);

  if (kind_ == Kind::polynomial) {
    for (int i = 0; i < base_dim_; ++i) {
      const auto& expo = monomials_[i];
      for (int k = 0; k < adim; ++k) {
        const int var = state_dim_ + k;
        const int e = expo[var];
        if (e == 0) continue;
        double d = static_cast<double>(e);
        for (size_t j = 0; j < expo.size(); ++j) {
          int ej = expo[j];
          if (static_cast<int>(j) == var) ej -= 1;
          for (int c = 0; c < ej; ++c) d *= x[static_cast<int>(j)];
        }
        jac(i, k) = scale_ * d;
      }
    }
    return jac;
  }

  const Eigen::VectorXd phase = fourier_w_ * x + fourier_b_;
  const Eigen::VectorXd msin =
      -phase.array().sin().matrix() / std::sqrt(static_cast<double>(fourier_count_));
  for (int k = 0; k < adim; ++k)
    jac.col(k) = scale_ * msin.cwiseProduct(fourier_w_.col(state_dim_ + k));
  return jac;
}

}  // namespace stackrl
