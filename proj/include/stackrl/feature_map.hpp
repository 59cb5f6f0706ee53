#pragma once

#include <cstdint>
#include <vector>
#include <Eigen/Core>

#include "stackrl/action_space.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

// Normalized feature map phi(s, a) with ||phi||_2 <= 1 on the declared
// domain box.
//
// Discrete actions use a block one-hot layout: phi stacks |A| copies of a
// state-feature block and only the block of the taken action is nonzero.
// Box actions use joint features over the concatenated (s, a) vector.
//
// Normalization divides the raw features by their supremum 2-norm bound
// over the declared box (analytic for monomials; the 1/sqrt(m) factor
// already bounds the random Fourier variant).
class FeatureMap {
 public:
  enum class Kind { polynomial, random_fourier };

  static FeatureMap polynomial(int degree, int state_dim, ActionSpace action_space,
                               Eigen::VectorXd state_lower, Eigen::VectorXd state_upper);

  static FeatureMap random_fourier(int count, double bandwidth, std::uint64_t seed,
                                   int state_dim, ActionSpace action_space,
                                   Eigen::VectorXd state_lower, Eigen::VectorXd state_upper);

  Kind kind() const { return kind_; }
  int dim() const { return output_dim_; }
  int state_dim() const { return state_dim_; }
  const ActionSpace& action_space() const { return action_space_; }
  double scale() const { return scale_; }
  const Eigen::VectorXd& state_lower() const { return state_lower_; }
  const Eigen::VectorXd& state_upper() const { return state_upper_; }

  // Number of entries in one state block (discrete) / in the joint block (box).
  int base_dim() const { return base_dim_; }

  Eigen::VectorXd features(const Eigen::VectorXd& s, int action) const;
  Eigen::VectorXd features(const Eigen::VectorXd& s, const Eigen::VectorXd& action) const;

  // d phi / d action for box actions, shape dim() x action_dim.
  Eigen::MatrixXd action_jacobian(const Eigen::VectorXd& s, const Eigen::VectorXd& action) const;

  // Unscaled base features of the input block (state for discrete maps,
  // concatenated (s, a) for box maps).
  Eigen::VectorXd base_features_raw(const Eigen::VectorXd& x) const;

  // Exponent table of the monomial basis (polynomial maps only).
  const std::vector<std::vector<int>>& monomials() const { return monomials_; }

 private:
  FeatureMap() = default;
  void finalize_dims();
  void check_state(const Eigen::VectorXd& s) const;
  Eigen::VectorXd joint_vector(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const;

  Kind kind_ = Kind::polynomial;
  int degree_ = 2;
  int fourier_count_ = 0;
  double fourier_bandwidth_ = 1.0;
  std::uint64_t seed_ = 0;

  int state_dim_ = 0;
  ActionSpace action_space_;
  Eigen::VectorXd state_lower_, state_upper_;

  int base_input_dim_ = 0;  // variables feeding the base features
  int base_dim_ = 0;
  int output_dim_ = 0;
  double scale_ = 1.0;

  std::vector<std::vector<int>> monomials_;  // exponent vectors, graded lex
  Eigen::MatrixXd fourier_w_;                // count x base_input_dim
  Eigen::VectorXd fourier_b_;
};

}  // namespace stackrl
