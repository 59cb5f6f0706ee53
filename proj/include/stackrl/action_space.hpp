#pragma once

#include <Eigen/Core>

#include "stackrl/errors.hpp"

namespace stackrl {

struct ActionSpace {
  enum class Kind { discrete, box };

  Kind kind = Kind::discrete;
  int cardinality = 0;        // discrete only
  Eigen::VectorXd lower;      // box only
  Eigen::VectorXd upper;

  static ActionSpace make_discrete(int cardinality) {
    if (cardinality < 2) throw InputError("discrete action space needs cardinality >= 2");
    ActionSpace a;
    a.kind = Kind::discrete;
    a.cardinality = cardinality;
    return a;
  }

  static ActionSpace make_box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw InputError("box action space needs matching nonempty bounds");
    if (!((lower.array() < upper.array()).all()))
      throw InputError("box action space needs lower < upper componentwise");
    ActionSpace a;
    a.kind = Kind::box;
    a.lower = std::move(lower);
    a.upper = std::move(upper);
    return a;
  }

  bool discrete() const { return kind == Kind::discrete; }

  // Width of the action block in a transition row: 1 (index) or box dim.
  int dim() const { return discrete() ? 1 : static_cast<int>(lower.size()); }
};

}  // namespace stackrl
