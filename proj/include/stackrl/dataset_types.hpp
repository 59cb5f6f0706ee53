#pragma once

#include <map>
#include <string>
#include <vector>
#include <Eigen/Core>

#include "stackrl/action_space.hpp"

namespace stackrl {

// One logged step. For discrete spaces `a` has length 1 and holds the index.
struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// States drawn once from the environment's initial distribution and held
// fixed for a whole training run.
struct InitialStateSet {
  std::vector<Eigen::VectorXd> states;

  int size() const { return static_cast<int>(states.size()); }
};

struct OfflineDataset {
  std::vector<Transition> transitions;
  InitialStateSet initial_states;

  std::string env_kind;
  int state_dim = 0;
  ActionSpace action_space;
  double gamma = 0.95;

  // Generation provenance (behavior parameters, seed, ...), kept ordered so
  // persistence round-trips byte-identically.
  std::map<std::string, std::string> meta;

  int size() const { return static_cast<int>(transitions.size()); }
};

// Text persistence: one header line of key=value pairs, then n transition
// rows "s..., a..., r, s'..., done", then the initial-state rows. All floats
// use shortest round-trip formatting.
void save_dataset(const OfflineDataset& data, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

bool dataset_equal(const OfflineDataset& a, const OfflineDataset& b);

}  // namespace stackrl
