#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mvp/common.hpp"
#include "mvp/motion.hpp"
#include "mvp/rng.hpp"
#include "mvp/traversal.hpp"

namespace mvp {

enum Action : int { kForward = 0, kBackward = 1, kStay = 2 };

enum class ActionSet { ForwardBackward, ForwardBackwardStay };

int action_count(ActionSet set);
std::string_view to_string(ActionSet set);
ActionSet parse_action_set(std::string_view text);

// What the agent sees in the motion slot. Zeroed is the vision-only ablation;
// Scrambled replaces m_t with uniform noise in [-1, 1]^2 (control runs).
enum class MotionInput { Estimate, Zeroed, Scrambled };

std::string_view to_string(MotionInput input);
MotionInput parse_motion_input(std::string_view text);

struct Observation {
  Vec2 m = Vec2::Zero();            // motion feature
  Eigen::VectorXd x;                // visual descriptor of the current place
  Vec2 g = Vec2::Zero();            // goal feature
  Eigen::VectorXd prev_action;      // one-hot, all zeros at episode start
};

struct Task {
  int start = 0;
  int goal = 0;
};

struct EpisodeState {
  int start_index = 0;
  int current_index = 0;
  int goal_index = 0;
  int steps_taken = 0;
  int step_cap = 0;
  bool done = true;
  bool success = false;
  MotionEstimate motion;
};

struct EnvConfig {
  ActionSet action_set = ActionSet::ForwardBackward;
  int goal_tolerance = 0;  // frames
  MotionInput motion_input = MotionInput::Estimate;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

// Episodic navigation over one traversal. Forward/Backward move one place
// along the route, clamped at the ends. The episode ends with reward +1 when
// the agent is within goal_tolerance of the goal, or with reward 0 after
// N - 1 steps.
//
// The dataset must outlive the environment.
class NavigationEnv {
 public:
  NavigationEnv(const Dataset& dataset, std::string_view traversal_id,
                MotionModelParams motion, EnvConfig config, std::uint64_t seed);

  Observation reset(const Task& task);
  StepResult step(int action);

  const EpisodeState& state() const { return state_; }
  const Dataset& dataset() const { return *dataset_; }
  const Traversal& traversal() const { return *traversal_; }
  const EnvConfig& config() const { return config_; }
  const MotionModelParams& motion_params() const { return estimator_.params(); }
  int n_places() const { return traversal_->size(); }
  int n_actions() const { return action_count(config_.action_set); }

  // Per-frame estimates and true poses of the current episode.
  const std::vector<MotionEstimate>& episode_estimates() const { return estimates_; }
  const std::vector<Vec2>& episode_truths() const { return truths_; }

 private:
  Observation observe(int last_action);
  const Vec2& pose(int index) const;

  const Dataset* dataset_;
  const Traversal* traversal_;
  EnvConfig config_;
  MotionEstimator estimator_;
  Rng motion_rng_;
  Rng scramble_rng_;
  EpisodeState state_;
  Vec2 goal_feature_ = Vec2::Zero();
  std::vector<MotionEstimate> estimates_;
  std::vector<Vec2> truths_;
};

// Step toward the goal index; Stay never helps.
int oracle_action(const EpisodeState& state);

struct CurriculumState {
  int level = 1;                          // 1-based
  std::vector<int> max_goal_distance{3, 10, 30, 99};
  double promotion_threshold = 0.9;
  int window = 100;                       // episodes

  int levels() const { return static_cast<int>(max_goal_distance.size()); }
  int current_distance() const {
    return max_goal_distance[static_cast<std::size_t>(level - 1)];
  }
};

// Distances strictly increasing, last >= n_places - 1, threshold in [0, 1],
// window >= 1.
void validate(const CurriculumState& curriculum, int n_places);

// A curriculum whose single level spans the whole route.
CurriculumState full_range_curriculum(int n_places);

// Start uniform over [0, N); goal uniform over the valid indices with
// min_distance <= |goal - start| <= the level's maximum distance.
Task sample_task(Rng& rng, const CurriculumState& curriculum, int n_places,
                 int min_distance = 1);

// Promotes one level when the success fraction reaches the threshold and a
// higher level exists. Never demotes.
CurriculumState curriculum_update(const CurriculumState& curriculum,
                                  std::span<const bool> recent_successes);

}  // namespace mvp
