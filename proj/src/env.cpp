#include "mvp/env.hpp"

#include <algorithm>
#include <cstdlib>

namespace mvp {

int action_count(ActionSet set) {
  return set == ActionSet::ForwardBackwardStay ? 3 : 2;
}

std::string_view to_string(ActionSet set) {
  return set == ActionSet::ForwardBackwardStay ? "forward_backward_stay" : "forward_backward";
}

ActionSet parse_action_set(std::string_view text) {
  if (text == "forward_backward") return ActionSet::ForwardBackward;
  if (text == "forward_backward_stay") return ActionSet::ForwardBackwardStay;
  throw ValidationError("unknown action set '" + std::string(text) +
                        "' (expected forward_backward or forward_backward_stay)");
}

std::string_view to_string(MotionInput input) {
  switch (input) {
    case MotionInput::Estimate: return "estimate";
    case MotionInput::Zeroed: return "zeroed";
    case MotionInput::Scrambled: return "scrambled";
  }
  return "unknown";
}

MotionInput parse_motion_input(std::string_view text) {
  if (text == "estimate") return MotionInput::Estimate;
  if (text == "zeroed") return MotionInput::Zeroed;
  if (text == "scrambled") return MotionInput::Scrambled;
  throw ValidationError("unknown motion input '" + std::string(text) +
                        "' (expected estimate, zeroed or scrambled)");
}

NavigationEnv::NavigationEnv(const Dataset& dataset, std::string_view traversal_id,
                             MotionModelParams motion, EnvConfig config, std::uint64_t seed)
    : dataset_(&dataset),
      traversal_(&dataset.traversal(traversal_id)),
      config_(config),
      estimator_(std::move(motion)),
      motion_rng_(make_rng(seed, "env.motion", estimator_.params().seed)),
      scramble_rng_(make_rng(seed, "env.scramble")) {
  validate(estimator_.params(), traversal_->size());
  require(config_.goal_tolerance >= 0, "env.goal_tolerance must be >= 0");
}

const Vec2& NavigationEnv::pose(int index) const {
  return traversal_->places[static_cast<std::size_t>(index)].pose;
}

Observation NavigationEnv::observe(int last_action) {
  Observation obs;
  switch (config_.motion_input) {
    case MotionInput::Estimate:
      obs.m = motion_feature(state_.motion, dataset_->route_bbox);
      break;
    case MotionInput::Zeroed:
      obs.m.setZero();
      break;
    case MotionInput::Scrambled:
      obs.m = Vec2(uniform_real(scramble_rng_, -1.0, 1.0), uniform_real(scramble_rng_, -1.0, 1.0));
      break;
  }
  obs.x = traversal_->descriptors.row(state_.current_index).transpose();
  obs.g = goal_feature_;
  obs.prev_action = Eigen::VectorXd::Zero(n_actions());
  if (last_action >= 0) obs.prev_action(last_action) = 1.0;
  return obs;
}

Observation NavigationEnv::reset(const Task& task) {
  const int n = n_places();
  require(task.start >= 0 && task.start < n && task.goal >= 0 && task.goal < n,
          "reset: task indices out of range [0, " + std::to_string(n) + ")");
  require(task.start != task.goal, "reset: start equals goal");

  state_ = EpisodeState{};
  state_.start_index = task.start;
  state_.current_index = task.start;
  state_.goal_index = task.goal;
  state_.step_cap = n - 1;
  state_.done = false;
  state_.motion = estimator_.reset(pose(task.start), task.start, motion_rng_);
  goal_feature_ = motion_feature(pose(task.goal), dataset_->route_bbox);

  estimates_.assign(1, state_.motion);
  truths_.assign(1, pose(task.start));
  return observe(-1);
}

StepResult NavigationEnv::step(int action) {
  require(!state_.done, "step: episode already finished");
  require(action >= 0 && action < n_actions(), "step: invalid action " + std::to_string(action));

  const int prev = state_.current_index;
  int next = prev;
  if (action == kForward) next = prev + 1;
  if (action == kBackward) next = prev - 1;
  next = std::clamp(next, 0, n_places() - 1);

  state_.current_index = next;
  ++state_.steps_taken;
  state_.motion = estimator_.advance(pose(prev), pose(next), next, motion_rng_);
  estimates_.push_back(state_.motion);
  truths_.push_back(pose(next));

  StepResult result;
  if (std::abs(next - state_.goal_index) <= config_.goal_tolerance) {
    result.reward = 1.0;
    state_.done = true;
    state_.success = true;
  } else if (state_.steps_taken >= state_.step_cap) {
    state_.done = true;
  }
  result.done = state_.done;
  result.observation = observe(action);
  return result;
}

int oracle_action(const EpisodeState& state) {
  return state.goal_index > state.current_index ? kForward : kBackward;
}

void validate(const CurriculumState& curriculum, int n_places) {
  require(curriculum.levels() >= 1, "curriculum needs at least one level");
  require(curriculum.level >= 1 && curriculum.level <= curriculum.levels(),
          "curriculum level " + std::to_string(curriculum.level) + " out of range");
  for (int i = 0; i < curriculum.levels(); ++i) {
    const int d = curriculum.max_goal_distance[static_cast<std::size_t>(i)];
    require(d >= 1, "curriculum distances must be >= 1");
    if (i > 0) {
      require(d > curriculum.max_goal_distance[static_cast<std::size_t>(i - 1)],
              "curriculum distances must be strictly increasing");
    }
  }
  require(curriculum.max_goal_distance.back() >= n_places - 1,
          "final curriculum level must allow full-route distance " +
              std::to_string(n_places - 1));
  require(curriculum.promotion_threshold >= 0.0 && curriculum.promotion_threshold <= 1.0,
          "curriculum threshold must be in [0, 1]");
  require(curriculum.window >= 1, "curriculum window must be >= 1");
}

CurriculumState full_range_curriculum(int n_places) {
  CurriculumState c;
  c.level = 1;
  c.max_goal_distance = {std::max(1, n_places - 1)};
  return c;
}

Task sample_task(Rng& rng, const CurriculumState& curriculum, int n_places, int min_distance) {
  require(n_places >= 2, "sample_task: need at least 2 places");
  require(curriculum.level >= 1 && curriculum.level <= curriculum.levels(),
          "sample_task: curriculum level out of range");
  require(min_distance >= 1 && min_distance <= n_places - 1,
          "sample_task: minimum distance out of range");
  const int max_d = std::max(curriculum.current_distance(), min_distance);
  while (true) {
    const int start = uniform_int(rng, 0, n_places - 1);
    // Valid goals: [start - max_d, start - min_d] and [start + min_d, start + max_d].
    const int left_lo = std::max(0, start - max_d);
    const int left_hi = start - min_distance;
    const int right_lo = start + min_distance;
    const int right_hi = std::min(n_places - 1, start + max_d);
    const int n_left = std::max(0, left_hi - left_lo + 1);
    const int n_right = std::max(0, right_hi - right_lo + 1);
    if (n_left + n_right == 0) continue;
    const int pick = uniform_int(rng, 0, n_left + n_right - 1);
    const int goal = pick < n_left ? left_lo + pick : right_lo + (pick - n_left);
    return {start, goal};
  }
}

CurriculumState curriculum_update(const CurriculumState& curriculum,
                                  std::span<const bool> recent_successes) {
  CurriculumState next = curriculum;
  if (recent_successes.empty() || curriculum.level >= curriculum.levels()) return next;
  const auto wins = std::count(recent_successes.begin(), recent_successes.end(), true);
  const double fraction = static_cast<double>(wins) / static_cast<double>(recent_successes.size());
  if (fraction >= curriculum.promotion_threshold) ++next.level;
  return next;
}

}  // namespace mvp
