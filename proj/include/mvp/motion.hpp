#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvp/common.hpp"
#include "mvp/rng.hpp"
#include "mvp/traversal.hpp"

namespace mvp {

enum class MotionKind { Gps, Vo, Ro };

std::string_view to_string(MotionKind kind);
MotionKind parse_motion_kind(std::string_view text);

// Default noise: GPS per reading, VO/RO per relative step. RO is ten times
// tighter than VO.
double default_sigma(MotionKind kind);

// Inclusive range of frame indices.
struct IndexRange {
  int first = 0;
  int last = 0;

  bool contains(int i) const { return i >= first && i <= last; }
  bool operator==(const IndexRange&) const = default;
};

// Parses "a-b,c-d,e" (a lone index is a one-frame range). Empty text yields
// no ranges.
std::vector<IndexRange> parse_index_ranges(std::string_view text);
std::string format_index_ranges(std::span<const IndexRange> ranges);

struct MotionModelParams {
  MotionKind kind = MotionKind::Gps;
  double noise_sigma = 0.0;              // meters
  std::vector<IndexRange> dropout;       // GPS only
  std::uint64_t seed = 0;                // mixed into the environment motion stream
};

// Throws ValidationError. Dropout ranges must lie in [0, n_places) and not
// overlap.
void validate(const MotionModelParams& params, int n_places);

struct MotionEstimate {
  Vec2 position = Vec2::Zero();
  bool available = true;
};

// A GPS reading at `frame_index`. Inside a dropout range the reading is
// unavailable and `held` (the last estimate) is reported unchanged.
MotionEstimate gps_estimate(const Vec2& true_pose, int frame_index,
                            const MotionModelParams& params,
                            const MotionEstimate& held, Rng& rng);

// Noisy relative displacement from prev_true to cur_true (VO or RO).
Vec2 vo_relative_step(const Vec2& prev_true, const Vec2& cur_true,
                      const MotionModelParams& params, Rng& rng);

// Estimate k = start + sum of the first k steps; returns steps.size() + 1
// estimates, the first being `start`.
std::vector<MotionEstimate> dead_reckon(const Vec2& start, std::span<const Vec2> steps);

// Affine map of the route bounding box onto [-1, 1]^2, clamped outside it.
Vec2 motion_feature(const Vec2& position, const BoundingBox& bbox);
inline Vec2 motion_feature(const MotionEstimate& estimate, const BoundingBox& bbox) {
  return motion_feature(estimate.position, bbox);
}

// Root-mean-square Euclidean position error, meters.
double trajectory_rmse(std::span<const MotionEstimate> estimates,
                       std::span<const Vec2> truths);

// Per-episode estimator state: the held GPS reading or the dead-reckoned
// position, anchored at the true start pose.
class MotionEstimator {
 public:
  explicit MotionEstimator(MotionModelParams params);

  const MotionModelParams& params() const { return params_; }
  const MotionEstimate& current() const { return current_; }

  MotionEstimate reset(const Vec2& start_pose, int start_index, Rng& rng);
  MotionEstimate advance(const Vec2& prev_true, const Vec2& cur_true, int cur_index,
                         Rng& rng);

 private:
  MotionModelParams params_;
  MotionEstimate current_;
};

}  // namespace mvp
