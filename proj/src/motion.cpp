#include "mvp/motion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace mvp {
namespace {

void require_kind(const MotionModelParams& params, bool ok, const char* op) {
  if (!ok) {
    throw ValidationError(std::string(op) + ": unsupported motion kind '" +
                          std::string(to_string(params.kind)) + "'");
  }
}

int parse_index(std::string_view text, std::string_view whole) {
  int value = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ValidationError("invalid index range list '" + std::string(whole) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::Gps: return "gps";
    case MotionKind::Vo: return "vo";
    case MotionKind::Ro: return "ro";
  }
  return "unknown";
}

MotionKind parse_motion_kind(std::string_view text) {
  if (text == "gps") return MotionKind::Gps;
  if (text == "vo") return MotionKind::Vo;
  if (text == "ro") return MotionKind::Ro;
  throw ValidationError("unknown motion kind '" + std::string(text) +
                        "' (expected gps, vo or ro)");
}

double default_sigma(MotionKind kind) {
  switch (kind) {
    case MotionKind::Gps: return 0.5;
    case MotionKind::Vo: return 0.1;
    case MotionKind::Ro: return 0.01;
  }
  return 0.0;
}

std::vector<IndexRange> parse_index_ranges(std::string_view text) {
  std::vector<IndexRange> ranges;
  const std::string_view whole = text;
  text = trim(text);
  if (text.empty()) return ranges;
  while (true) {
    const std::size_t comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    const std::size_t dash = item.find('-');
    IndexRange r;
    if (dash == std::string_view::npos) {
      r.first = r.last = parse_index(item, whole);
    } else {
      r.first = parse_index(trim(item.substr(0, dash)), whole);
      r.last = parse_index(trim(item.substr(dash + 1)), whole);
    }
    ranges.push_back(r);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return ranges;
}

std::string format_index_ranges(std::span<const IndexRange> ranges) {
  std::string out;
  for (const IndexRange& r : ranges) {
    if (!out.empty()) out += ',';
    out += std::to_string(r.first);
    if (r.last != r.first) out += "-" + std::to_string(r.last);
  }
  return out;
}

void validate(const MotionModelParams& params, int n_places) {
  require(std::isfinite(params.noise_sigma) && params.noise_sigma >= 0.0,
          "motion.sigma must be >= 0");
  if (params.kind != MotionKind::Gps) {
    require(params.dropout.empty(), "motion.dropout is only valid for gps");
  }
  std::vector<IndexRange> sorted = params.dropout;
  std::sort(sorted.begin(), sorted.end(),
            [](const IndexRange& a, const IndexRange& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const IndexRange& r = sorted[i];
    require(r.first >= 0 && r.first <= r.last && r.last < n_places,
            "motion.dropout range " + std::to_string(r.first) + "-" + std::to_string(r.last) +
                " is outside [0, " + std::to_string(n_places) + ")");
    if (i > 0) {
      require(sorted[i - 1].last < r.first, "motion.dropout ranges overlap");
    }
  }
}

MotionEstimate gps_estimate(const Vec2& true_pose, int frame_index,
                            const MotionModelParams& params, const MotionEstimate& held,
                            Rng& rng) {
  require_kind(params, params.kind == MotionKind::Gps, "gps_estimate");
  for (const IndexRange& r : params.dropout) {
    if (r.contains(frame_index)) return {held.position, false};
  }
  MotionEstimate e;
  e.available = true;
  e.position.x() = true_pose.x() + params.noise_sigma * standard_normal(rng);
  e.position.y() = true_pose.y() + params.noise_sigma * standard_normal(rng);
  return e;
}

Vec2 vo_relative_step(const Vec2& prev_true, const Vec2& cur_true,
                      const MotionModelParams& params, Rng& rng) {
  require_kind(params, params.kind == MotionKind::Vo || params.kind == MotionKind::Ro,
               "vo_relative_step");
  Vec2 step = cur_true - prev_true;
  step.x() += params.noise_sigma * standard_normal(rng);
  step.y() += params.noise_sigma * standard_normal(rng);
  return step;
}

std::vector<MotionEstimate> dead_reckon(const Vec2& start, std::span<const Vec2> steps) {
  std::vector<MotionEstimate> out;
  out.reserve(steps.size() + 1);
  Vec2 position = start;
  out.push_back({position, true});
  for (const Vec2& s : steps) {
    position += s;
    out.push_back({position, true});
  }
  return out;
}

Vec2 motion_feature(const Vec2& position, const BoundingBox& bbox) {
  require(bbox.width() > 0.0 && bbox.height() > 0.0, "motion_feature: degenerate bounding box");
  const Vec2 extent = bbox.max - bbox.min;
  const Vec2 unit = (position - bbox.min).cwiseQuotient(extent);
  return (2.0 * unit - Vec2::Ones()).cwiseMax(-1.0).cwiseMin(1.0);
}

double trajectory_rmse(std::span<const MotionEstimate> estimates, std::span<const Vec2> truths) {
  require(!estimates.empty(), "trajectory_rmse: empty input");
  require(estimates.size() == truths.size(), "trajectory_rmse: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum += (estimates[i].position - truths[i]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

MotionEstimator::MotionEstimator(MotionModelParams params) : params_(std::move(params)) {}

MotionEstimate MotionEstimator::reset(const Vec2& start_pose, int start_index, Rng& rng) {
  if (params_.kind == MotionKind::Gps) {
    current_ = gps_estimate(start_pose, start_index, params_, {start_pose, false}, rng);
  } else {
    current_ = {start_pose, true};
  }
  return current_;
}

MotionEstimate MotionEstimator::advance(const Vec2& prev_true, const Vec2& cur_true,
                                        int cur_index, Rng& rng) {
  if (params_.kind == MotionKind::Gps) {
    current_ = gps_estimate(cur_true, cur_index, params_, current_, rng);
  } else {
    current_.position += vo_relative_step(prev_true, cur_true, params_, rng);
    current_.available = true;
  }
  return current_;
}

}  // namespace mvp
