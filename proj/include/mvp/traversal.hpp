#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mvp/common.hpp"

namespace mvp {

// One frame position along the route.
struct Place {
  int index = 0;
  Vec2 pose = Vec2::Zero();  // ground-truth position in meters
};

struct BoundingBox {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  Vec2 center() const { return 0.5 * (min + max); }
};

BoundingBox bounding_box(const std::vector<Place>& places);

// One pass over the route under a single appearance condition.
struct Traversal {
  std::string condition_id;
  Eigen::MatrixXd descriptors;  // N x D, one unit-norm row per place
  std::vector<Place> places;

  int size() const { return static_cast<int>(places.size()); }
};

// Frame-aligned traversals of one route.
struct Dataset {
  std::vector<Traversal> traversals;
  BoundingBox route_bbox;
  int descriptor_dim = 0;

  int n_places() const {
    return traversals.empty() ? 0 : traversals.front().size();
  }
  // Index of the traversal with this condition id; throws ValidationError.
  int traversal_index(std::string_view condition_id) const;
  const Traversal& traversal(std::string_view condition_id) const {
    return traversals[static_cast<std::size_t>(traversal_index(condition_id))];
  }
};

// Throws ValidationError describing the first violated invariant.
void validate(const Dataset& dataset);

struct AppearanceCondition {
  std::string id;
  double severity = 0.0;  // perturbation scale; 0 reproduces the base descriptors
};

// Polyline: segment k runs along heading_k; heading_0 = initial_heading_deg
// and heading_{k+1} = heading_k + turn_angles_deg[k]. An oblique first
// heading keeps the bounding box two-dimensional for any N >= 2.
struct RouteShape {
  std::vector<double> segment_lengths{40.0, 30.0, 40.0};
  std::vector<double> turn_angles_deg{60.0, -90.0};
  double initial_heading_deg = 30.0;
};

struct SyntheticSpec {
  int n_places = 100;
  int descriptor_dim = 64;
  std::vector<AppearanceCondition> conditions{{"reference", 0.0}};
  RouteShape route;
  double place_spacing = 1.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);

// Poses at arc lengths 0, spacing, 2*spacing, ... along the polyline. Places
// past the polyline's end continue along the last segment's heading.
std::vector<Vec2> layout_route(const RouteShape& route, int n_places,
                               double spacing);

// Base descriptor b_i ~ N(0, I_D), normalized. Condition c with severity s
// yields normalize(b_i + n_ci) with n_ci ~ N(0, s^2 I_D); the expected
// aligned cosine similarity is about 1 / sqrt(1 + D s^2).
Dataset generate_synthetic_dataset(const SyntheticSpec& spec);

// CSV with header `traversal_id,index,pose_x,pose_y,d0,...,d{D-1}`, rows
// grouped by traversal in ascending index, values printed with 17
// significant digits.
void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// `source_name` prefixes parse errors (typically the file path).
Dataset read_dataset(std::istream& in, const std::string& source_name);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace mvp
