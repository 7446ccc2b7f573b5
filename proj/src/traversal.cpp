#include "mvp/traversal.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "mvp/rng.hpp"

namespace mvp {
namespace {

constexpr double kUnitNormTolerance = 1e-9;
constexpr double kLoadNormTolerance = 1e-6;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = line.find(',', begin);
    fields.push_back(line.substr(begin, end - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return fields;
}

std::string where(const std::string& source, int line) {
  return source + ":" + std::to_string(line) + ": ";
}

double parse_double(std::string_view text, const std::string& context) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ValidationError(context + "invalid number '" + std::string(text) + "'");
  }
  return value;
}

int parse_int(std::string_view text, const std::string& context) {
  int value = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError(context + "invalid integer '" + std::string(text) + "'");
  }
  return value;
}

void append_number(std::string& out, double value) {
  char buffer[32];
  const int n = std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  out.append(buffer, static_cast<std::size_t>(n));
}

}  // namespace

BoundingBox bounding_box(const std::vector<Place>& places) {
  BoundingBox box;
  if (places.empty()) return box;
  box.min = places.front().pose;
  box.max = places.front().pose;
  for (const Place& p : places) {
    box.min = box.min.cwiseMin(p.pose);
    box.max = box.max.cwiseMax(p.pose);
  }
  return box;
}

int Dataset::traversal_index(std::string_view condition_id) const {
  for (std::size_t i = 0; i < traversals.size(); ++i) {
    if (traversals[i].condition_id == condition_id) return static_cast<int>(i);
  }
  throw ValidationError("unknown traversal '" + std::string(condition_id) + "'");
}

void validate(const Dataset& dataset) {
  require(!dataset.traversals.empty(), "dataset has no traversals");
  require(dataset.descriptor_dim >= 2, "descriptor dimension must be >= 2");
  const Traversal& first = dataset.traversals.front();
  const int n = first.size();
  require(n >= 2, "traversal '" + first.condition_id + "' has fewer than 2 places");

  std::set<std::string> ids;
  for (const Traversal& t : dataset.traversals) {
    require(!t.condition_id.empty(), "traversal with empty condition id");
    require(t.condition_id.find_first_of(",\n\r") == std::string::npos,
            "condition id '" + t.condition_id + "' contains a separator");
    require(ids.insert(t.condition_id).second,
            "duplicate traversal '" + t.condition_id + "'");
    require(t.size() == n, "traversal '" + t.condition_id + "' has " +
                               std::to_string(t.size()) + " places but '" +
                               first.condition_id + "' has " + std::to_string(n));
    require(t.descriptors.rows() == n,
            "traversal '" + t.condition_id + "' descriptor count differs from place count");
    require(t.descriptors.cols() == dataset.descriptor_dim,
            "traversal '" + t.condition_id + "' has descriptor dimension " +
                std::to_string(t.descriptors.cols()) + ", expected " +
                std::to_string(dataset.descriptor_dim));
    for (int i = 0; i < n; ++i) {
      const Place& p = t.places[static_cast<std::size_t>(i)];
      require(p.index == i, "traversal '" + t.condition_id + "' place indices are not 0..N-1");
      require(p.pose.allFinite(), "traversal '" + t.condition_id + "' has a non-finite pose");
      require(p.pose == first.places[static_cast<std::size_t>(i)].pose,
              "traversal '" + t.condition_id + "' pose of place " + std::to_string(i) +
                  " differs from '" + first.condition_id + "'");
      if (i > 0) {
        require(p.pose != t.places[static_cast<std::size_t>(i - 1)].pose,
                "places " + std::to_string(i - 1) + " and " + std::to_string(i) +
                    " share a pose");
      }
      const double norm = t.descriptors.row(i).norm();
      require(std::abs(norm - 1.0) <= kUnitNormTolerance,
              "traversal '" + t.condition_id + "' descriptor " + std::to_string(i) +
                  " is not unit norm");
    }
  }
  const BoundingBox box = bounding_box(first.places);
  require(box.width() > 0.0 && box.height() > 0.0,
          "route bounding box must have positive width and height");
  require(dataset.route_bbox.min == box.min && dataset.route_bbox.max == box.max,
          "route bounding box does not match the place poses");
}

void validate(const SyntheticSpec& spec) {
  require(spec.n_places >= 2, "n_places must be >= 2");
  require(spec.descriptor_dim >= 2, "descriptor_dim must be >= 2");
  require(!spec.conditions.empty(), "at least one condition is required");
  std::set<std::string> ids;
  for (const auto& c : spec.conditions) {
    require(!c.id.empty(), "condition id must be non-empty");
    require(c.id.find_first_of(",:\n\r") == std::string::npos,
            "condition id '" + c.id + "' contains a separator");
    require(ids.insert(c.id).second, "duplicate condition '" + c.id + "'");
    require(std::isfinite(c.severity) && c.severity >= 0.0,
            "severity of condition '" + c.id + "' must be >= 0");
  }
  require(std::isfinite(spec.place_spacing) && spec.place_spacing > 0.0,
          "place_spacing must be > 0");
  require(!spec.route.segment_lengths.empty(), "route needs at least one segment");
  require(spec.route.turn_angles_deg.size() + 1 == spec.route.segment_lengths.size(),
          "route needs exactly one turn angle between consecutive segments");
  for (double len : spec.route.segment_lengths) {
    require(std::isfinite(len) && len > 0.0, "segment lengths must be > 0");
  }
  for (double a : spec.route.turn_angles_deg) {
    require(std::isfinite(a), "turn angles must be finite");
  }
  require(std::isfinite(spec.route.initial_heading_deg), "initial heading must be finite");
}

std::vector<Vec2> layout_route(const RouteShape& route, int n_places, double spacing) {
  std::vector<Vec2> corners{Vec2::Zero()};
  std::vector<Vec2> headings;
  double heading = route.initial_heading_deg * std::numbers::pi / 180.0;
  for (std::size_t k = 0; k < route.segment_lengths.size(); ++k) {
    if (k > 0) heading += route.turn_angles_deg[k - 1] * std::numbers::pi / 180.0;
    const Vec2 dir(std::cos(heading), std::sin(heading));
    headings.push_back(dir);
    corners.push_back(corners.back() + route.segment_lengths[k] * dir);
  }

  std::vector<Vec2> poses;
  poses.reserve(static_cast<std::size_t>(n_places));
  for (int i = 0; i < n_places; ++i) {
    double s = i * spacing;
    std::size_t k = 0;
    while (k + 1 < route.segment_lengths.size() && s > route.segment_lengths[k]) {
      s -= route.segment_lengths[k];
      ++k;
    }
    poses.push_back(corners[k] + s * headings[k]);
  }
  return poses;
}

Dataset generate_synthetic_dataset(const SyntheticSpec& spec) {
  validate(spec);
  const int n = spec.n_places;
  const int d = spec.descriptor_dim;

  Rng base_rng = make_rng(spec.seed, "traversal.base");
  Eigen::MatrixXd base(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) base(i, j) = standard_normal(base_rng);
    base.row(i).normalize();
  }

  const std::vector<Vec2> poses = layout_route(spec.route, n, spec.place_spacing);
  std::vector<Place> places;
  places.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) places.push_back({i, poses[static_cast<std::size_t>(i)]});

  Dataset dataset;
  dataset.descriptor_dim = d;
  dataset.route_bbox = bounding_box(places);
  for (std::size_t c = 0; c < spec.conditions.size(); ++c) {
    const auto& condition = spec.conditions[c];
    Rng rng = make_rng(spec.seed, "traversal.condition", c);
    Traversal t;
    t.condition_id = condition.id;
    t.places = places;
    t.descriptors.resize(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        t.descriptors(i, j) = base(i, j) + condition.severity * standard_normal(rng);
      }
      t.descriptors.row(i).normalize();
    }
    dataset.traversals.push_back(std::move(t));
  }
  validate(dataset);
  return dataset;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  validate(dataset);
  std::string header = "traversal_id,index,pose_x,pose_y";
  for (int j = 0; j < dataset.descriptor_dim; ++j) header += ",d" + std::to_string(j);
  out << header << '\n';
  std::string line;
  for (const Traversal& t : dataset.traversals) {
    for (int i = 0; i < t.size(); ++i) {
      const Place& p = t.places[static_cast<std::size_t>(i)];
      line.clear();
      line += t.condition_id;
      line += ',';
      line += std::to_string(p.index);
      line += ',';
      append_number(line, p.pose.x());
      line += ',';
      append_number(line, p.pose.y());
      for (int j = 0; j < dataset.descriptor_dim; ++j) {
        line += ',';
        append_number(line, t.descriptors(i, j));
      }
      line += '\n';
      out << line;
    }
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  validate(dataset);  // before the file is touched
  std::ostringstream buffer;
  write_dataset(dataset, buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << buffer.str();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Dataset read_dataset(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ValidationError(where(source_name, 1) + "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 6 || header[0] != "traversal_id" || header[1] != "index" ||
      header[2] != "pose_x" || header[3] != "pose_y") {
    throw ValidationError(where(source_name, 1) + "unexpected header");
  }
  const int d = static_cast<int>(header.size()) - 4;
  for (int j = 0; j < d; ++j) {
    if (header[static_cast<std::size_t>(4 + j)] != "d" + std::to_string(j)) {
      throw ValidationError(where(source_name, 1) + "descriptor columns must be d0..d" +
                            std::to_string(d - 1));
    }
  }

  struct Pending {
    std::string id;
    std::vector<Place> places;
    std::vector<Eigen::VectorXd> rows;
  };
  std::vector<Pending> pending;
  std::set<std::string> closed;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string ctx = where(source_name, line_no);
    const auto fields = split_commas(line);
    if (static_cast<int>(fields.size()) != d + 4) {
      throw ValidationError(ctx + "expected " + std::to_string(d + 4) + " fields, found " +
                            std::to_string(fields.size()) +
                            " (inconsistent descriptor dimension)");
    }
    const std::string id(fields[0]);
    if (id.empty()) throw ValidationError(ctx + "empty traversal id");
    if (pending.empty() || pending.back().id != id) {
      if (!pending.empty()) closed.insert(pending.back().id);
      if (closed.count(id) != 0) {
        throw ValidationError(ctx + "rows of traversal '" + id + "' are not contiguous");
      }
      pending.push_back({id, {}, {}});
    }
    Pending& t = pending.back();
    const int index = parse_int(fields[1], ctx);
    if (index != static_cast<int>(t.places.size())) {
      throw ValidationError(ctx + "expected index " + std::to_string(t.places.size()) +
                            " for traversal '" + id + "', found " + std::to_string(index));
    }
    Place p;
    p.index = index;
    p.pose = Vec2(parse_double(fields[2], ctx), parse_double(fields[3], ctx));
    Eigen::VectorXd desc(d);
    for (int j = 0; j < d; ++j) desc(j) = parse_double(fields[static_cast<std::size_t>(4 + j)], ctx);
    const double norm = desc.norm();
    if (std::abs(norm - 1.0) > kLoadNormTolerance) {
      throw ValidationError(ctx + "descriptor of traversal '" + id + "' place " +
                            std::to_string(index) + " has norm " + std::to_string(norm) +
                            ", expected unit norm");
    }
    desc /= norm;
    t.places.push_back(p);
    t.rows.push_back(std::move(desc));
  }
  if (pending.empty()) throw ValidationError(where(source_name, line_no) + "no data rows");

  for (const Pending& t : pending) {
    if (t.places.size() != pending.front().places.size()) {
      throw ValidationError(source_name + ": traversal '" + t.id + "' has " +
                            std::to_string(t.places.size()) + " places but traversal '" +
                            pending.front().id + "' has " +
                            std::to_string(pending.front().places.size()));
    }
  }

  Dataset dataset;
  dataset.descriptor_dim = d;
  for (Pending& p : pending) {
    Traversal t;
    t.condition_id = p.id;
    t.places = std::move(p.places);
    t.descriptors.resize(static_cast<Eigen::Index>(p.rows.size()), d);
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      t.descriptors.row(static_cast<Eigen::Index>(i)) = p.rows[i].transpose();
    }
    dataset.traversals.push_back(std::move(t));
  }
  dataset.route_bbox = bounding_box(dataset.traversals.front().places);
  try {
    validate(dataset);
  } catch (const ValidationError& e) {
    throw ValidationError(source_name + ": " + e.what());
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_dataset(in, path.string());
}

}  // namespace mvp
