#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mvp/policy.hpp"

namespace mvp {

// Policy weights plus free-form string metadata (variant name, motion model,
// training provenance).
struct Checkpoint {
  PolicyParams params;
  std::map<std::string, std::string> metadata;
};

// Versioned format: a text header (`mvp-checkpoint 1`, the shape, `meta`
// lines), then one `tensor <name> <rows> <cols>` line per parameter block
// followed by rows*cols little-endian float64 values in column-major order.
// Round trips are bit-exact.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvp
