#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mvp/env.hpp"
#include "mvp/harness.hpp"
#include "mvp/motion.hpp"
#include "mvp/policy.hpp"
#include "mvp/ppo.hpp"
#include "mvp/traversal.hpp"
#include "mvp/vpr.hpp"

namespace mvp {

// Environment variable supplying the default for `out_dir`.
inline constexpr const char* kOutDirEnv = "MVP_OUT_DIR";

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognized key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

// Flat `key = value` configuration. Lines are trimmed; `#` starts a comment;
// blank lines are ignored. Unknown keys and malformed lines are rejected
// with the source line number.
class RunConfig {
 public:
  RunConfig();  // all defaults

  static RunConfig from_file(const std::filesystem::path& path);
  void parse(std::istream& in, const std::string& source_name);

  void set(std::string_view key, std::string_view value);
  // "key=value"
  void apply_override(std::string_view assignment);

  const std::string& get(std::string_view key) const;
  std::string get_string(std::string_view key) const { return get(key); }
  int get_int(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<int> get_ints(std::string_view key) const;
  std::vector<std::string> get_strings(std::string_view key) const;

  // Effective configuration, one `key = value` line per key in key order.
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Component seeds derived from the top-level `seed`.
std::uint64_t component_seed(const RunConfig& config, std::string_view component);

std::filesystem::path out_dir(const RunConfig& config);
std::filesystem::path dataset_path(const RunConfig& config);
std::filesystem::path checkpoint_path(const RunConfig& config);

// Builders translate keys into module configurations and validate them;
// failures are ValidationErrors naming the offending key.
SyntheticSpec synthetic_spec(const RunConfig& config);
MotionModelParams motion_params(const RunConfig& config);
EnvConfig env_config(const RunConfig& config);
CurriculumState curriculum_config(const RunConfig& config);
PolicyShape policy_shape(const RunConfig& config, int descriptor_dim);
PpoConfig ppo_config(const RunConfig& config);
TrainOptions train_options(const RunConfig& config, int descriptor_dim);
DeploymentOptions deployment_options(const RunConfig& config);
std::vector<VariantSpec> compare_variant_specs(const RunConfig& config);
ClassifierTraining classifier_training(const RunConfig& config);
SweepOptions sweep_options(const RunConfig& config, int descriptor_dim);

// Deployment conditions from eval.traversals (empty: all) and
// eval.gps_dropout.
std::vector<DeploymentCondition> deployment_conditions(const RunConfig& config,
                                                       const Dataset& dataset);

// Every builder above, without touching the filesystem.
void validate(const RunConfig& config);

// Checks that depend on the dataset: referenced traversals exist, dropout
// ranges and curriculum fit the route length.
void validate_against(const RunConfig& config, const Dataset& dataset);

}  // namespace mvp
