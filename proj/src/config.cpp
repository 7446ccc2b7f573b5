#include "mvp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mvp/rng.hpp"

namespace mvp {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw ValidationError("config key '" + std::string(key) + "': '" + std::string(value) +
                        "' is not " + std::string(what));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text, what);
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  const double v = parse_number<double>(key, text, "a number");
  if (!std::isfinite(v)) bad_value(key, text, "a finite number");
  return v;
}

// Rethrows a module validation error with the offending key or section.
template <typename F>
auto with_context(std::string_view context, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(context) + ": " + e.what());
  }
}

void check(bool ok, std::string_view key, const std::string& message) {
  if (!ok) throw ValidationError("config key '" + std::string(key) + "': " + message);
}

bool has_traversal(const Dataset& dataset, const std::string& id) {
  return std::any_of(dataset.traversals.begin(), dataset.traversals.end(),
                     [&](const Traversal& t) { return t.condition_id == id; });
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"seed", "0", "top-level seed; every component stream derives from it"},
      {"out_dir", "out", "output directory (default from MVP_OUT_DIR when set)"},
      {"threads", "0", "0: strictly sequential and bitwise reproducible"},
      {"dataset.path", "", "dataset CSV (default <out_dir>/dataset.csv)"},

      {"generate.n_places", "100", "places per traversal"},
      {"generate.descriptor_dim", "64", "descriptor dimension"},
      {"generate.conditions", "reference:0,mild:0.2,moderate:0.8,extreme:2.0",
       "id:severity list; the first is the usual training traversal"},
      {"generate.segment_lengths", "40,30,40", "route polyline segment lengths (m)"},
      {"generate.turn_angles", "60,-90", "heading change between segments (deg)"},
      {"generate.initial_heading", "30", "heading of the first segment (deg)"},
      {"generate.place_spacing", "1", "distance between consecutive places (m)"},

      {"motion.kind", "gps", "gps, vo or ro"},
      {"motion.sigma", "default", "noise in meters, or 'default' for the kind's default"},
      {"motion.dropout", "", "GPS outage frame ranges during training, e.g. 10-20,40-45"},

      {"env.action_set", "forward_backward", "forward_backward or forward_backward_stay"},
      {"env.goal_tolerance", "0", "frames"},
      {"env.motion_input", "estimate", "estimate, zeroed or scrambled"},

      {"curriculum.levels", "3,10,30,99", "maximum goal distance per level"},
      {"curriculum.threshold", "0.9", "rolling success needed for promotion"},
      {"curriculum.window", "100", "episodes in the rolling window"},

      {"policy.encoder_units", "512", ""},
      {"policy.lstm_units", "256", ""},
      {"policy.relu_encoder", "true", "false gives an affine encoder"},
      {"policy.prev_action_in_encoder", "false", "also feed the previous action to the encoder"},

      {"ppo.gamma", "0.99", ""},
      {"ppo.gae_lambda", "0.95", ""},
      {"ppo.clip_epsilon", "0.2", ""},
      {"ppo.epochs", "4", ""},
      {"ppo.chunk_length", "8", "BPTT window"},
      {"ppo.minibatch_chunks", "32", "sequence chunks per minibatch"},
      {"ppo.value_coef", "0.5", ""},
      {"ppo.entropy_coef", "0.01", ""},
      {"ppo.learning_rate", "2.5e-4", ""},
      {"ppo.max_grad_norm", "0.5", "0 disables clipping"},
      {"ppo.normalize_advantages", "true", ""},
      {"ppo.rollout_length", "128", "steps per environment per update"},
      {"ppo.n_envs", "8", ""},
      {"ppo.updates", "200", ""},

      {"train.traversal", "reference", ""},
      {"train.variant", "policy", "name stored in the checkpoint"},
      {"train.checkpoint", "", "default <out_dir>/policy.ckpt"},
      {"train.log", "", "default <out_dir>/training_log.csv"},
      {"train.checkpoint_every", "0", "also save every k updates; 0 disables"},

      {"eval.agent", "policy", "policy, oracle or random"},
      {"eval.traversals", "", "deployment traversals (default all)"},
      {"eval.gps_dropout", "", "GPS outage ranges applied at deployment"},
      {"eval.iterations", "10", ""},
      {"eval.targets", "100", "tasks per iteration"},
      {"eval.sample_actions", "false", "sample instead of argmax"},

      {"compare.variants", "MVP-GPS,MVP-VO,MVP-RO,vision-only", ""},

      {"sweep.traversal", "", "deployment traversal (default train.traversal)"},
      {"sweep.sigmas", "0,1,3,10,30,100", "ascending odometry noise grid (m per step)"},
      {"sweep.kind", "vo", "vo or ro"},
      {"sweep.rmse_episodes", "100", ""},
      {"sweep.retrain", "false", "train one policy per sigma"},

      {"vpr.reference", "reference", ""},
      {"vpr.repetitions", "10", ""},
      {"vpr.l2", "1e-4", ""},
      {"vpr.max_iterations", "5000", ""},
      {"vpr.match_tolerance", "0", "frames"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const ConfigKey& k : config_keys()) values_[k.name] = k.default_value;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
    values_["out_dir"] = env;
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  RunConfig config;
  config.parse(in, path.string());
  return config;
}

void RunConfig::parse(std::istream& in, const std::string& source_name) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(source_name + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + std::string(key) + "'");
  it->second = std::string(trim(value));
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("unregistered config key '" + std::string(key) + "'");
  return it->second;
}

int RunConfig::get_int(std::string_view key) const {
  return parse_number<int>(key, get(key), "an integer");
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  return parse_number<std::uint64_t>(key, get(key), "a non-negative integer");
}

double RunConfig::get_double(std::string_view key) const { return parse_double(key, get(key)); }

bool RunConfig::get_bool(std::string_view key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<double> RunConfig::get_doubles(std::string_view key) const {
  std::vector<double> out;
  for (std::string_view item : split(get(key), ',')) out.push_back(parse_double(key, item));
  return out;
}

std::vector<int> RunConfig::get_ints(std::string_view key) const {
  std::vector<int> out;
  for (std::string_view item : split(get(key), ',')) {
    out.push_back(parse_number<int>(key, item, "an integer"));
  }
  return out;
}

std::vector<std::string> RunConfig::get_strings(std::string_view key) const {
  std::vector<std::string> out;
  for (std::string_view item : split(get(key), ',')) {
    if (item.empty()) bad_value(key, get(key), "a list without empty entries");
    out.emplace_back(item);
  }
  return out;
}

void RunConfig::write(std::ostream& out) const {
  for (const ConfigKey& k : config_keys()) out << k.name << " = " << get(k.name) << '\n';
}

std::uint64_t component_seed(const RunConfig& config, std::string_view component) {
  return derive_seed(config.get_u64("seed"), component);
}

std::filesystem::path out_dir(const RunConfig& config) {
  const std::string& dir = config.get("out_dir");
  check(!dir.empty(), "out_dir", "must not be empty");
  return dir;
}

std::filesystem::path dataset_path(const RunConfig& config) {
  const std::string& p = config.get("dataset.path");
  return p.empty() ? out_dir(config) / "dataset.csv" : std::filesystem::path(p);
}

std::filesystem::path checkpoint_path(const RunConfig& config) {
  const std::string& p = config.get("train.checkpoint");
  return p.empty() ? out_dir(config) / "policy.ckpt" : std::filesystem::path(p);
}

SyntheticSpec synthetic_spec(const RunConfig& config) {
  SyntheticSpec spec;
  spec.n_places = config.get_int("generate.n_places");
  spec.descriptor_dim = config.get_int("generate.descriptor_dim");
  spec.conditions.clear();
  for (std::string_view item : split(config.get("generate.conditions"), ',')) {
    const auto colon = item.find(':');
    check(colon != std::string_view::npos, "generate.conditions",
          "entry '" + std::string(item) + "' is not id:severity");
    AppearanceCondition c;
    c.id = std::string(trim(item.substr(0, colon)));
    c.severity = parse_double("generate.conditions", trim(item.substr(colon + 1)));
    check(c.severity >= 0.0, "generate.conditions",
          "severity of '" + c.id + "' must be >= 0, got " + std::string(trim(item.substr(colon + 1))));
    spec.conditions.push_back(c);
  }
  spec.route.segment_lengths = config.get_doubles("generate.segment_lengths");
  spec.route.turn_angles_deg = config.get_doubles("generate.turn_angles");
  spec.route.initial_heading_deg = config.get_double("generate.initial_heading");
  spec.place_spacing = config.get_double("generate.place_spacing");
  spec.seed = component_seed(config, "generate");
  with_context("generate", [&] { validate(spec); });
  return spec;
}

MotionModelParams motion_params(const RunConfig& config) {
  MotionModelParams m;
  m.kind = with_context("config key 'motion.kind'",
                        [&] { return parse_motion_kind(config.get("motion.kind")); });
  const std::string& sigma = config.get("motion.sigma");
  m.noise_sigma = sigma == "default" ? default_sigma(m.kind) : config.get_double("motion.sigma");
  check(m.noise_sigma >= 0.0, "motion.sigma", "must be >= 0");
  m.dropout = with_context("config key 'motion.dropout'",
                           [&] { return parse_index_ranges(config.get("motion.dropout")); });
  check(m.dropout.empty() || m.kind == MotionKind::Gps, "motion.dropout", "only valid for gps");
  return m;
}

EnvConfig env_config(const RunConfig& config) {
  EnvConfig e;
  e.action_set = with_context("config key 'env.action_set'",
                              [&] { return parse_action_set(config.get("env.action_set")); });
  e.goal_tolerance = config.get_int("env.goal_tolerance");
  check(e.goal_tolerance >= 0, "env.goal_tolerance", "must be >= 0");
  e.motion_input = with_context("config key 'env.motion_input'",
                                [&] { return parse_motion_input(config.get("env.motion_input")); });
  return e;
}

CurriculumState curriculum_config(const RunConfig& config) {
  CurriculumState c;
  c.max_goal_distance = config.get_ints("curriculum.levels");
  check(!c.max_goal_distance.empty(), "curriculum.levels", "needs at least one level");
  c.promotion_threshold = config.get_double("curriculum.threshold");
  c.window = config.get_int("curriculum.window");
  // The route-length requirement is checked against the dataset later.
  with_context("curriculum", [&] { validate(c, 1); });
  return c;
}

PolicyShape policy_shape(const RunConfig& config, int descriptor_dim) {
  const EnvConfig env = env_config(config);
  const int encoder = config.get_int("policy.encoder_units");
  const int lstm = config.get_int("policy.lstm_units");
  check(encoder >= 1, "policy.encoder_units", "must be >= 1");
  check(lstm >= 1, "policy.lstm_units", "must be >= 1");
  return make_policy_shape(descriptor_dim, action_count(env.action_set),
                           config.get_bool("policy.prev_action_in_encoder"), encoder, lstm,
                           config.get_bool("policy.relu_encoder"));
}

PpoConfig ppo_config(const RunConfig& config) {
  PpoConfig p;
  p.gamma = config.get_double("ppo.gamma");
  p.gae_lambda = config.get_double("ppo.gae_lambda");
  p.clip_epsilon = config.get_double("ppo.clip_epsilon");
  p.epochs = config.get_int("ppo.epochs");
  p.chunk_length = config.get_int("ppo.chunk_length");
  p.minibatch_chunks = config.get_int("ppo.minibatch_chunks");
  p.value_coef = config.get_double("ppo.value_coef");
  p.entropy_coef = config.get_double("ppo.entropy_coef");
  p.learning_rate = config.get_double("ppo.learning_rate");
  p.max_grad_norm = config.get_double("ppo.max_grad_norm");
  p.normalize_advantages = config.get_bool("ppo.normalize_advantages");
  p.rollout_length = config.get_int("ppo.rollout_length");
  p.n_envs = config.get_int("ppo.n_envs");
  p.total_updates = config.get_int("ppo.updates");
  p.seed = component_seed(config, "ppo");
  p.threads = config.get_int("threads");
  validate(p);
  return p;
}

TrainOptions train_options(const RunConfig& config, int descriptor_dim) {
  TrainOptions t;
  t.shape = policy_shape(config, descriptor_dim);
  t.ppo = ppo_config(config);
  t.curriculum = curriculum_config(config);
  t.env = env_config(config);
  t.motion = motion_params(config);
  t.checkpoint_every = config.get_int("train.checkpoint_every");
  check(t.checkpoint_every >= 0, "train.checkpoint_every", "must be >= 0");
  check(!config.get("train.traversal").empty(), "train.traversal", "must not be empty");
  check(!config.get("train.variant").empty() &&
            config.get("train.variant").find_first_of(",\n") == std::string::npos,
        "train.variant", "must be a non-empty name without commas");
  return t;
}

DeploymentOptions deployment_options(const RunConfig& config) {
  DeploymentOptions d;
  d.iterations = config.get_int("eval.iterations");
  d.targets = config.get_int("eval.targets");
  d.seed = component_seed(config, "eval");
  d.env = env_config(config);
  d.sample_actions = config.get_bool("eval.sample_actions");
  d.threads = config.get_int("threads");
  with_context("eval", [&] { validate(d); });
  const std::string& agent = config.get("eval.agent");
  check(agent == "policy" || agent == "oracle" || agent == "random", "eval.agent",
        "must be policy, oracle or random");
  with_context("config key 'eval.gps_dropout'",
               [&] { return parse_index_ranges(config.get("eval.gps_dropout")); });
  return d;
}

std::vector<VariantSpec> compare_variant_specs(const RunConfig& config) {
  const std::vector<VariantSpec> known = standard_variants();
  std::vector<VariantSpec> out;
  for (const std::string& name : config.get_strings("compare.variants")) {
    const auto it = std::find_if(known.begin(), known.end(),
                                 [&](const VariantSpec& v) { return v.name == name; });
    check(it != known.end(), "compare.variants",
          "unknown variant '" + name + "' (expected MVP-GPS, MVP-VO, MVP-RO or vision-only)");
    out.push_back(*it);
  }
  check(!out.empty(), "compare.variants", "must name at least one variant");
  return out;
}

ClassifierTraining classifier_training(const RunConfig& config) {
  ClassifierTraining c;
  c.l2 = config.get_double("vpr.l2");
  c.max_iterations = config.get_int("vpr.max_iterations");
  c.seed = component_seed(config, "vpr");
  check(c.l2 >= 0.0, "vpr.l2", "must be >= 0");
  check(c.max_iterations >= 0, "vpr.max_iterations", "must be >= 0");
  check(config.get_int("vpr.repetitions") >= 1, "vpr.repetitions", "must be >= 1");
  check(config.get_int("vpr.match_tolerance") >= 0, "vpr.match_tolerance", "must be >= 0");
  return c;
}

SweepOptions sweep_options(const RunConfig& config, int descriptor_dim) {
  SweepOptions s;
  s.traversal_id = config.get("sweep.traversal");
  if (s.traversal_id.empty()) s.traversal_id = config.get("train.traversal");
  s.sigmas = config.get_doubles("sweep.sigmas");
  s.kind = with_context("config key 'sweep.kind'",
                        [&] { return parse_motion_kind(config.get("sweep.kind")); });
  s.rmse_episodes = config.get_int("sweep.rmse_episodes");
  s.retrain = config.get_bool("sweep.retrain");
  s.train_traversal = config.get("train.traversal");
  s.training = train_options(config, descriptor_dim);
  s.deployment = deployment_options(config);
  with_context("sweep", [&] { validate(s); });
  return s;
}

std::vector<DeploymentCondition> deployment_conditions(const RunConfig& config,
                                                       const Dataset& dataset) {
  const std::vector<IndexRange> dropout = parse_index_ranges(config.get("eval.gps_dropout"));
  std::vector<std::string> ids = config.get_strings("eval.traversals");
  if (ids.empty()) {
    for (const Traversal& t : dataset.traversals) ids.push_back(t.condition_id);
  }
  std::vector<DeploymentCondition> out;
  for (const std::string& id : ids) {
    check(has_traversal(dataset, id), "eval.traversals", "unknown traversal '" + id + "'");
    std::string label = id;
    if (!dropout.empty()) label += " (GPS outage " + format_index_ranges(dropout) + ")";
    out.push_back({label, id, dropout});
  }
  return out;
}

void validate(const RunConfig& config) {
  out_dir(config);
  check(config.get_int("threads") >= 0, "threads", "must be >= 0");
  synthetic_spec(config);
  train_options(config, config.get_int("generate.descriptor_dim"));
  deployment_options(config);
  compare_variant_specs(config);
  classifier_training(config);
  sweep_options(config, config.get_int("generate.descriptor_dim"));
}

void validate_against(const RunConfig& config, const Dataset& dataset) {
  const int n = dataset.n_places();
  const auto has = [&](const std::string& id) { return has_traversal(dataset, id); };
  check(has(config.get("train.traversal")), "train.traversal",
        "unknown traversal '" + config.get("train.traversal") + "'");
  check(has(config.get("vpr.reference")), "vpr.reference",
        "unknown traversal '" + config.get("vpr.reference") + "'");
  const std::string& sweep = config.get("sweep.traversal");
  check(sweep.empty() || has(sweep), "sweep.traversal", "unknown traversal '" + sweep + "'");
  for (const std::string& id : config.get_strings("eval.traversals")) {
    check(has(id), "eval.traversals", "unknown traversal '" + id + "'");
  }
  with_context("curriculum", [&] { validate(curriculum_config(config), n); });
  with_context("config key 'motion.dropout'", [&] { validate(motion_params(config), n); });
  MotionModelParams gps;
  gps.dropout = parse_index_ranges(config.get("eval.gps_dropout"));
  with_context("config key 'eval.gps_dropout'", [&] { validate(gps, n); });
  const int tol = env_config(config).goal_tolerance;
  check(tol + 1 <= n - 1, "env.goal_tolerance",
        "leaves no valid goal on a route of " + std::to_string(n) + " places");
}

}  // namespace mvp
