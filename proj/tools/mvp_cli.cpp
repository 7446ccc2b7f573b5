// Command-line entry point: dataset generation, training, deployment
// evaluation, motion-precision sweeps, place-recognition evaluation and the
// full variant comparison.
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvp/checkpoint.hpp"
#include "mvp/config.hpp"
#include "mvp/harness.hpp"
#include "mvp/ppo.hpp"
#include "mvp/traversal.hpp"
#include "mvp/vpr.hpp"

namespace fs = std::filesystem;
using namespace mvp;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig config = args.config_path.empty() ? RunConfig() : RunConfig::from_file(args.config_path);
  for (const std::string& o : args.overrides) config.apply_override(o);
  validate(config);
  return config;
}

Dataset load_checked_dataset(const RunConfig& config) {
  const fs::path path = dataset_path(config);
  if (!fs::exists(path)) {
    throw ValidationError("dataset file " + path.string() +
                          " does not exist (set dataset.path or run `generate` first)");
  }
  Dataset dataset = load_dataset(path);
  validate_against(config, dataset);
  return dataset;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Checkpoint make_checkpoint(const RunConfig& config, const PolicyParams& params,
                           const VariantSpec& variant, const std::string& traversal, int updates) {
  Checkpoint ckpt;
  ckpt.params = params;
  ckpt.metadata["variant"] = variant.name;
  ckpt.metadata["motion.kind"] = std::string(to_string(variant.kind));
  ckpt.metadata["motion.sigma"] = format_double(variant.noise_sigma);
  ckpt.metadata["env.motion_input"] = std::string(to_string(variant.input));
  ckpt.metadata["env.action_set"] = config.get("env.action_set");
  ckpt.metadata["train.traversal"] = traversal;
  ckpt.metadata["seed"] = config.get("seed");
  ckpt.metadata["updates"] = std::to_string(updates);
  return ckpt;
}

std::string meta(const Checkpoint& ckpt, const std::string& key, const fs::path& path) {
  const auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) {
    throw ValidationError(path.string() + ": checkpoint lacks metadata '" + key + "'");
  }
  return it->second;
}

// Variant description stored alongside the weights.
VariantSpec checkpoint_variant(const Checkpoint& ckpt, const fs::path& path) {
  VariantSpec v;
  v.name = meta(ckpt, "variant", path);
  v.kind = parse_motion_kind(meta(ckpt, "motion.kind", path));
  v.noise_sigma = std::stod(meta(ckpt, "motion.sigma", path));
  v.input = parse_motion_input(meta(ckpt, "env.motion_input", path));
  return v;
}

void check_shape(const PolicyShape& actual, const RunConfig& config, const Dataset& dataset,
                 const fs::path& path) {
  const PolicyShape expected =
      make_policy_shape(dataset.descriptor_dim, action_count(env_config(config).action_set),
                        actual.prev_action_in_encoder, actual.encoder_units, actual.lstm_units,
                        actual.relu_encoder);
  if (actual == expected) return;
  throw ValidationError(path.string() + ": checkpoint expects input_dim " +
                        std::to_string(actual.input_dim) + " and " +
                        std::to_string(actual.n_actions) + " actions, but the dataset (D = " +
                        std::to_string(dataset.descriptor_dim) + ") and env.action_set need input_dim " +
                        std::to_string(expected.input_dim) + " and " +
                        std::to_string(expected.n_actions) + " actions");
}

void print_summary(const DeploymentReport& report) {
  for (const DeploymentRow& r : report.rows) {
    std::printf("%-12s %-40s success %.3f +- %.3f\n", r.variant.c_str(), r.traversal.c_str(), r.mean,
                r.std_dev);
  }
}

int cmd_generate(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  const Dataset dataset = generate_synthetic_dataset(synthetic_spec(config));
  const fs::path path = dataset_path(config);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(dataset, path);
  std::printf("wrote %s\n", path.string().c_str());
  std::printf("places N = %d, descriptor D = %d, conditions:", dataset.n_places(), dataset.descriptor_dim);
  for (const Traversal& t : dataset.traversals) std::printf(" %s", t.condition_id.c_str());
  std::printf("\nroute bbox [%.3f, %.3f] x [%.3f, %.3f] m\n", dataset.route_bbox.min.x(),
              dataset.route_bbox.max.x(), dataset.route_bbox.min.y(), dataset.route_bbox.max.y());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  const Dataset dataset = load_checked_dataset(config);
  TrainOptions options = train_options(config, dataset.descriptor_dim);
  const std::string traversal = config.get("train.traversal");
  VariantSpec variant{config.get("train.variant"), options.motion.kind, options.motion.noise_sigma,
                      options.env.motion_input};
  const fs::path ckpt_path = checkpoint_path(config);
  const std::string& log_key = config.get("train.log");
  const fs::path log_path = log_key.empty() ? out_dir(config) / "training_log.csv" : fs::path(log_key);
  for (const fs::path& p : {ckpt_path, log_path}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }

  options.on_update = [](const TrainingLogEntry& e) {
    if (e.update % 10 == 0 || e.update == 1) {
      std::printf("update %4d  level %d  success %.3f  rolling %.3f  entropy %.3f\n", e.update,
                  e.curriculum_level, e.success_rate, e.rolling_success, e.entropy);
      std::fflush(stdout);
    }
  };
  if (options.checkpoint_every > 0) {
    options.on_checkpoint = [&](int update, const PolicyParams& params) {
      fs::path p = ckpt_path;
      p.replace_extension(".update" + std::to_string(update) + ckpt_path.extension().string());
      save_checkpoint(make_checkpoint(config, params, variant, traversal, update), p);
    };
  }
  const TrainResult result = train(dataset, traversal, options);

  save_checkpoint(make_checkpoint(config, result.params, variant, traversal, options.ppo.total_updates),
                  ckpt_path);
  std::ostringstream log;
  write_training_log(result.log, log);
  write_text(log_path, log.str());
  const double rolling = result.log.empty() ? 0.0 : result.log.back().rolling_success;
  std::printf("final rolling success %.3f at curriculum level %d\n", rolling, result.curriculum.level);
  std::printf("wrote %s and %s\n", ckpt_path.string().c_str(), log_path.string().c_str());
  return 0;
}

int cmd_eval(const CommonArgs& args, std::vector<std::string> checkpoints, bool oracle) {
  RunConfig config = load_config(args);
  if (oracle) config.set("eval.agent", "oracle");
  const Dataset dataset = load_checked_dataset(config);
  const DeploymentOptions options = deployment_options(config);
  const std::vector<DeploymentCondition> conditions = deployment_conditions(config, dataset);
  const std::string agent = config.get("eval.agent");

  DeploymentReport report;
  if (agent == "policy") {
    if (checkpoints.empty()) checkpoints.push_back(checkpoint_path(config).string());
    std::vector<VariantSpec> variants;
    std::vector<PolicyParams> policies;
    for (const std::string& p : checkpoints) {
      Checkpoint ckpt = load_checkpoint(p);
      check_shape(ckpt.params.shape(), config, dataset, p);
      variants.push_back(checkpoint_variant(ckpt, p));
      policies.push_back(std::move(ckpt.params));
    }
    report = deploy_variants(dataset, variants, policies, conditions, options);
  } else {
    const MotionModelParams motion = motion_params(config);
    for (const DeploymentCondition& c : conditions) {
      MotionModelParams m = motion;
      if (m.kind == MotionKind::Gps) m.dropout = c.gps_dropout;
      const AgentFactory factory = [&](int it) -> std::unique_ptr<Agent> {
        if (agent == "oracle") return std::make_unique<OracleAgent>();
        return std::make_unique<RandomAgent>(
            derive_seed(options.seed, "deploy.random", static_cast<std::uint64_t>(it)));
      };
      DeploymentRow row = evaluate_success_rate(factory, dataset, c.traversal_id, m, options);
      row.variant = agent;
      row.traversal = c.label;
      report.rows.push_back(std::move(row));
    }
  }
  const auto files = emit_report(report, out_dir(config));
  print_summary(report);
  for (const fs::path& f : files) std::printf("wrote %s\n", f.string().c_str());
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& checkpoint) {
  const RunConfig config = load_config(args);
  const Dataset dataset = load_checked_dataset(config);
  const SweepOptions options = sweep_options(config, dataset.descriptor_dim);
  PolicyParams policy;
  if (!options.retrain) {
    const fs::path p = checkpoint.empty() ? checkpoint_path(config) : fs::path(checkpoint);
    Checkpoint ckpt = load_checkpoint(p);
    check_shape(ckpt.params.shape(), config, dataset, p);
    policy = std::move(ckpt.params);
  }
  const std::vector<TradeoffPoint> points = sweep_motion_precision(dataset, policy, options);
  const auto files = emit_tradeoff(points, out_dir(config));
  for (const TradeoffPoint& p : points) {
    std::printf("sigma %8.3f  rmse %8.3f m  success %.3f +- %.3f\n", p.sigma, p.rmse_m,
                p.success_rate, p.stderr_rate);
  }
  for (const fs::path& f : files) std::printf("wrote %s\n", f.string().c_str());
  return 0;
}

int cmd_vpr(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  const Dataset dataset = load_checked_dataset(config);
  const VprReport report =
      vpr_experiment(dataset, config.get("vpr.reference"), config.get_int("vpr.repetitions"),
                     classifier_training(config), config.get_int("vpr.match_tolerance"));
  for (const VprRow& r : report.rows) {
    if (!r.converged) {
      std::fprintf(stderr, "warning: classifier fit for repetition %d did not converge\n", r.repetition);
      break;
    }
  }
  std::ostringstream rows, summary;
  write_vpr_rows(report, rows);
  write_vpr_summary(report, summary);
  const fs::path dir = out_dir(config);
  write_text(dir / "vpr.csv", rows.str());
  write_text(dir / "vpr_summary.csv", summary.str());
  for (const VprSummary& s : report.summaries) {
    std::printf("%-16s AUC %.4f +- %.4f\n", s.query_id.c_str(), s.mean_auc, s.std_auc);
  }
  std::printf("wrote %s and %s\n", (dir / "vpr.csv").string().c_str(),
              (dir / "vpr_summary.csv").string().c_str());
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  const Dataset dataset = load_checked_dataset(config);
  CompareOptions options;
  options.train_traversal = config.get("train.traversal");
  options.variants = compare_variant_specs(config);
  options.conditions = deployment_conditions(config, dataset);
  options.training = train_options(config, dataset.descriptor_dim);
  options.deployment = deployment_options(config);
  const fs::path dir = out_dir(config);
  options.on_trained = [&](const VariantSpec& v, const TrainResult& r) {
    const fs::path p = dir / (v.name + ".ckpt");
    fs::create_directories(dir);
    save_checkpoint(make_checkpoint(config, r.params, v, options.train_traversal,
                                    options.training.ppo.total_updates),
                    p);
    std::printf("trained %s (final curriculum level %d), wrote %s\n", v.name.c_str(),
                r.curriculum.level, p.string().c_str());
    std::fflush(stdout);
  };
  const CompareResult result = compare_variants(dataset, options);
  const auto files = emit_report(result.report, dir);
  print_summary(result.report);
  for (const fs::path& f : files) std::printf("wrote %s\n", f.string().c_str());
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key = value configuration file");
  cmd->add_option("--set", args.overrides, "override one key, e.g. --set seed=3")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion-and-place navigation experiments"};
  app.require_subcommand(1);
  CommonArgs args;
  std::vector<std::string> checkpoints;
  std::string sweep_checkpoint;
  bool oracle = false;
  bool print_keys = false;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic multi-condition dataset");
  CLI::App* train_cmd = app.add_subcommand("train", "train a policy with PPO");
  CLI::App* eval = app.add_subcommand("eval", "deploy policies and report success rates");
  CLI::App* sweep = app.add_subcommand("sweep", "success rate against odometry precision");
  CLI::App* vpr = app.add_subcommand("vpr", "single-frame place recognition AUC per condition");
  CLI::App* compare = app.add_subcommand("compare", "train and deploy every motion variant");
  CLI::App* keys = app.add_subcommand("keys", "list configuration keys and defaults");
  for (CLI::App* cmd : {generate, train_cmd, eval, sweep, vpr, compare}) add_common(cmd, args);
  eval->add_option("--checkpoint", checkpoints, "policy checkpoint (repeatable)");
  eval->add_flag("--oracle", oracle, "deploy the step-toward-goal oracle instead of a policy");
  sweep->add_option("--checkpoint", sweep_checkpoint, "frozen policy checkpoint");
  keys->callback([&] { print_keys = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (print_keys) {
      for (const ConfigKey& k : config_keys()) {
        std::printf("%-32s %-24s %s\n", k.name.c_str(),
                    k.default_value.empty() ? "\"\"" : k.default_value.c_str(), k.help.c_str());
      }
      return 0;
    }
    if (*generate) return cmd_generate(args);
    if (*train_cmd) return cmd_train(args);
    if (*eval) return cmd_eval(args, checkpoints, oracle);
    if (*sweep) return cmd_sweep(args, sweep_checkpoint);
    if (*vpr) return cmd_vpr(args);
    if (*compare) return cmd_compare(args);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 2;
}
