#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvp/env.hpp"
#include "mvp/policy.hpp"
#include "mvp/ppo.hpp"

namespace mvp {

// Chooses actions for one environment, episode by episode.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode(const NavigationEnv& env) { (void)env; }
  virtual int act(const Observation& observation, const NavigationEnv& env) = 0;
};

// Recurrent network policy; argmax by default, sampled on request. Holds a
// reference to the parameters and never modifies them.
class PolicyAgent : public Agent {
 public:
  explicit PolicyAgent(const PolicyParams& params, bool sample = false, std::uint64_t seed = 0);
  void begin_episode(const NavigationEnv& env) override;
  int act(const Observation& observation, const NavigationEnv& env) override;

 private:
  const PolicyParams& params_;
  bool sample_;
  Rng rng_;
  RecurrentState state_;
};

// Steps toward the goal using the true place index.
class OracleAgent : public Agent {
 public:
  int act(const Observation& observation, const NavigationEnv& env) override;
};

// Uniform over the environment's action set.
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(make_rng(seed, "agent.random")) {}
  int act(const Observation& observation, const NavigationEnv& env) override;

 private:
  Rng rng_;
};

// Builds a fresh agent for one deployment iteration.
using AgentFactory = std::function<std::unique_ptr<Agent>(int iteration)>;

struct DeploymentOptions {
  int iterations = 10;
  int targets = 100;       // tasks per iteration
  std::uint64_t seed = 0;
  EnvConfig env;
  bool sample_actions = false;
  int threads = 0;         // > 0: iterations evaluated concurrently
};

void validate(const DeploymentOptions& options);

struct DeploymentRow {
  std::string variant;
  std::string traversal;   // deployment condition label
  int targets = 0;         // per iteration
  std::vector<int> successes;  // per iteration
  double mean = 0.0;       // mean per-iteration success rate
  double std_dev = 0.0;    // sample standard deviation across iterations
  int max_episode_length = 0;
  int step_cap = 0;

  int iterations() const { return static_cast<int>(successes.size()); }
  double stderr_mean() const;
};

struct DeploymentReport {
  std::vector<DeploymentRow> rows;
};

// Runs `iterations` x `targets` episodes. Tasks are drawn at the full route
// range with |goal - start| > goal_tolerance; iteration i uses the same tasks
// and environment seed for every agent given the same options.seed. Throws
// std::logic_error if an episode exceeds the step cap or its total reward is
// not 0 or 1.
DeploymentRow evaluate_success_rate(const AgentFactory& make_agent, const Dataset& dataset,
                                    std::string_view traversal_id,
                                    const MotionModelParams& motion,
                                    const DeploymentOptions& options);

DeploymentRow evaluate_success_rate(const PolicyParams& params, const Dataset& dataset,
                                    std::string_view traversal_id,
                                    const MotionModelParams& motion,
                                    const DeploymentOptions& options);

struct VariantSpec {
  std::string name;
  MotionKind kind = MotionKind::Gps;
  double noise_sigma = 0.0;
  MotionInput input = MotionInput::Estimate;
};

// MVP-GPS, MVP-VO, MVP-RO at their default noise, and vision-only (motion
// feature zeroed, goal kept).
std::vector<VariantSpec> standard_variants();

// One deployment column: a traversal plus the GPS outages applied there.
struct DeploymentCondition {
  std::string label;
  std::string traversal_id;
  std::vector<IndexRange> gps_dropout;
};

// Every traversal with full GPS.
std::vector<DeploymentCondition> all_traversal_conditions(const Dataset& dataset);

struct CompareOptions {
  std::string train_traversal;
  std::vector<VariantSpec> variants = standard_variants();
  std::vector<DeploymentCondition> conditions;  // empty: all_traversal_conditions
  TrainOptions training;  // motion and env.motion_input are set per variant
  DeploymentOptions deployment;
  std::function<void(const VariantSpec&, const TrainResult&)> on_trained;
};

struct CompareResult {
  DeploymentReport report;  // variant-major, conditions in order
  std::vector<PolicyParams> policies;
};

// Trains every variant with the same seeds and budget on the training
// traversal, then deploys each on every condition. GPS outages only affect
// GPS-based variants.
CompareResult compare_variants(const Dataset& dataset, const CompareOptions& options);

// Deploys already trained policies, one per variant.
DeploymentReport deploy_variants(const Dataset& dataset, std::span<const VariantSpec> variants,
                                 std::span<const PolicyParams> policies,
                                 std::span<const DeploymentCondition> conditions,
                                 const DeploymentOptions& options);

struct TradeoffPoint {
  double sigma = 0.0;
  double rmse_m = 0.0;
  double success_rate = 0.0;
  double stderr_rate = 0.0;  // standard error of the mean over iterations
};

struct SweepOptions {
  std::string traversal_id;          // deployment traversal
  std::vector<double> sigmas{0.0, 1.0, 3.0, 10.0, 30.0, 100.0};  // up to route scale
  MotionKind kind = MotionKind::Vo;
  int rmse_episodes = 100;           // oracle-driven episodes for the RMSE
  bool retrain = false;              // train one policy per sigma
  std::string train_traversal;       // used when retrain
  TrainOptions training;             // used when retrain; motion sigma replaced
  DeploymentOptions deployment;
};

void validate(const SweepOptions& options);

// Per sigma: pooled trajectory RMSE of the odometry model over oracle-driven
// full-range episodes, and the success rate of `policy` deployed with that
// sigma (or of a policy retrained at it). Every sigma sees the same tasks.
std::vector<TradeoffPoint> sweep_motion_precision(const Dataset& dataset,
                                                  const PolicyParams& policy,
                                                  const SweepOptions& options);

// Pooled RMSE (meters) of the motion model over oracle-driven episodes.
double measure_trajectory_rmse(const Dataset& dataset, std::string_view traversal_id,
                               const MotionModelParams& motion, int episodes,
                               const EnvConfig& env, std::uint64_t seed);

// Rank correlation with average ranks for ties. Constant inputs give 0.
double spearman_correlation(std::span<const double> a, std::span<const double> b);

// `variant,traversal,iteration,successes,targets,success_rate`: one row per
// iteration, then one summary row per (variant, traversal) with iteration
// `all`.
void write_deployment_csv(const DeploymentReport& report, std::ostream& out);
// `variant,traversal,iterations,targets,mean_success_rate,std_success_rate,stderr`
void write_deployment_summary_csv(const DeploymentReport& report, std::ostream& out);
// `sigma,rmse_m,success_rate,stderr`
void write_tradeoff_csv(std::span<const TradeoffPoint> points, std::ostream& out);

std::string success_by_condition_svg(const DeploymentReport& report);
std::string tradeoff_curve_svg(std::span<const TradeoffPoint> points);

// Writes deployment.csv, deployment_summary.csv and success_by_condition.svg.
// An empty or inconsistent report is rejected before any file is written.
std::vector<std::filesystem::path> emit_report(const DeploymentReport& report,
                                               const std::filesystem::path& out_dir);
// Writes tradeoff.csv and tradeoff_curve.svg.
std::vector<std::filesystem::path> emit_tradeoff(std::span<const TradeoffPoint> points,
                                                 const std::filesystem::path& out_dir);

}  // namespace mvp
