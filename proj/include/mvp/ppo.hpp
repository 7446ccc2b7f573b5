#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mvp/env.hpp"
#include "mvp/policy.hpp"

namespace mvp {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs = 4;
  int chunk_length = 8;        // BPTT window of one recurrent sequence chunk
  int minibatch_chunks = 32;   // chunks per minibatch
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 2.5e-4;
  double max_grad_norm = 0.5;  // global-norm clip; 0 disables
  bool normalize_advantages = true;
  int rollout_length = 128;    // steps per environment per update
  int n_envs = 8;
  int total_updates = 200;
  std::uint64_t seed = 0;
  int threads = 0;             // 0: strictly sequential collection
};

void validate(const PpoConfig& config);

// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  // params -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  double learning_rate() const { return learning_rate_; }
  long steps() const { return steps_; }

 private:
  double learning_rate_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  long steps_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

struct EpisodeSummary {
  int env = 0;
  int end_step = 0;  // rollout step on which the episode ended
  int length = 0;
  double reward = 0.0;
  bool success = false;
};

// Per-step records of n_envs parallel environments. Step t of env e lives
// in column / element e * length + t.
struct RolloutBuffer {
  int n_envs = 0;
  int length = 0;
  Eigen::MatrixXd inputs;        // input_dim x steps
  Eigen::MatrixXd prev_actions;  // n_actions x steps
  Eigen::MatrixXd hidden;        // lstm_units x steps, state entering the step
  Eigen::MatrixXd cell;
  std::vector<int> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> dones;
  std::vector<std::uint8_t> episode_starts;
  Eigen::VectorXd bootstrap_values;  // per env; 0 when its last step ended an episode
  std::vector<EpisodeSummary> episodes;  // completed, ordered by (end_step, env)

  int size() const { return n_envs * length; }
  int index(int env, int t) const { return env * length + t; }
};

void validate(const RolloutBuffer& buffer);

// One environment plus its random streams and in-flight episode.
struct RolloutWorker {
  RolloutWorker(const Dataset& dataset, std::string_view traversal_id,
                const MotionModelParams& motion, const EnvConfig& env_config,
                std::uint64_t seed, int index);

  NavigationEnv env;
  Rng task_rng;
  Rng action_rng;
  Observation observation;
  RecurrentState state;
  bool needs_reset = true;
  bool episode_start = true;
  int episode_length = 0;
  double episode_reward = 0.0;
};

std::vector<RolloutWorker> make_workers(const Dataset& dataset, std::string_view traversal_id,
                                        const MotionModelParams& motion,
                                        const EnvConfig& env_config, int n_envs,
                                        std::uint64_t seed);

// Overrides the sampled action (the log-probability is still that of the
// policy). Used for oracle-driven collection.
using ForcedAction = std::function<int(const NavigationEnv&)>;

// Steps every worker `length` times with actions sampled from the policy.
// Finished episodes are reset with tasks drawn from `curriculum`, and the
// recurrent state is zeroed at every episode start. With threads > 0 the
// workers are split into that many groups collected concurrently; each group
// is a smaller matrix batch, so floats agree with sequential collection only
// to rounding. Repeated runs with the same thread count are bitwise equal.
RolloutBuffer collect_rollouts(std::span<RolloutWorker> workers, const PolicyParams& params,
                               int length, const CurriculumState& curriculum,
                               const ForcedAction& forced = {}, int threads = 0);

struct Advantages {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// Generalized advantage estimation over one environment's sequence:
//   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
//   A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// with V_T = bootstrap. Writes advantages; returns are A_t + V_t.
void generalized_advantages(std::span<const double> rewards, std::span<const double> values,
                            std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                            double lambda, std::span<double> advantages);

Advantages compute_returns_and_advantages(const RolloutBuffer& buffer, double gamma,
                                          double lambda);

// Zero mean, unit variance (no-op for fewer than two entries).
void normalize_advantages(Eigen::VectorXd& advantages);

// A contiguous run of chunk_length steps of one environment.
struct Chunk {
  int env = 0;
  int start = 0;
};

std::vector<Chunk> make_chunks(const RolloutBuffer& buffer, int chunk_length);

// Chunks replayed in lock step, with per-step targets as T x B matrices.
struct Minibatch {
  SequenceBatch batch;
  Eigen::MatrixXi actions;
  Eigen::MatrixXd old_log_probs;
  Eigen::MatrixXd advantages;
  Eigen::MatrixXd returns;
};

Minibatch make_minibatch(const RolloutBuffer& buffer, const Eigen::VectorXd& advantages,
                         const Eigen::VectorXd& returns, std::span<const Chunk> chunks,
                         int chunk_length);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double total_loss = 0.0;
};

struct LossAndGradient {
  UpdateStats stats;
  PolicyParams gradient;
};

// Clipped surrogate, value and entropy terms averaged over the M samples of
// the minibatch:
//   L = -mean(min(r A, clip(r, 1 - eps, 1 + eps) A))
//       + value_coef * mean((V - R)^2) - entropy_coef * mean(H)
LossAndGradient ppo_loss(const PolicyParams& params, const Minibatch& minibatch,
                         const PpoConfig& config, bool with_gradient = true);

// `epochs` passes over shuffled chunk minibatches, one optimizer step per
// minibatch. Returns statistics averaged over all minibatches.
UpdateStats ppo_update(PolicyParams& params, Adam& optimizer, const RolloutBuffer& buffer,
                       const Advantages& advantages, const PpoConfig& config, Rng& rng);

struct TrainingLogEntry {
  int update = 0;
  int episodes = 0;
  double success_rate = 0.0;  // over episodes finished during this update
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int curriculum_level = 1;   // level used while collecting this update
  double rolling_success = 0.0;  // over the curriculum window, before any promotion
};

struct TrainOptions {
  PolicyShape shape;
  PpoConfig ppo;
  CurriculumState curriculum;
  EnvConfig env;
  MotionModelParams motion;
  int checkpoint_every = 0;
  std::function<void(int update, const PolicyParams&)> on_checkpoint;
  std::function<void(const TrainingLogEntry&)> on_update;
};

struct TrainResult {
  PolicyParams params;
  std::vector<TrainingLogEntry> log;
  CurriculumState curriculum;
};

// Alternates collection and updates for ppo.total_updates iterations. After
// each update the curriculum sees the last `window` episode outcomes; on a
// promotion the window restarts.
TrainResult train(const Dataset& dataset, std::string_view traversal_id,
                  const TrainOptions& options);

// `update,episodes,success_rate,rolling_success,policy_loss,value_loss,entropy,clip_fraction,
// curriculum_level`
void write_training_log(std::span<const TrainingLogEntry> log, std::ostream& out);

}  // namespace mvp
