#include "mvp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace mvp {

void validate(const PpoConfig& c) {
  require(c.gamma > 0.0 && c.gamma <= 1.0, "ppo.gamma must be in (0, 1]");
  require(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0, "ppo.gae_lambda must be in [0, 1]");
  require(c.clip_epsilon > 0.0, "ppo.clip_epsilon must be > 0");
  require(c.epochs >= 0, "ppo.epochs must be >= 0");
  require(c.chunk_length >= 1, "ppo.chunk_length must be >= 1");
  require(c.minibatch_chunks >= 1, "ppo.minibatch_chunks must be >= 1");
  require(c.value_coef >= 0.0, "ppo.value_coef must be >= 0");
  require(c.entropy_coef >= 0.0, "ppo.entropy_coef must be >= 0");
  require(c.learning_rate > 0.0, "ppo.learning_rate must be > 0");
  require(c.max_grad_norm >= 0.0, "ppo.max_grad_norm must be >= 0");
  require(c.rollout_length >= 1, "ppo.rollout_length must be >= 1");
  require(c.rollout_length % c.chunk_length == 0,
          "ppo.rollout_length must be a multiple of ppo.chunk_length");
  require(c.n_envs >= 1, "ppo.n_envs must be >= 1");
  require(c.total_updates >= 0, "ppo.total_updates must be >= 0");
  require(c.threads >= 0, "threads must be >= 0");
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -= learning_rate_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

void validate(const RolloutBuffer& b) {
  const auto n = static_cast<std::size_t>(b.size());
  require(b.inputs.cols() == b.size() && b.prev_actions.cols() == b.size() &&
              b.hidden.cols() == b.size() && b.cell.cols() == b.size() &&
              b.actions.size() == n && static_cast<std::size_t>(b.log_probs.size()) == n &&
              static_cast<std::size_t>(b.values.size()) == n &&
              static_cast<std::size_t>(b.rewards.size()) == n && b.dones.size() == n &&
              b.episode_starts.size() == n && b.bootstrap_values.size() == b.n_envs,
          "rollout buffer: inconsistent sequence lengths");
  require(b.log_probs.allFinite(), "rollout buffer: non-finite log-probabilities");
  for (std::size_t i = 0; i < n; ++i) {
    require(b.rewards(static_cast<Eigen::Index>(i)) == 0.0 || b.dones[i],
            "rollout buffer: reward on a non-terminal step");
  }
}

RolloutWorker::RolloutWorker(const Dataset& dataset, std::string_view traversal_id,
                             const MotionModelParams& motion, const EnvConfig& env_config,
                             std::uint64_t seed, int index)
    : env(dataset, traversal_id, motion, env_config,
          derive_seed(seed, "worker.env", static_cast<std::uint64_t>(index))),
      task_rng(make_rng(seed, "worker.task", static_cast<std::uint64_t>(index))),
      action_rng(make_rng(seed, "worker.action", static_cast<std::uint64_t>(index))) {}

std::vector<RolloutWorker> make_workers(const Dataset& dataset, std::string_view traversal_id,
                                        const MotionModelParams& motion,
                                        const EnvConfig& env_config, int n_envs,
                                        std::uint64_t seed) {
  std::vector<RolloutWorker> workers;
  workers.reserve(static_cast<std::size_t>(n_envs));
  for (int i = 0; i < n_envs; ++i) workers.emplace_back(dataset, traversal_id, motion, env_config, seed, i);
  return workers;
}

namespace {

void check_protocol(const RolloutWorker& w) {
  if (w.episode_length > w.env.n_places() - 1) {
    throw std::logic_error("episode exceeded the step cap");
  }
  if (w.episode_reward != 0.0 && w.episode_reward != 1.0) {
    throw std::logic_error("episode reward outside {0, 1}");
  }
}

void load_batch_column(SequenceBatch& batch, Eigen::Index col, const RolloutWorker& w,
                       const PolicyShape& shape) {
  batch.inputs[0].col(col) = encode_observation(w.observation, shape);
  batch.prev_actions[0].col(col) = w.observation.prev_action;
  batch.h0.col(col) = w.state.hidden;
  batch.c0.col(col) = w.state.cell;
}

SequenceBatch single_step_batch(const PolicyShape& s, Eigen::Index width) {
  SequenceBatch batch;
  batch.inputs.assign(1, Eigen::MatrixXd(s.input_dim, width));
  batch.prev_actions.assign(1, Eigen::MatrixXd(s.n_actions, width));
  batch.carry.assign(1, Eigen::RowVectorXd::Ones(width));
  batch.h0.resize(s.lstm_units, width);
  batch.c0.resize(s.lstm_units, width);
  return batch;
}

void collect_group(std::span<RolloutWorker> group, int env_offset, const PolicyParams& params,
                   int length, const CurriculumState& curriculum, const ForcedAction& forced,
                   RolloutBuffer& buffer, std::vector<EpisodeSummary>& episodes) {
  const PolicyShape& shape = params.shape();
  const auto width = static_cast<Eigen::Index>(group.size());
  SequenceBatch batch = single_step_batch(shape, width);

  for (int t = 0; t < length; ++t) {
    for (Eigen::Index i = 0; i < width; ++i) {
      RolloutWorker& w = group[static_cast<std::size_t>(i)];
      if (w.needs_reset) {
        const int min_distance = w.env.config().goal_tolerance + 1;
        const Task task = sample_task(w.task_rng, curriculum, w.env.n_places(), min_distance);
        w.observation = w.env.reset(task);
        w.state = RecurrentState::zeros(shape);
        w.needs_reset = false;
        w.episode_start = true;
        w.episode_length = 0;
        w.episode_reward = 0.0;
      }
      load_batch_column(batch, i, w, shape);
    }
    const SequenceTrace trace = forward_sequence(params, batch);
    const auto& st = trace.steps.front();

    for (Eigen::Index i = 0; i < width; ++i) {
      RolloutWorker& w = group[static_cast<std::size_t>(i)];
      const int env_index = env_offset + static_cast<int>(i);
      const int k = buffer.index(env_index, t);
      const int action = forced ? forced(w.env) : sample_action(st.probs.col(i), w.action_rng);

      buffer.inputs.col(k) = batch.inputs[0].col(i);
      buffer.prev_actions.col(k) = batch.prev_actions[0].col(i);
      buffer.hidden.col(k) = batch.h0.col(i);
      buffer.cell.col(k) = batch.c0.col(i);
      buffer.actions[static_cast<std::size_t>(k)] = action;
      buffer.log_probs(k) = std::log(st.probs(action, i));
      buffer.values(k) = st.values(i);
      buffer.episode_starts[static_cast<std::size_t>(k)] = w.episode_start ? 1 : 0;

      StepResult result = w.env.step(action);
      buffer.rewards(k) = result.reward;
      buffer.dones[static_cast<std::size_t>(k)] = result.done ? 1 : 0;
      ++w.episode_length;
      w.episode_reward += result.reward;
      check_protocol(w);
      if (result.done) {
        episodes.push_back({env_index, t, w.episode_length, w.episode_reward, w.env.state().success});
        w.needs_reset = true;
      }
      w.observation = std::move(result.observation);
      w.state.hidden = st.hidden.col(i);
      w.state.cell = st.cell.col(i);
      w.episode_start = false;
    }
  }

  for (Eigen::Index i = 0; i < width; ++i) load_batch_column(batch, i, group[static_cast<std::size_t>(i)], shape);
  const SequenceTrace trace = forward_sequence(params, batch);
  for (Eigen::Index i = 0; i < width; ++i) {
    const bool ended = group[static_cast<std::size_t>(i)].needs_reset;
    buffer.bootstrap_values(env_offset + i) = ended ? 0.0 : trace.steps.front().values(i);
  }
}

}  // namespace

RolloutBuffer collect_rollouts(std::span<RolloutWorker> workers, const PolicyParams& params,
                               int length, const CurriculumState& curriculum,
                               const ForcedAction& forced, int threads) {
  require(!workers.empty(), "collect_rollouts: no environments");
  require(length >= 1, "collect_rollouts: length must be >= 1");
  const PolicyShape& s = params.shape();
  RolloutBuffer buffer;
  buffer.n_envs = static_cast<int>(workers.size());
  buffer.length = length;
  const Eigen::Index n = buffer.size();
  buffer.inputs.resize(s.input_dim, n);
  buffer.prev_actions.resize(s.n_actions, n);
  buffer.hidden.resize(s.lstm_units, n);
  buffer.cell.resize(s.lstm_units, n);
  buffer.actions.assign(static_cast<std::size_t>(n), 0);
  buffer.log_probs.resize(n);
  buffer.values.resize(n);
  buffer.rewards.resize(n);
  buffer.dones.assign(static_cast<std::size_t>(n), 0);
  buffer.episode_starts.assign(static_cast<std::size_t>(n), 0);
  buffer.bootstrap_values.resize(buffer.n_envs);

  const int groups = threads <= 0 ? 1 : std::min(threads, buffer.n_envs);
  std::vector<std::vector<EpisodeSummary>> episodes(static_cast<std::size_t>(groups));
  std::vector<std::pair<int, int>> ranges;
  for (int g = 0; g < groups; ++g) {
    const int lo = g * buffer.n_envs / groups;
    const int hi = (g + 1) * buffer.n_envs / groups;
    ranges.emplace_back(lo, hi);
  }
  if (groups == 1) {
    collect_group(workers, 0, params, length, curriculum, forced, buffer, episodes[0]);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(groups));
    std::vector<std::thread> pool;
    for (int g = 0; g < groups; ++g) {
      pool.emplace_back([&, g] {
        try {
          const auto [lo, hi] = ranges[static_cast<std::size_t>(g)];
          collect_group(workers.subspan(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo)),
                        lo, params, length, curriculum, forced, buffer,
                        episodes[static_cast<std::size_t>(g)]);
        } catch (...) {
          errors[static_cast<std::size_t>(g)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (auto& part : episodes) {
    buffer.episodes.insert(buffer.episodes.end(), part.begin(), part.end());
  }
  std::stable_sort(buffer.episodes.begin(), buffer.episodes.end(),
                   [](const EpisodeSummary& a, const EpisodeSummary& b) {
                     return a.end_step != b.end_step ? a.end_step < b.end_step : a.env < b.env;
                   });
  return buffer;
}

void generalized_advantages(std::span<const double> rewards, std::span<const double> values,
                            std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                            double lambda, std::span<double> advantages) {
  const std::size_t n = rewards.size();
  require(values.size() == n && dones.size() == n && advantages.size() == n,
          "generalized_advantages: length mismatch");
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t k = n; k-- > 0;) {
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * not_done - values[k];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    advantages[k] = next_adv;
    next_value = values[k];
  }
}

Advantages compute_returns_and_advantages(const RolloutBuffer& buffer, double gamma,
                                          double lambda) {
  validate(buffer);
  Advantages out;
  out.advantages.resize(buffer.size());
  const auto len = static_cast<std::size_t>(buffer.length);
  for (int e = 0; e < buffer.n_envs; ++e) {
    const auto off = static_cast<std::size_t>(buffer.index(e, 0));
    generalized_advantages(
        std::span<const double>(buffer.rewards.data() + off, len),
        std::span<const double>(buffer.values.data() + off, len),
        std::span<const std::uint8_t>(buffer.dones.data() + off, len),
        buffer.bootstrap_values(e), gamma, lambda,
        std::span<double>(out.advantages.data() + off, len));
  }
  out.returns = out.advantages + buffer.values;
  return out;
}

void normalize_advantages(Eigen::VectorXd& a) {
  if (a.size() < 2) return;
  const double mean = a.mean();
  const double var = (a.array() - mean).square().sum() / static_cast<double>(a.size());
  a = (a.array() - mean) / (std::sqrt(var) + 1e-8);
}

std::vector<Chunk> make_chunks(const RolloutBuffer& buffer, int chunk_length) {
  require(chunk_length >= 1 && buffer.length % chunk_length == 0,
          "make_chunks: rollout length must be a multiple of the chunk length");
  std::vector<Chunk> chunks;
  for (int e = 0; e < buffer.n_envs; ++e) {
    for (int t = 0; t < buffer.length; t += chunk_length) chunks.push_back({e, t});
  }
  return chunks;
}

Minibatch make_minibatch(const RolloutBuffer& buffer, const Eigen::VectorXd& advantages,
                         const Eigen::VectorXd& returns, std::span<const Chunk> chunks,
                         int chunk_length) {
  const auto b = static_cast<Eigen::Index>(chunks.size());
  const Eigen::Index in = buffer.inputs.rows(), a = buffer.prev_actions.rows();
  const Eigen::Index h = buffer.hidden.rows();
  Minibatch mb;
  mb.batch.inputs.assign(static_cast<std::size_t>(chunk_length), Eigen::MatrixXd(in, b));
  mb.batch.prev_actions.assign(static_cast<std::size_t>(chunk_length), Eigen::MatrixXd(a, b));
  mb.batch.carry.assign(static_cast<std::size_t>(chunk_length), Eigen::RowVectorXd(b));
  mb.batch.h0.resize(h, b);
  mb.batch.c0.resize(h, b);
  mb.actions.resize(chunk_length, b);
  mb.old_log_probs.resize(chunk_length, b);
  mb.advantages.resize(chunk_length, b);
  mb.returns.resize(chunk_length, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Chunk& c = chunks[static_cast<std::size_t>(j)];
    require(c.start + chunk_length <= buffer.length, "make_minibatch: chunk exceeds rollout");
    const int first = buffer.index(c.env, c.start);
    mb.batch.h0.col(j) = buffer.hidden.col(first);
    mb.batch.c0.col(j) = buffer.cell.col(first);
    for (int t = 0; t < chunk_length; ++t) {
      const int k = first + t;
      const auto ts = static_cast<std::size_t>(t);
      mb.batch.inputs[ts].col(j) = buffer.inputs.col(k);
      mb.batch.prev_actions[ts].col(j) = buffer.prev_actions.col(k);
      mb.batch.carry[ts](j) = buffer.episode_starts[static_cast<std::size_t>(k)] ? 0.0 : 1.0;
      mb.actions(t, j) = buffer.actions[static_cast<std::size_t>(k)];
      mb.old_log_probs(t, j) = buffer.log_probs(k);
      mb.advantages(t, j) = advantages(k);
      mb.returns(t, j) = returns(k);
    }
  }
  return mb;
}

LossAndGradient ppo_loss(const PolicyParams& params, const Minibatch& mb, const PpoConfig& config,
                         bool with_gradient) {
  const SequenceTrace trace = forward_sequence(params, mb.batch);
  const int steps = mb.batch.steps();
  const Eigen::Index b = mb.batch.batch();
  const double m = static_cast<double>(steps) * static_cast<double>(b);
  const double eps = config.clip_epsilon;

  std::vector<Eigen::MatrixXd> d_logits(static_cast<std::size_t>(steps));
  std::vector<Eigen::RowVectorXd> d_values(static_cast<std::size_t>(steps));
  LossAndGradient out;
  UpdateStats& st = out.stats;
  double clipped = 0.0;
  for (int t = 0; t < steps; ++t) {
    const auto& step = trace.steps[static_cast<std::size_t>(t)];
    const Eigen::Index a = step.probs.rows();
    auto& dl = d_logits[static_cast<std::size_t>(t)];
    auto& dv = d_values[static_cast<std::size_t>(t)];
    dl.resize(a, b);
    dv.resize(b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const auto probs = step.probs.col(j);
      const Eigen::ArrayXd log_probs = probs.array().log();
      const int action = mb.actions(t, j);
      const double adv = mb.advantages(t, j);
      const double ratio = std::exp(log_probs(action) - mb.old_log_probs(t, j));
      const double surr1 = ratio * adv;
      const double surr2 = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
      const bool unclipped = surr1 <= surr2;
      st.policy_loss -= std::min(surr1, surr2);
      if (std::abs(ratio - 1.0) > eps) clipped += 1.0;

      const double entropy = -(probs.array() * log_probs).sum();
      st.entropy += entropy;
      const double err = step.values(j) - mb.returns(t, j);
      st.value_loss += err * err;

      // d(-surrogate)/dlogp, then through log-softmax; entropy gradient is
      // -pi_k (log pi_k + H).
      const double g_logp = unclipped ? -adv * ratio : 0.0;
      for (Eigen::Index k = 0; k < a; ++k) {
        const double onehot = k == action ? 1.0 : 0.0;
        const double d_entropy = -probs(k) * (log_probs(k) + entropy);
        dl(k, j) = (g_logp * (onehot - probs(k)) - config.entropy_coef * d_entropy) / m;
      }
      dv(j) = config.value_coef * 2.0 * err / m;
    }
  }
  st.policy_loss /= m;
  st.value_loss /= m;
  st.entropy /= m;
  st.clip_fraction = clipped / m;
  st.total_loss = st.policy_loss + config.value_coef * st.value_loss - config.entropy_coef * st.entropy;
  if (with_gradient) {
    out.gradient = backward_sequence(params, mb.batch, trace, d_logits, d_values);
  }
  return out;
}

UpdateStats ppo_update(PolicyParams& params, Adam& optimizer, const RolloutBuffer& buffer,
                       const Advantages& advantages, const PpoConfig& config, Rng& rng) {
  validate(buffer);
  require(buffer.inputs.rows() == params.shape().input_dim &&
              buffer.hidden.rows() == params.shape().lstm_units &&
              buffer.prev_actions.rows() == params.shape().n_actions,
          "ppo_update: buffer was collected with a different policy shape");
  require(advantages.advantages.size() == buffer.size() && advantages.returns.size() == buffer.size(),
          "ppo_update: advantage length mismatch");

  Eigen::VectorXd adv = advantages.advantages;
  if (config.normalize_advantages) normalize_advantages(adv);

  std::vector<Chunk> chunks = make_chunks(buffer, config.chunk_length);
  UpdateStats total;
  int count = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(chunks.begin(), chunks.end(), rng);
    for (std::size_t lo = 0; lo < chunks.size(); lo += static_cast<std::size_t>(config.minibatch_chunks)) {
      const std::size_t hi = std::min(chunks.size(), lo + static_cast<std::size_t>(config.minibatch_chunks));
      const Minibatch mb = make_minibatch(buffer, adv, advantages.returns,
                                          std::span<const Chunk>(chunks).subspan(lo, hi - lo),
                                          config.chunk_length);
      LossAndGradient lg = ppo_loss(params, mb, config, true);
      Eigen::VectorXd& g = lg.gradient.values();
      if (config.max_grad_norm > 0.0) {
        const double norm = g.norm();
        if (norm > config.max_grad_norm) g *= config.max_grad_norm / norm;
      }
      optimizer.step(params.values(), g);
      total.policy_loss += lg.stats.policy_loss;
      total.value_loss += lg.stats.value_loss;
      total.entropy += lg.stats.entropy;
      total.clip_fraction += lg.stats.clip_fraction;
      total.total_loss += lg.stats.total_loss;
      ++count;
    }
  }
  if (count > 0) {
    total.policy_loss /= count;
    total.value_loss /= count;
    total.entropy /= count;
    total.clip_fraction /= count;
    total.total_loss /= count;
  }
  return total;
}

TrainResult train(const Dataset& dataset, std::string_view traversal_id, const TrainOptions& options) {
  validate(dataset);
  validate(options.ppo);
  validate(options.shape);
  const int n = dataset.n_places();
  validate(options.curriculum, n);
  validate(options.motion, n);
  dataset.traversal_index(traversal_id);
  const PolicyShape expected =
      make_policy_shape(dataset.descriptor_dim, action_count(options.env.action_set),
                        options.shape.prev_action_in_encoder, options.shape.encoder_units,
                        options.shape.lstm_units, options.shape.relu_encoder);
  require(expected == options.shape, "train: policy shape does not match dataset and action set");

  const PpoConfig& cfg = options.ppo;
  TrainResult result;
  result.params = init_params(options.shape, cfg.seed);
  result.curriculum = options.curriculum;
  Adam optimizer(result.params.values().size(), cfg.learning_rate);
  std::vector<RolloutWorker> workers =
      make_workers(dataset, traversal_id, options.motion, options.env, cfg.n_envs, cfg.seed);
  Rng shuffle_rng = make_rng(cfg.seed, "ppo.shuffle");
  std::deque<bool> window;

  for (int update = 1; update <= cfg.total_updates; ++update) {
    TrainingLogEntry entry;
    entry.update = update;
    entry.curriculum_level = result.curriculum.level;

    const RolloutBuffer buffer =
        collect_rollouts(workers, result.params, cfg.rollout_length, result.curriculum, {}, cfg.threads);
    const Advantages adv = compute_returns_and_advantages(buffer, cfg.gamma, cfg.gae_lambda);
    const UpdateStats stats = ppo_update(result.params, optimizer, buffer, adv, cfg, shuffle_rng);

    int wins = 0;
    for (const EpisodeSummary& ep : buffer.episodes) {
      wins += ep.success ? 1 : 0;
      window.push_back(ep.success);
      if (static_cast<int>(window.size()) > result.curriculum.window) window.pop_front();
    }
    entry.episodes = static_cast<int>(buffer.episodes.size());
    entry.success_rate = entry.episodes > 0 ? static_cast<double>(wins) / entry.episodes : 0.0;
    entry.policy_loss = stats.policy_loss;
    entry.value_loss = stats.value_loss;
    entry.entropy = stats.entropy;
    entry.clip_fraction = stats.clip_fraction;
    entry.rolling_success =
        window.empty() ? 0.0
                       : static_cast<double>(std::count(window.begin(), window.end(), true)) /
                             static_cast<double>(window.size());

    if (static_cast<int>(window.size()) == result.curriculum.window) {
      const auto flags = std::make_unique<bool[]>(window.size());
      std::copy(window.begin(), window.end(), flags.get());
      const CurriculumState next =
          curriculum_update(result.curriculum, std::span<const bool>(flags.get(), window.size()));
      if (next.level != result.curriculum.level) window.clear();
      result.curriculum = next;
    }

    result.log.push_back(entry);
    if (options.on_update) options.on_update(entry);
    if (options.checkpoint_every > 0 && options.on_checkpoint &&
        update % options.checkpoint_every == 0) {
      options.on_checkpoint(update, result.params);
    }
  }
  return result;
}

void write_training_log(std::span<const TrainingLogEntry> log, std::ostream& out) {
  out << "update,episodes,success_rate,rolling_success,policy_loss,value_loss,entropy,clip_fraction,"
         "curriculum_level\n";
  char line[256];
  for (const TrainingLogEntry& e : log) {
    std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.6f,%.9g,%.9g,%.9g,%.6f,%d\n", e.update,
                  e.episodes, e.success_rate, e.rolling_success, e.policy_loss, e.value_loss,
                  e.entropy, e.clip_fraction, e.curriculum_level);
    out << line;
  }
}

}  // namespace mvp
