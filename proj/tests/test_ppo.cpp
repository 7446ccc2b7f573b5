#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mvp/ppo.hpp"
#include "test_util.hpp"

using namespace mvp;

namespace {

// A_t = sum_l (gamma lambda)^l delta_{t+l}, truncated at the first done.
std::vector<double> explicit_gae(const std::vector<double>& r, const std::vector<double>& v,
                                 const std::vector<std::uint8_t>& done, double bootstrap,
                                 double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : bootstrap;
    delta[t] = r[t] + gamma * next * (done[t] ? 0.0 : 1.0) - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += weight * delta[k];
      if (done[k]) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

std::vector<double> run_gae(const std::vector<double>& r, const std::vector<double>& v,
                            const std::vector<std::uint8_t>& done, double bootstrap, double gamma,
                            double lambda) {
  std::vector<double> adv(r.size());
  generalized_advantages(r, v, done, bootstrap, gamma, lambda, adv);
  return adv;
}

struct Fixture {
  Dataset dataset = testing::small_dataset(20, 4, 3);
  PolicyShape shape = testing::tiny_shape(4, 2);
  MotionModelParams motion;
  EnvConfig env;

  std::vector<RolloutWorker> workers(int n, std::uint64_t seed) const {
    return make_workers(dataset, "reference", motion, env, n, seed);
  }
};

PpoConfig tiny_config() {
  PpoConfig c;
  c.rollout_length = 32;
  c.n_envs = 4;
  c.chunk_length = 8;
  c.minibatch_chunks = 4;
  c.epochs = 2;
  c.total_updates = 4;
  c.seed = 5;
  return c;
}

Minibatch whole_buffer(const RolloutBuffer& buffer, const Eigen::VectorXd& adv,
                       const Eigen::VectorXd& returns, int chunk_length) {
  const auto chunks = make_chunks(buffer, chunk_length);
  return make_minibatch(buffer, adv, returns, chunks, chunk_length);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("gae on a single rewarded step") {
  CHECK(run_gae({1.0}, {0.0}, {1}, 0.0, 0.99, 0.95) == std::vector<double>{1.0});
  CHECK(run_gae({0, 0, 0}, {0, 0, 0}, {0, 0, 1}, 0.0, 0.99, 0.95) == std::vector<double>{0, 0, 0});
}

TEST_CASE("gae matches the explicit discounted sum of residuals") {
  const std::vector<double> r{0, 0, 1}, v{0.2, 0.4, 0.7};
  const std::vector<std::uint8_t> done{0, 0, 1};
  const auto got = run_gae(r, v, done, 0.0, 0.9, 0.8);
  const auto want = explicit_gae(r, v, done, 0.0, 0.9, 0.8);
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(got[t] - want[t]) < 1e-15);
  // delta_2 = 1 - 0.7; delta_1 = 0.9 * 0.7 - 0.4; delta_0 = 0.9 * 0.4 - 0.2
  CHECK(got[2] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(got[1] == doctest::Approx(0.23 + 0.72 * 0.3).epsilon(1e-14));
  CHECK(got[0] == doctest::Approx(0.16 + 0.72 * (0.23 + 0.72 * 0.3)).epsilon(1e-14));

  Rng rng = make_rng(1, "test.gae");
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 1, 20);
    std::vector<double> rr(n), vv(n);
    std::vector<std::uint8_t> dd(n);
    for (int t = 0; t < n; ++t) {
      rr[t] = uniform_int(rng, 0, 4) == 0 ? 1.0 : 0.0;
      vv[t] = uniform_real(rng, -1, 1);
      dd[t] = rr[t] > 0 || uniform_int(rng, 0, 9) == 0;
    }
    const double boot = uniform_real(rng, -1, 1);
    const auto a = run_gae(rr, vv, dd, boot, 0.97, 0.9);
    const auto b = explicit_gae(rr, vv, dd, boot, 0.97, 0.9);
    for (int t = 0; t < n; ++t) CHECK(std::abs(a[t] - b[t]) < 1e-12);
  }
}

TEST_CASE("lambda = 1 recovers Monte-Carlo returns minus the baseline") {
  const std::vector<double> r{0, 0, 1, 0, 0, 0};
  const std::vector<double> v{0.1, -0.3, 0.5, 0.2, 0.9, -0.4};
  const std::vector<std::uint8_t> done{0, 0, 1, 0, 0, 0};
  const double gamma = 0.95, boot = 0.6;
  const auto adv = run_gae(r, v, done, boot, gamma, 1.0);
  const std::vector<double> mc{gamma * gamma, gamma, 1.0, gamma * gamma * gamma * boot,
                               gamma * gamma * boot, gamma * boot};
  for (std::size_t t = 0; t < r.size(); ++t) CHECK(std::abs(adv[t] + v[t] - mc[t]) < 1e-12);
}

TEST_CASE("advantage normalization") {
  Eigen::VectorXd a(4);
  a << 1, 2, 3, 4;
  normalize_advantages(a);
  CHECK(std::abs(a.mean()) < 1e-15);
  // Population variance: the sample of advantages is the whole batch.
  CHECK(std::abs((a.array() - a.mean()).square().sum() / 4.0 - 1.0) < 1e-7);
  Eigen::VectorXd one(1);
  one << 5;
  normalize_advantages(one);
  CHECK(one(0) == 5);
}

TEST_CASE("rollout buffers have n_envs x length steps and consistent records") {
  Fixture f;
  const PolicyParams p = init_params(f.shape, 1);
  auto workers = f.workers(4, 2);
  const RolloutBuffer b = collect_rollouts(workers, p, 128, full_range_curriculum(20));
  CHECK(b.size() == 512);
  CHECK(b.inputs.cols() == 512);
  CHECK(b.log_probs.allFinite());
  CHECK_NOTHROW(validate(b));
  int successes = 0;
  for (const auto& ep : b.episodes) successes += ep.success ? 1 : 0;
  CHECK(b.rewards.sum() == doctest::Approx(successes));
  for (int e = 0; e < 4; ++e) {
    CHECK(b.episode_starts[static_cast<std::size_t>(b.index(e, 0))] == 1);
    for (int t = 1; t < 128; ++t) {
      const auto i = static_cast<std::size_t>(b.index(e, t));
      CHECK(b.episode_starts[i] == b.dones[i - 1]);
      if (b.episode_starts[i]) {
        CHECK(b.hidden.col(static_cast<Eigen::Index>(i)).isZero());
        CHECK(b.prev_actions.col(static_cast<Eigen::Index>(i)).isZero());
      }
    }
  }
}

TEST_CASE("oracle-forced collection earns exactly one reward per completed episode") {
  Fixture f;
  const PolicyParams p = init_params(f.shape, 1);
  auto workers = f.workers(3, 4);
  const RolloutBuffer b = collect_rollouts(workers, p, 64, full_range_curriculum(20),
                                           [](const NavigationEnv& env) { return oracle_action(env.state()); });
  REQUIRE_FALSE(b.episodes.empty());
  for (const auto& ep : b.episodes) {
    CHECK(ep.success);
    CHECK(ep.reward == 1.0);
  }
  CHECK(b.rewards.sum() == doctest::Approx(static_cast<double>(b.episodes.size())));
  for (int i = 0; i < b.size(); ++i) {
    if (b.rewards(i) > 0) CHECK(b.dones[static_cast<std::size_t>(i)] == 1);
  }
}

TEST_CASE("collection is bitwise reproducible and threads only change rounding") {
  Fixture f;
  f.motion.noise_sigma = 0.5;
  const PolicyParams p = init_params(f.shape, 3);
  auto w1 = f.workers(4, 9);
  auto w2 = f.workers(4, 9);
  auto w3 = f.workers(4, 9);
  auto w4 = f.workers(4, 9);
  const CurriculumState c = full_range_curriculum(20);
  const RolloutBuffer a = collect_rollouts(w1, p, 48, c);
  const RolloutBuffer b = collect_rollouts(w2, p, 48, c);
  const RolloutBuffer t = collect_rollouts(w3, p, 48, c, {}, 2);
  const RolloutBuffer u = collect_rollouts(w4, p, 48, c, {}, 2);
  CHECK(a.inputs == b.inputs);
  CHECK(a.actions == b.actions);
  CHECK(a.log_probs == b.log_probs);
  CHECK(a.values == b.values);
  CHECK(a.rewards == b.rewards);
  CHECK(a.dones == b.dones);
  CHECK(a.hidden == b.hidden);
  CHECK(a.bootstrap_values == b.bootstrap_values);
  CHECK(t.values == u.values);
  CHECK(t.hidden == u.hidden);

  CHECK(a.actions == t.actions);
  CHECK(a.rewards == t.rewards);
  CHECK(a.dones == t.dones);
  CHECK((a.inputs - t.inputs).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.log_probs - t.log_probs).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.values - t.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.hidden - t.hidden).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero epochs leave the parameters unchanged") {
  Fixture f;
  PolicyParams p = init_params(f.shape, 1);
  const PolicyParams before = p;
  auto workers = f.workers(2, 1);
  const RolloutBuffer b = collect_rollouts(workers, p, 16, full_range_curriculum(20));
  const Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  PpoConfig cfg = tiny_config();
  cfg.epochs = 0;
  Adam opt(p.values().size(), cfg.learning_rate);
  Rng rng = make_rng(1, "test");
  ppo_update(p, opt, b, adv, cfg, rng);
  CHECK(p.values() == before.values());
}

TEST_CASE("replaying the buffer under its own policy gives unit ratios") {
  Fixture f;
  const PolicyParams p = init_params(f.shape, 2);
  auto workers = f.workers(4, 2);
  const RolloutBuffer b = collect_rollouts(workers, p, 32, full_range_curriculum(20));
  const Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  const Minibatch mb = whole_buffer(b, adv.advantages, adv.returns, 8);
  // The stored log-probabilities are exactly the replayed ones.
  const SequenceTrace trace = forward_sequence(p, mb.batch);
  double worst = 0.0;
  for (int t = 0; t < mb.batch.steps(); ++t) {
    for (int j = 0; j < mb.batch.batch(); ++j) {
      const double lp = std::log(trace.steps[static_cast<std::size_t>(t)].probs(mb.actions(t, j), j));
      worst = std::max(worst, std::abs(lp - mb.old_log_probs(t, j)));
    }
  }
  CHECK(worst < 1e-12);
  const LossAndGradient lg = ppo_loss(p, mb, tiny_config(), false);
  CHECK(lg.stats.clip_fraction == 0.0);
  CHECK(lg.stats.policy_loss == doctest::Approx(-mb.advantages.mean()).epsilon(1e-12));
}

TEST_CASE("at unit ratios the surrogate gradient is the vanilla policy gradient") {
  Fixture f;
  const PolicyParams p = init_params(f.shape, 4);
  auto workers = f.workers(4, 4);
  const RolloutBuffer b = collect_rollouts(workers, p, 32, full_range_curriculum(20));
  const Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  const Minibatch mb = whole_buffer(b, adv.advantages, adv.returns, 8);
  PpoConfig cfg = tiny_config();
  cfg.entropy_coef = 0.0;
  cfg.value_coef = 0.0;
  const PolicyParams surrogate = ppo_loss(p, mb, cfg, true).gradient;

  // -mean(A log pi(a | s)) through the generic probe loss.
  const int steps = mb.batch.steps(), batch = mb.batch.batch();
  const double m = static_cast<double>(steps) * batch;
  ProbeLoss vanilla;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(f.shape.n_actions, batch);
    for (int j = 0; j < batch; ++j) w(mb.actions(t, j), j) = -mb.advantages(t, j) / m;
    vanilla.log_prob_weights.push_back(w);
    vanilla.value_linear.push_back(Eigen::RowVectorXd::Zero(batch));
    vanilla.value_quadratic.push_back(Eigen::RowVectorXd::Zero(batch));
    vanilla.value_targets.push_back(Eigen::RowVectorXd::Zero(batch));
  }
  const auto trace = forward_sequence(p, mb.batch);
  std::vector<Eigen::MatrixXd> dl;
  std::vector<Eigen::RowVectorXd> dv;
  vanilla.gradient(trace, dl, dv);
  const PolicyParams reference = backward_sequence(p, mb.batch, trace, dl, dv);
  CHECK((surrogate.values() - reference.values()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("the loss gradient matches central differences") {
  Fixture f;
  PolicyParams p = init_params(f.shape, 6);
  auto workers = f.workers(2, 6);
  const RolloutBuffer b = collect_rollouts(workers, p, 16, full_range_curriculum(20));
  Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  const Minibatch mb = whole_buffer(b, adv.advantages, adv.returns, 8);
  // Move off the ratio-1 point, but stay inside the clip region so the loss is smooth.
  Rng rng = make_rng(6, "test");
  for (Eigen::Index i = 0; i < p.values().size(); ++i) p.values()(i) += 0.01 * standard_normal(rng);
  PpoConfig cfg = tiny_config();
  cfg.clip_epsilon = 10.0;
  const LossAndGradient lg = ppo_loss(p, mb, cfg, true);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.values().size(); i += 7) {
    PolicyParams q = p;
    q.values()(i) += 1e-6;
    const double plus = ppo_loss(q, mb, cfg, false).stats.total_loss;
    q.values()(i) -= 2e-6;
    const double minus = ppo_loss(q, mb, cfg, false).stats.total_loss;
    const double numeric = (plus - minus) / 2e-6;
    const double exact = lg.gradient.values()(i);
    worst = std::max(worst, std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-8}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("one small update lowers the loss on its own minibatch") {
  Fixture f;
  PolicyParams p = init_params(f.shape, 8);
  auto workers = f.workers(4, 8);
  const RolloutBuffer b = collect_rollouts(workers, p, 32, full_range_curriculum(20));
  const Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  PpoConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.minibatch_chunks = 1000;  // one minibatch holding every chunk
  cfg.learning_rate = 1e-4;
  Eigen::VectorXd normalized = adv.advantages;
  normalize_advantages(normalized);
  const Minibatch mb = whole_buffer(b, normalized, adv.returns, cfg.chunk_length);
  const double before = ppo_loss(p, mb, cfg, false).stats.total_loss;
  Adam opt(p.values().size(), cfg.learning_rate);
  Rng rng = make_rng(8, "test");
  ppo_update(p, opt, b, adv, cfg, rng);
  CHECK(ppo_loss(p, mb, cfg, false).stats.total_loss < before);
}

TEST_CASE("advantage scaling keeps the update direction") {
  Fixture f;
  const PolicyParams p = init_params(f.shape, 10);
  auto workers = f.workers(4, 10);
  const RolloutBuffer b = collect_rollouts(workers, p, 32, full_range_curriculum(20));
  Advantages adv = compute_returns_and_advantages(b, 0.99, 0.95);
  adv.advantages.array() -= adv.advantages.mean();
  Eigen::VectorXd normalized = adv.advantages;
  normalize_advantages(normalized);
  PpoConfig cfg = tiny_config();
  cfg.entropy_coef = 0.0;
  cfg.value_coef = 0.0;
  const Eigen::VectorXd g_raw =
      ppo_loss(p, whole_buffer(b, adv.advantages, adv.returns, 8), cfg).gradient.values();
  const Eigen::VectorXd g_norm =
      ppo_loss(p, whole_buffer(b, normalized, adv.returns, 8), cfg).gradient.values();
  CHECK(cosine(g_raw, g_norm) > 1.0 - 1e-12);

  // The same infinitesimal step along either gradient keeps every argmax.
  const Minibatch mb = whole_buffer(b, normalized, adv.returns, 8);
  PolicyParams a = p, c = p;
  a.values() -= 1e-7 * g_raw.normalized();
  c.values() -= 1e-7 * g_norm.normalized();
  const auto ta = forward_sequence(a, mb.batch);
  const auto tc = forward_sequence(c, mb.batch);
  for (int t = 0; t < mb.batch.steps(); ++t) {
    for (int j = 0; j < mb.batch.batch(); ++j) {
      CHECK(argmax_action(ta.steps[static_cast<std::size_t>(t)].probs.col(j)) ==
            argmax_action(tc.steps[static_cast<std::size_t>(t)].probs.col(j)));
    }
  }
}

TEST_CASE("adam applies bias-corrected moments") {
  Adam opt(2, 0.1);
  Eigen::VectorXd x(2), g(2);
  x << 1.0, -1.0;
  g << 0.5, -2.0;
  opt.step(x, g);
  // First step: m_hat = g, v_hat = g^2, so the step is lr * sign(g).
  CHECK(x(0) == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(x(1) == doctest::Approx(-0.9).epsilon(1e-7));
  CHECK(opt.steps() == 1);
}

TEST_CASE("training statistics stay in range and training is reproducible") {
  Fixture f;
  TrainOptions opts;
  opts.shape = f.shape;
  opts.ppo = tiny_config();
  opts.ppo.total_updates = 6;
  opts.curriculum.max_goal_distance = {3, 19};
  opts.curriculum.window = 10;
  opts.motion = f.motion;
  const TrainResult a = train(f.dataset, "reference", opts);
  const TrainResult b = train(f.dataset, "reference", opts);
  REQUIRE(a.log.size() == 6);
  for (const auto& e : a.log) {
    CHECK((e.clip_fraction >= 0.0 && e.clip_fraction <= 1.0));
    CHECK((e.entropy >= 0.0 && e.entropy <= std::log(2.0) + 1e-12));
    CHECK((e.success_rate >= 0.0 && e.success_rate <= 1.0));
  }
  std::ostringstream la, lb;
  write_training_log(a.log, la);
  write_training_log(b.log, lb);
  CHECK(la.str() == lb.str());
  CHECK(a.params.values() == b.params.values());
  CHECK(la.str().rfind("update,episodes,success_rate,rolling_success,policy_loss,value_loss,entropy,"
                       "clip_fraction,curriculum_level\n", 0) == 0);
  CHECK(testing::count_lines(la.str()) == 7);
}

TEST_CASE("invalid configurations are rejected") {
  PpoConfig c;
  CHECK_NOTHROW(validate(c));
  c.gamma = 0.0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = PpoConfig{};
  c.gae_lambda = 1.5;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = PpoConfig{};
  c.clip_epsilon = 0.0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = PpoConfig{};
  c.rollout_length = 100;  // not a multiple of the chunk length
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("full-route training reaches the final curriculum level within the regression bound") {
  SyntheticSpec spec;
  spec.conditions = {{"reference", 0.0}};
  spec.seed = 1;
  const Dataset ds = generate_synthetic_dataset(spec);
  TrainOptions opts;
  opts.shape = make_policy_shape(64, 2);
  opts.ppo.seed = 2;
  opts.ppo.total_updates = 80;
  opts.motion.noise_sigma = default_sigma(MotionKind::Gps);
  int reached = -1;
  opts.on_update = [&](const TrainingLogEntry& e) {
    if (reached < 0 && e.curriculum_level == opts.curriculum.levels()) reached = e.update;
  };
  train(ds, "reference", opts);
  MESSAGE("final curriculum level first used at update ", reached);
  CHECK(reached > 0);
  CHECK(reached <= 80);
}
