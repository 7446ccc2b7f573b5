#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "mvp/env.hpp"
#include "test_util.hpp"

using namespace mvp;

namespace {

MotionModelParams gps(double sigma) {
  MotionModelParams p;
  p.kind = MotionKind::Gps;
  p.noise_sigma = sigma;
  return p;
}

Vec2 feature_of(const Dataset& ds, int index) {
  return motion_feature(ds.traversals[0].places[static_cast<std::size_t>(index)].pose, ds.route_bbox);
}

}  // namespace

TEST_CASE("reset builds the start observation") {
  const Dataset ds = testing::small_dataset(30, 8);
  NavigationEnv env(ds, "mild", gps(0.0), {}, 1);
  const Observation obs = env.reset({0, 10});
  CHECK(obs.x == ds.traversal("mild").descriptors.row(0).transpose());
  CHECK(obs.m == feature_of(ds, 0));
  CHECK(obs.g == feature_of(ds, 10));
  CHECK(obs.prev_action.size() == 2);
  CHECK(obs.prev_action.isZero());
  CHECK(env.state().step_cap == 29);
  CHECK(env.state().steps_taken == 0);
}

TEST_CASE("the goal feature ignores motion noise") {
  const Dataset ds = testing::small_dataset(30, 8);
  NavigationEnv env(ds, "reference", gps(5.0), {}, 2);
  const Observation obs = env.reset({3, 10});
  CHECK(obs.g == feature_of(ds, 10));
  CHECK(obs.m != feature_of(ds, 3));
}

TEST_CASE("reset rejects invalid tasks") {
  const Dataset ds = testing::small_dataset(10, 4);
  NavigationEnv env(ds, "reference", gps(0.0), {}, 0);
  CHECK_THROWS_AS(env.reset({3, 3}), ValidationError);
  CHECK_THROWS_AS(env.reset({-1, 3}), ValidationError);
  CHECK_THROWS_AS(env.reset({0, 10}), ValidationError);
}

TEST_CASE("step transitions, clamps and rewards") {
  const Dataset ds = testing::small_dataset(20, 4);
  NavigationEnv env(ds, "reference", gps(0.0), {}, 0);

  env.reset({5, 12});
  StepResult r = env.step(kForward);
  CHECK(env.state().current_index == 6);
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
  CHECK(r.observation.prev_action == Eigen::Vector2d(1, 0));

  env.reset({11, 12});
  r = env.step(kForward);
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  CHECK(env.state().success);
  CHECK_THROWS_AS(env.step(kForward), ValidationError);

  env.reset({0, 5});
  r = env.step(kBackward);
  CHECK(env.state().current_index == 0);
  CHECK(r.observation.prev_action == Eigen::Vector2d(0, 1));
  CHECK_THROWS_AS(env.step(2), ValidationError);
}

TEST_CASE("stay is available in the extended action set") {
  const Dataset ds = testing::small_dataset(10, 4);
  EnvConfig cfg;
  cfg.action_set = ActionSet::ForwardBackwardStay;
  NavigationEnv env(ds, "reference", gps(0.0), cfg, 0);
  const Observation obs = env.reset({4, 8});
  CHECK(obs.prev_action.size() == 3);
  env.step(kStay);
  CHECK(env.state().current_index == 4);
}

TEST_CASE("the episode times out with zero reward at N - 1 steps") {
  const Dataset ds = testing::small_dataset(15, 4);
  NavigationEnv env(ds, "reference", gps(0.0), {}, 0);
  env.reset({7, 14});
  double total = 0.0;
  int steps = 0;
  bool done = false;
  while (!done) {
    const StepResult r = env.step(kBackward);
    total += r.reward;
    done = r.done;
    ++steps;
  }
  CHECK(steps == 14);
  CHECK(total == 0.0);
  CHECK_FALSE(env.state().success);
}

TEST_CASE("goal tolerance widens the success region") {
  const Dataset ds = testing::small_dataset(20, 4);
  EnvConfig cfg;
  cfg.goal_tolerance = 2;
  NavigationEnv env(ds, "reference", gps(0.0), cfg, 0);
  env.reset({5, 10});
  CHECK_FALSE(env.step(kForward).done);
  CHECK_FALSE(env.step(kForward).done);
  CHECK(env.step(kForward).reward == 1.0);
}

TEST_CASE("the oracle reaches every goal in exactly |goal - start| steps") {
  const Dataset ds = testing::small_dataset(25, 4);
  NavigationEnv env(ds, "extreme", gps(0.7), {}, 3);
  for (int s = 0; s < 25; ++s) {
    for (int g = 0; g < 25; ++g) {
      if (s == g) continue;
      env.reset({s, g});
      double total = 0.0;
      int steps = 0;
      bool done = false;
      while (!done) {
        const StepResult r = env.step(oracle_action(env.state()));
        total += r.reward;
        done = r.done;
        ++steps;
      }
      CHECK(steps == std::abs(g - s));
      CHECK(total == 1.0);
      CHECK(env.state().current_index == g);
    }
  }
}

TEST_CASE("random play respects the horizon and sparse reward") {
  const Dataset ds = testing::small_dataset(30, 4);
  NavigationEnv env(ds, "mild", gps(0.5), {}, 4);
  Rng rng = make_rng(4, "test.random");
  const CurriculumState full = full_range_curriculum(30);
  for (int episode = 0; episode < 300; ++episode) {
    const Task task = sample_task(rng, full, 30);
    const Observation first = env.reset(task);
    double total = 0.0;
    int steps = 0;
    bool done = false;
    while (!done) {
      const StepResult r = env.step(uniform_int(rng, 0, 1));
      total += r.reward;
      done = r.done;
      ++steps;
      // x depends only on the place; g never changes.
      CHECK(r.observation.x == ds.traversal("mild").descriptors.row(env.state().current_index).transpose());
      CHECK(r.observation.g == first.g);
    }
    CHECK(steps <= 29);
    CHECK((total == 0.0 || total == 1.0));
    if (total == 1.0) CHECK(env.state().current_index == task.goal);
  }
}

TEST_CASE("identical seeds and actions give identical observation streams") {
  const Dataset ds = testing::small_dataset(30, 4);
  MotionModelParams vo;
  vo.kind = MotionKind::Vo;
  vo.noise_sigma = 0.3;
  NavigationEnv a(ds, "reference", vo, {}, 9);
  NavigationEnv b(ds, "reference", vo, {}, 9);
  CHECK(a.reset({3, 20}).m == b.reset({3, 20}).m);
  const std::vector<int> actions{0, 0, 1, 0, 0, 0, 1, 1, 0};
  for (int act : actions) {
    const StepResult ra = a.step(act);
    const StepResult rb = b.step(act);
    CHECK(ra.observation.m == rb.observation.m);
    CHECK(ra.reward == rb.reward);
  }
}

TEST_CASE("motion input variants") {
  const Dataset ds = testing::small_dataset(20, 4);
  EnvConfig zeroed;
  zeroed.motion_input = MotionInput::Zeroed;
  NavigationEnv env(ds, "reference", gps(0.0), zeroed, 0);
  const Observation obs = env.reset({2, 9});
  CHECK(obs.m.isZero());
  CHECK(obs.g == feature_of(ds, 9));

  EnvConfig scrambled;
  scrambled.motion_input = MotionInput::Scrambled;
  NavigationEnv noisy(ds, "reference", gps(0.0), scrambled, 0);
  const Observation o1 = noisy.reset({2, 9});
  const Observation o2 = noisy.step(kForward).observation;
  CHECK(o1.m != o2.m);
  CHECK(o1.m.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("task sampling respects the curriculum distance") {
  Rng rng = make_rng(1, "test.tasks");
  CurriculumState c;
  c.max_goal_distance = {5, 99};
  for (int k = 0; k < 2000; ++k) {
    const Task t = sample_task(rng, c, 100);
    CHECK(std::abs(t.goal - t.start) >= 1);
    CHECK(std::abs(t.goal - t.start) <= 5);
    CHECK((t.goal >= 0 && t.goal < 100));
  }
  c.max_goal_distance = {1, 99};
  for (int k = 0; k < 500; ++k) {
    const Task t = sample_task(rng, c, 100);
    CHECK(std::abs(t.goal - t.start) == 1);
  }
}

TEST_CASE("the final level covers every distance with the enumerated frequencies") {
  Rng rng = make_rng(2, "test.tasks");
  CurriculumState c;
  c.level = 4;
  const int n = 100, samples = 100000;
  std::vector<int> counts(n, 0);
  for (int k = 0; k < samples; ++k) {
    const Task t = sample_task(rng, c, n);
    ++counts[static_cast<std::size_t>(std::abs(t.goal - t.start))];
  }
  // Uniform start, then uniform goal among the n - 1 others.
  std::vector<double> exact(n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int g = 0; g < n; ++g) {
      if (g != s) exact[static_cast<std::size_t>(std::abs(g - s))] += 1.0 / (n * (n - 1.0));
    }
  }
  CHECK(counts[0] == 0);
  for (int d = 1; d < n; ++d) {
    const double p = exact[static_cast<std::size_t>(d)];
    const double se = std::sqrt(p * (1.0 - p) / samples);
    CHECK(counts[static_cast<std::size_t>(d)] > 0);
    CHECK(std::abs(counts[static_cast<std::size_t>(d)] / double(samples) - p) < 5.0 * se);
  }
}

TEST_CASE("sampling rejects a level out of range") {
  Rng rng = make_rng(3, "test.tasks");
  CurriculumState c;
  c.level = 5;
  CHECK_THROWS_AS(sample_task(rng, c, 100), ValidationError);
}

TEST_CASE("curriculum promotion rule") {
  CurriculumState c;
  c.max_goal_distance = {3, 10, 99};
  c.promotion_threshold = 0.9;
  std::vector<bool> wins(100, true);
  std::vector<bool> few(100, false);
  for (int i = 0; i < 50; ++i) few[static_cast<std::size_t>(i)] = true;

  auto update = [](const CurriculumState& s, const std::vector<bool>& flags) {
    const std::unique_ptr<bool[]> raw(new bool[flags.size()]);
    for (std::size_t i = 0; i < flags.size(); ++i) raw[i] = flags[i];
    return curriculum_update(s, std::span<const bool>(raw.get(), flags.size()));
  };
  CHECK(update(c, wins).level == 2);
  CHECK(update(c, few).level == 1);
  c.level = 3;
  CHECK(update(c, wins).level == 3);
  c.level = 2;
  CHECK(update(c, few).level == 2);
}

TEST_CASE("curriculum validation") {
  CurriculumState c;
  CHECK_NOTHROW(validate(c, 100));
  c.max_goal_distance = {3, 3, 99};
  CHECK_THROWS_AS(validate(c, 100), ValidationError);
  c.max_goal_distance = {3, 10, 50};
  CHECK_THROWS_AS(validate(c, 100), ValidationError);
  c.max_goal_distance = {3, 99};
  c.promotion_threshold = 1.5;
  CHECK_THROWS_AS(validate(c, 100), ValidationError);
}
