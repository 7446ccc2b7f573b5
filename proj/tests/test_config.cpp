#include <doctest.h>

#include <sstream>

#include "mvp/config.hpp"
#include "test_util.hpp"

using namespace mvp;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

RunConfig with(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  RunConfig c;
  for (const auto& [k, v] : pairs) c.set(k, v);
  return c;
}

}  // namespace

TEST_CASE("defaults are complete and valid") {
  const RunConfig c;
  CHECK_NOTHROW(validate(c));
  for (const ConfigKey& k : config_keys()) CHECK(c.get(k.name) == k.default_value);
  CHECK(c.get_int("generate.n_places") == 100);
  CHECK(c.get_int("generate.descriptor_dim") == 64);
  CHECK(ppo_config(c).minibatch_chunks == 32);
  CHECK(deployment_options(c).iterations == 10);
  CHECK(deployment_options(c).targets == 100);
  CHECK(compare_variant_specs(c).size() == 4);
}

TEST_CASE("files parse with comments, blanks and trimming") {
  RunConfig c;
  std::istringstream in(
      "# experiment\n"
      "\n"
      "  seed = 7   # trailing comment\n"
      "ppo.updates=12\n"
      "sweep.sigmas = 0, 0.5 ,2\n");
  c.parse(in, "exp.cfg");
  CHECK(c.get_u64("seed") == 7);
  CHECK(c.get_int("ppo.updates") == 12);
  CHECK(c.get_doubles("sweep.sigmas") == std::vector<double>{0.0, 0.5, 2.0});
}

TEST_CASE("unknown keys and malformed lines report the line number") {
  RunConfig c;
  std::istringstream unknown("seed = 1\n\nppo.colour = red\n");
  const std::string e1 = error_of([&] { c.parse(unknown, "exp.cfg"); });
  CHECK(mentions(e1, "exp.cfg:3"));
  CHECK(mentions(e1, "ppo.colour"));

  std::istringstream malformed("seed = 1\njust words\n");
  CHECK(mentions(error_of([&] { c.parse(malformed, "exp.cfg"); }), "exp.cfg:2"));

  CHECK(mentions(error_of([&] { c.apply_override("seed"); }), "key=value"));
  CHECK(mentions(error_of([&] { c.apply_override("nope=1"); }), "nope"));
  CHECK(mentions(error_of([] { RunConfig::from_file("/nonexistent/x.cfg"); }), "/nonexistent/x.cfg"));
}

TEST_CASE("typed getters name the key on a bad value") {
  const RunConfig c = with({{"ppo.updates", "ten"}, {"ppo.gamma", "nan"}, {"eval.sample_actions", "maybe"}});
  CHECK(mentions(error_of([&] { c.get_int("ppo.updates"); }), "ppo.updates"));
  CHECK(mentions(error_of([&] { c.get_double("ppo.gamma"); }), "ppo.gamma"));
  CHECK(mentions(error_of([&] { c.get_bool("eval.sample_actions"); }), "eval.sample_actions"));
}

TEST_CASE("builders reject invalid values naming the key") {
  CHECK(mentions(error_of([] { synthetic_spec(with({{"generate.conditions", "a:0,b:-1"}})); }),
                 "generate.conditions"));
  CHECK(mentions(error_of([] { synthetic_spec(with({{"generate.conditions", "a"}})); }),
                 "generate.conditions"));
  CHECK(mentions(error_of([] { motion_params(with({{"motion.sigma", "-2"}})); }), "motion.sigma"));
  CHECK(mentions(error_of([] { motion_params(with({{"motion.kind", "lidar"}})); }), "motion.kind"));
  CHECK(mentions(error_of([] { motion_params(with({{"motion.kind", "vo"}, {"motion.dropout", "1-5"}})); }),
                 "motion.dropout"));
  CHECK(mentions(error_of([] { env_config(with({{"env.goal_tolerance", "-1"}})); }), "env.goal_tolerance"));
  CHECK(mentions(error_of([] { policy_shape(with({{"policy.lstm_units", "0"}}), 64); }), "policy.lstm_units"));
  CHECK(mentions(error_of([] { ppo_config(with({{"ppo.gamma", "1.5"}})); }), "gamma"));
  CHECK(mentions(error_of([] { ppo_config(with({{"ppo.rollout_length", "100"}})); }), "chunk"));
  CHECK(mentions(error_of([] { deployment_options(with({{"eval.iterations", "0"}})); }), "eval"));
  CHECK(mentions(error_of([] { compare_variant_specs(with({{"compare.variants", "MVP-XYZ"}})); }),
                 "compare.variants"));
  CHECK(mentions(error_of([] { sweep_options(with({{"sweep.sigmas", "1,0.5"}}), 64); }), "sweep"));
  CHECK(mentions(error_of([] { validate(with({{"threads", "-1"}})); }), "threads"));
}

TEST_CASE("validation against a dataset checks traversal ids and route length") {
  const Dataset ds = testing::small_dataset(20, 8);
  CHECK_NOTHROW(validate_against(with({{"curriculum.levels", "3,19"}}), ds));
  CHECK(mentions(error_of([&] { validate_against(with({{"train.traversal", "winter"}, {"curriculum.levels", "3,19"}}), ds); }),
                 "train.traversal"));
  CHECK(mentions(error_of([&] { validate_against(with({{"curriculum.levels", "3,10"}}), ds); }), "curriculum"));
  CHECK(mentions(error_of([&] {
                   validate_against(with({{"curriculum.levels", "3,19"}, {"eval.gps_dropout", "0-40"}}), ds);
                 }),
                 "eval.gps_dropout"));
  const auto conditions = deployment_conditions(with({{"eval.traversals", "mild,extreme"}}), ds);
  REQUIRE(conditions.size() == 2);
  CHECK(conditions[1].traversal_id == "extreme");
}

TEST_CASE("component seeds differ and the effective config round-trips") {
  const RunConfig c = with({{"seed", "42"}, {"ppo.learning_rate", "1e-3"}});
  CHECK(component_seed(c, "ppo") != component_seed(c, "generate"));
  CHECK(component_seed(c, "ppo") == derive_seed(42, "ppo"));
  std::ostringstream out;
  c.write(out);
  CHECK(testing::count_lines(out.str()) == config_keys().size());
  RunConfig back;
  std::istringstream in(out.str());
  back.parse(in, "effective");
  std::ostringstream again;
  back.write(again);
  CHECK(again.str() == out.str());
}
