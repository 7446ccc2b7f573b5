#include "mvp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mvp/svg.hpp"

namespace mvp {
namespace {

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Runs body(i) for i in [0, count), split over `threads` contiguous groups.
// Each index writes only its own slot, so results do not depend on threads.
template <typename Body>
void parallel_for(int count, int threads, const Body& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  const int groups = std::min(threads, count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    pool.emplace_back([&, g] {
      try {
        for (int i = g * count / groups; i < (g + 1) * count / groups; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(g)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void check_report(const DeploymentReport& report) {
  require(!report.rows.empty(), "deployment report is empty");
  for (const DeploymentRow& r : report.rows) {
    require(!r.variant.empty() && !r.traversal.empty(), "deployment row without a name");
    require(r.targets >= 1 && !r.successes.empty(),
            "deployment row " + r.variant + "/" + r.traversal + " has no tasks");
    for (int s : r.successes) {
      require(s >= 0 && s <= r.targets,
              "deployment row " + r.variant + "/" + r.traversal + " has inconsistent counts");
    }
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

PolicyAgent::PolicyAgent(const PolicyParams& params, bool sample, std::uint64_t seed)
    : params_(params),
      sample_(sample),
      rng_(make_rng(seed, "agent.policy")),
      state_(RecurrentState::zeros(params.shape())) {}

void PolicyAgent::begin_episode(const NavigationEnv& env) {
  require(env.n_actions() == params_.shape().n_actions,
          "policy has " + std::to_string(params_.shape().n_actions) +
              " actions, environment has " + std::to_string(env.n_actions()));
  state_ = RecurrentState::zeros(params_.shape());
}

int PolicyAgent::act(const Observation& observation, const NavigationEnv&) {
  ForwardOutput out = forward_step(params_, observation, state_);
  state_ = std::move(out.next_state);
  return sample_ ? sample_action(out.action_probs, rng_) : argmax_action(out.action_probs);
}

int OracleAgent::act(const Observation&, const NavigationEnv& env) {
  return oracle_action(env.state());
}

int RandomAgent::act(const Observation&, const NavigationEnv& env) {
  return uniform_int(rng_, 0, env.n_actions() - 1);
}

void validate(const DeploymentOptions& options) {
  require(options.iterations >= 1, "eval.iterations must be >= 1");
  require(options.targets >= 1, "eval.targets must be >= 1");
  require(options.threads >= 0, "threads must be >= 0");
  require(options.env.goal_tolerance >= 0, "env.goal_tolerance must be >= 0");
}

double DeploymentRow::stderr_mean() const {
  return iterations() > 0 ? std_dev / std::sqrt(static_cast<double>(iterations())) : 0.0;
}

DeploymentRow evaluate_success_rate(const AgentFactory& make_agent, const Dataset& dataset,
                                    std::string_view traversal_id,
                                    const MotionModelParams& motion,
                                    const DeploymentOptions& options) {
  validate(options);
  const int n = dataset.n_places();
  validate(motion, n);
  require(options.env.goal_tolerance + 1 <= n - 1,
          "env.goal_tolerance leaves no valid goal on a route of " + std::to_string(n) + " places");
  const CurriculumState full = full_range_curriculum(n);

  DeploymentRow row;
  row.traversal = std::string(traversal_id);
  row.targets = options.targets;
  row.step_cap = n - 1;
  row.successes.assign(static_cast<std::size_t>(options.iterations), 0);
  std::vector<int> longest(static_cast<std::size_t>(options.iterations), 0);

  parallel_for(options.iterations, options.threads, [&](int it) {
    const auto slot = static_cast<std::size_t>(it);
    const auto iter = static_cast<std::uint64_t>(it);
    Rng task_rng = make_rng(options.seed, "deploy.tasks", iter);
    NavigationEnv env(dataset, traversal_id, motion, options.env,
                      derive_seed(options.seed, "deploy.env", iter));
    std::unique_ptr<Agent> agent = make_agent(it);
    for (int k = 0; k < options.targets; ++k) {
      const Task task = sample_task(task_rng, full, n, options.env.goal_tolerance + 1);
      Observation obs = env.reset(task);
      agent->begin_episode(env);
      double total_reward = 0.0;
      int length = 0;
      bool done = false;
      while (!done) {
        const StepResult r = env.step(agent->act(obs, env));
        total_reward += r.reward;
        ++length;
        done = r.done;
        obs = r.observation;
        if (length > n - 1) throw std::logic_error("episode exceeded the step cap");
      }
      if (total_reward != 0.0 && total_reward != 1.0) {
        throw std::logic_error("episode reward " + std::to_string(total_reward) + " not in {0, 1}");
      }
      if (total_reward == 1.0) ++row.successes[slot];
      longest[slot] = std::max(longest[slot], length);
    }
  });

  std::vector<double> rates;
  for (int s : row.successes) rates.push_back(static_cast<double>(s) / options.targets);
  row.mean = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
  row.std_dev = sample_std(rates);
  row.max_episode_length = *std::max_element(longest.begin(), longest.end());
  return row;
}

DeploymentRow evaluate_success_rate(const PolicyParams& params, const Dataset& dataset,
                                    std::string_view traversal_id,
                                    const MotionModelParams& motion,
                                    const DeploymentOptions& options) {
  const AgentFactory factory = [&](int it) -> std::unique_ptr<Agent> {
    return std::make_unique<PolicyAgent>(
        params, options.sample_actions,
        derive_seed(options.seed, "deploy.actions", static_cast<std::uint64_t>(it)));
  };
  return evaluate_success_rate(factory, dataset, traversal_id, motion, options);
}

std::vector<VariantSpec> standard_variants() {
  return {
      {"MVP-GPS", MotionKind::Gps, default_sigma(MotionKind::Gps), MotionInput::Estimate},
      {"MVP-VO", MotionKind::Vo, default_sigma(MotionKind::Vo), MotionInput::Estimate},
      {"MVP-RO", MotionKind::Ro, default_sigma(MotionKind::Ro), MotionInput::Estimate},
      {"vision-only", MotionKind::Gps, default_sigma(MotionKind::Gps), MotionInput::Zeroed},
  };
}

std::vector<DeploymentCondition> all_traversal_conditions(const Dataset& dataset) {
  std::vector<DeploymentCondition> out;
  for (const Traversal& t : dataset.traversals) out.push_back({t.condition_id, t.condition_id, {}});
  return out;
}

namespace {

MotionModelParams variant_motion(const VariantSpec& v, const MotionModelParams& base) {
  MotionModelParams m;
  m.kind = v.kind;
  m.noise_sigma = v.noise_sigma;
  m.seed = base.seed;
  return m;
}

}  // namespace

DeploymentReport deploy_variants(const Dataset& dataset, std::span<const VariantSpec> variants,
                                 std::span<const PolicyParams> policies,
                                 std::span<const DeploymentCondition> conditions,
                                 const DeploymentOptions& options) {
  require(!variants.empty(), "no variants to deploy");
  require(variants.size() == policies.size(), "one policy per variant required");
  require(!conditions.empty(), "no deployment conditions");
  for (const DeploymentCondition& c : conditions) {
    dataset.traversal(c.traversal_id);  // throws on an unknown id
    MotionModelParams gps;
    gps.dropout = c.gps_dropout;
    validate(gps, dataset.n_places());
  }

  DeploymentReport report;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const VariantSpec& spec = variants[v];
    for (const DeploymentCondition& c : conditions) {
      MotionModelParams motion = variant_motion(spec, {});
      if (spec.kind == MotionKind::Gps) motion.dropout = c.gps_dropout;
      DeploymentOptions opts = options;
      opts.env.motion_input = spec.input;
      DeploymentRow row = evaluate_success_rate(policies[v], dataset, c.traversal_id, motion, opts);
      row.variant = spec.name;
      row.traversal = c.label;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

CompareResult compare_variants(const Dataset& dataset, const CompareOptions& options) {
  require(!options.variants.empty(), "compare: no variants");
  dataset.traversal(options.train_traversal);
  const std::vector<DeploymentCondition> conditions =
      options.conditions.empty() ? all_traversal_conditions(dataset) : options.conditions;

  CompareResult result;
  for (const VariantSpec& spec : options.variants) {
    TrainOptions opts = options.training;
    opts.motion = variant_motion(spec, options.training.motion);
    opts.env.motion_input = spec.input;
    TrainResult trained = train(dataset, options.train_traversal, opts);
    if (options.on_trained) options.on_trained(spec, trained);
    result.policies.push_back(std::move(trained.params));
  }
  result.report =
      deploy_variants(dataset, options.variants, result.policies, conditions, options.deployment);
  return result;
}

void validate(const SweepOptions& options) {
  require(!options.sigmas.empty(), "sweep.sigmas must not be empty");
  for (std::size_t i = 0; i < options.sigmas.size(); ++i) {
    require(std::isfinite(options.sigmas[i]) && options.sigmas[i] >= 0.0,
            "sweep.sigmas must be finite and >= 0");
    if (i > 0) require(options.sigmas[i] > options.sigmas[i - 1], "sweep.sigmas must be sorted ascending");
  }
  require(options.kind != MotionKind::Gps, "sweep.kind must be an odometry model (vo or ro)");
  require(options.rmse_episodes >= 1, "sweep.rmse_episodes must be >= 1");
  validate(options.deployment);
}

double measure_trajectory_rmse(const Dataset& dataset, std::string_view traversal_id,
                               const MotionModelParams& motion, int episodes,
                               const EnvConfig& env_config, std::uint64_t seed) {
  require(episodes >= 1, "measure_trajectory_rmse: episodes must be >= 1");
  const int n = dataset.n_places();
  const CurriculumState full = full_range_curriculum(n);
  Rng task_rng = make_rng(seed, "rmse.tasks");
  EnvConfig cfg = env_config;
  cfg.motion_input = MotionInput::Estimate;
  NavigationEnv env(dataset, traversal_id, motion, cfg, derive_seed(seed, "rmse.env"));
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (int k = 0; k < episodes; ++k) {
    env.reset(sample_task(task_rng, full, n, cfg.goal_tolerance + 1));
    while (!env.state().done) env.step(oracle_action(env.state()));
    const double r = trajectory_rmse(env.episode_estimates(), env.episode_truths());
    sum_sq += r * r * static_cast<double>(env.episode_truths().size());
    count += env.episode_truths().size();
  }
  return std::sqrt(sum_sq / static_cast<double>(count));
}

std::vector<TradeoffPoint> sweep_motion_precision(const Dataset& dataset,
                                                  const PolicyParams& policy,
                                                  const SweepOptions& options) {
  validate(options);
  dataset.traversal(options.traversal_id);
  if (options.retrain) dataset.traversal(options.train_traversal);

  std::vector<TradeoffPoint> points;
  for (double sigma : options.sigmas) {
    MotionModelParams motion;
    motion.kind = options.kind;
    motion.noise_sigma = sigma;
    TradeoffPoint p;
    p.sigma = sigma;
    p.rmse_m = measure_trajectory_rmse(dataset, options.traversal_id, motion, options.rmse_episodes,
                                       options.deployment.env, options.deployment.seed);
    DeploymentOptions deploy = options.deployment;
    deploy.env.motion_input = MotionInput::Estimate;
    DeploymentRow row;
    if (options.retrain) {
      TrainOptions opts = options.training;
      opts.motion = motion;
      opts.env.motion_input = MotionInput::Estimate;
      const TrainResult trained = train(dataset, options.train_traversal, opts);
      row = evaluate_success_rate(trained.params, dataset, options.traversal_id, motion, deploy);
    } else {
      row = evaluate_success_rate(policy, dataset, options.traversal_id, motion, deploy);
    }
    p.success_rate = row.mean;
    p.stderr_rate = row.stderr_mean();
    points.push_back(p);
  }
  return points;
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman_correlation: need two equal-length samples");
  const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

void write_deployment_csv(const DeploymentReport& report, std::ostream& out) {
  out << "variant,traversal,iteration,successes,targets,success_rate\n";
  for (const DeploymentRow& r : report.rows) {
    for (int i = 0; i < r.iterations(); ++i) {
      const int s = r.successes[static_cast<std::size_t>(i)];
      out << r.variant << ',' << r.traversal << ',' << i << ',' << s << ',' << r.targets << ','
          << fixed(static_cast<double>(s) / r.targets, 6) << '\n';
    }
  }
  for (const DeploymentRow& r : report.rows) {
    const int total = std::accumulate(r.successes.begin(), r.successes.end(), 0);
    out << r.variant << ',' << r.traversal << ",all," << total << ',' << r.targets * r.iterations()
        << ',' << fixed(r.mean, 6) << '\n';
  }
}

void write_deployment_summary_csv(const DeploymentReport& report, std::ostream& out) {
  out << "variant,traversal,iterations,targets,mean_success_rate,std_success_rate,stderr\n";
  for (const DeploymentRow& r : report.rows) {
    out << r.variant << ',' << r.traversal << ',' << r.iterations() << ',' << r.targets << ','
        << fixed(r.mean, 6) << ',' << fixed(r.std_dev, 6) << ',' << fixed(r.stderr_mean(), 6) << '\n';
  }
}

void write_tradeoff_csv(std::span<const TradeoffPoint> points, std::ostream& out) {
  out << "sigma,rmse_m,success_rate,stderr\n";
  for (const TradeoffPoint& p : points) {
    out << fixed(p.sigma, 6) << ',' << fixed(p.rmse_m, 6) << ',' << fixed(p.success_rate, 6) << ','
        << fixed(p.stderr_rate, 6) << '\n';
  }
}

std::string success_by_condition_svg(const DeploymentReport& report) {
  check_report(report);
  // Categories and variants in first-appearance order.
  std::vector<std::string> categories, variants;
  std::map<std::pair<std::string, std::string>, const DeploymentRow*> cell;
  for (const DeploymentRow& r : report.rows) {
    if (std::find(categories.begin(), categories.end(), r.traversal) == categories.end())
      categories.push_back(r.traversal);
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
      variants.push_back(r.variant);
    cell[{r.variant, r.traversal}] = &r;
  }
  std::vector<BarSeries> series;
  for (const std::string& v : variants) {
    BarSeries s{v, {}, {}};
    for (const std::string& c : categories) {
      const auto it = cell.find({v, c});
      s.values.push_back(it == cell.end() ? 0.0 : it->second->mean);
      s.errors.push_back(it == cell.end() ? 0.0 : it->second->std_dev);
    }
    series.push_back(std::move(s));
  }
  return grouped_bar_svg("Navigation success by deployment condition", "success rate", categories,
                         series, 1.0);
}

std::string tradeoff_curve_svg(std::span<const TradeoffPoint> points) {
  require(!points.empty(), "trade-off sweep is empty");
  LineSeries s;
  s.name = "policy";
  for (const TradeoffPoint& p : points) {
    s.x.push_back(p.rmse_m);
    s.y.push_back(p.success_rate);
    s.errors.push_back(p.stderr_rate);
  }
  return line_plot_svg("Success rate vs motion estimation error", "trajectory RMSE [m]",
                       "success rate", {s}, /*log_x=*/true);
}

std::vector<std::filesystem::path> emit_report(const DeploymentReport& report,
                                               const std::filesystem::path& out_dir) {
  check_report(report);
  std::ostringstream csv, summary;
  write_deployment_csv(report, csv);
  write_deployment_summary_csv(report, summary);
  const std::string svg = success_by_condition_svg(report);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::vector<std::filesystem::path> files{
      out_dir / "deployment.csv", out_dir / "deployment_summary.csv",
      out_dir / "success_by_condition.svg"};
  write_file(files[0], csv.str());
  write_file(files[1], summary.str());
  write_file(files[2], svg);
  return files;
}

std::vector<std::filesystem::path> emit_tradeoff(std::span<const TradeoffPoint> points,
                                                 const std::filesystem::path& out_dir) {
  require(!points.empty(), "trade-off sweep is empty");
  std::ostringstream csv;
  write_tradeoff_csv(points, csv);
  const std::string svg = tradeoff_curve_svg(points);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::vector<std::filesystem::path> files{out_dir / "tradeoff.csv",
                                                 out_dir / "tradeoff_curve.svg"};
  write_file(files[0], csv.str());
  write_file(files[1], svg);
  return files;
}

}  // namespace mvp
