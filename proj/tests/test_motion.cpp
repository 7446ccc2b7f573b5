#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mvp/motion.hpp"
#include "mvp/rng.hpp"

using namespace mvp;

namespace {

MotionModelParams params(MotionKind kind, double sigma, std::vector<IndexRange> dropout = {}) {
  MotionModelParams p;
  p.kind = kind;
  p.noise_sigma = sigma;
  p.dropout = std::move(dropout);
  return p;
}

BoundingBox box(double x0, double y0, double x1, double y1) {
  BoundingBox b;
  b.min = Vec2(x0, y0);
  b.max = Vec2(x1, y1);
  return b;
}

// RMSE of one dead-reckoned straight run of `steps` unit steps.
double drift_rmse(double sigma, int steps, Rng& rng) {
  const MotionModelParams p = params(MotionKind::Vo, sigma);
  std::vector<Vec2> rel;
  std::vector<Vec2> truth{Vec2::Zero()};
  for (int k = 0; k < steps; ++k) {
    const Vec2 a(k, 0.0), b(k + 1, 0.0);
    rel.push_back(vo_relative_step(a, b, p, rng));
    truth.push_back(b);
  }
  const auto est = dead_reckon(Vec2::Zero(), rel);
  return trajectory_rmse(est, truth);
}

}  // namespace

TEST_CASE("noiseless gps reports the true pose") {
  Rng rng = make_rng(1, "t");
  const auto e = gps_estimate(Vec2(10, 20), 3, params(MotionKind::Gps, 0.0), {}, rng);
  CHECK(e.available);
  CHECK(e.position == Vec2(10, 20));
}

TEST_CASE("gps holds the last reading inside a dropout") {
  Rng rng = make_rng(2, "t");
  const MotionModelParams p = params(MotionKind::Gps, 0.5, {{4, 8}});
  const MotionEstimate before = gps_estimate(Vec2(3, 3), 3, p, {}, rng);
  MotionEstimate held = before;
  for (int i = 4; i <= 8; ++i) {
    held = gps_estimate(Vec2(i, i), i, p, held, rng);
    CHECK_FALSE(held.available);
    CHECK(held.position == before.position);
  }
  const MotionEstimate after = gps_estimate(Vec2(9, 9), 9, p, held, rng);
  CHECK(after.available);
  CHECK(after.position != before.position);
}

TEST_CASE("an episode starting inside a dropout holds the true start pose") {
  MotionEstimator est(params(MotionKind::Gps, 1.0, {{0, 10}}));
  Rng rng = make_rng(3, "t");
  const auto start = est.reset(Vec2(2, -1), 0, rng);
  CHECK_FALSE(start.available);
  CHECK(start.position == Vec2(2, -1));
  for (int i = 1; i <= 10; ++i) CHECK(est.advance(Vec2(i, 0), Vec2(i + 1, 0), i, rng).position == Vec2(2, -1));
}

TEST_CASE("gps error magnitude follows the Rayleigh mean") {
  Rng rng = make_rng(4, "t");
  const MotionModelParams p = params(MotionKind::Gps, 1.0);
  double total = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    total += (gps_estimate(Vec2(5, 5), 0, p, {}, rng).position - Vec2(5, 5)).norm();
  }
  const double expected = std::sqrt(std::numbers::pi / 2.0);
  CHECK(std::abs(total / n - expected) < 0.03 * expected);
}

TEST_CASE("relative steps without noise are exact displacements") {
  Rng rng = make_rng(5, "t");
  const MotionModelParams vo = params(MotionKind::Vo, 0.0);
  CHECK(vo_relative_step(Vec2(0, 0), Vec2(1, 0), vo, rng) == Vec2(1, 0));
  CHECK(vo_relative_step(Vec2(3, 4), Vec2(3, 4), vo, rng) == Vec2(0, 0));
}

TEST_CASE("relative step noise has the configured per-axis spread") {
  Rng rng = make_rng(6, "t");
  const MotionModelParams vo = params(MotionKind::Vo, 0.1);
  const int n = 10000;
  Eigen::MatrixXd err(2, n);
  for (int k = 0; k < n; ++k) err.col(k) = vo_relative_step(Vec2(0, 0), Vec2(1, 0), vo, rng) - Vec2(1, 0);
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::ArrayXd row = err.row(axis).transpose().array();
    const double sd = std::sqrt((row - row.mean()).square().sum() / (n - 1));
    CHECK(std::abs(sd - 0.1) < 0.005);
  }
}

TEST_CASE("models reject the wrong estimator kind") {
  Rng rng = make_rng(7, "t");
  CHECK_THROWS_AS(gps_estimate(Vec2(0, 0), 0, params(MotionKind::Vo, 0.1), {}, rng), ValidationError);
  CHECK_THROWS_AS(vo_relative_step(Vec2(0, 0), Vec2(1, 0), params(MotionKind::Gps, 0.1), rng),
                  ValidationError);
}

TEST_CASE("radar odometry is ten times tighter than visual odometry by default") {
  CHECK(default_sigma(MotionKind::Ro) == doctest::Approx(default_sigma(MotionKind::Vo) / 10.0));
}

TEST_CASE("dead reckoning integrates steps from the anchor") {
  const std::vector<Vec2> none;
  const auto single = dead_reckon(Vec2(1, 2), none);
  REQUIRE(single.size() == 1);
  CHECK(single[0].position == Vec2(1, 2));

  // Zero-noise steps along a polyline reproduce the poses exactly.
  std::vector<Vec2> truth{Vec2(0, 0), Vec2(1, 0), Vec2(1.5, 0.5), Vec2(1.5, 2.0)};
  std::vector<Vec2> steps;
  Rng rng = make_rng(8, "t");
  for (std::size_t k = 1; k < truth.size(); ++k) {
    steps.push_back(vo_relative_step(truth[k - 1], truth[k], params(MotionKind::Vo, 0.0), rng));
  }
  const auto est = dead_reckon(truth[0], steps);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    CHECK(est[k].position == truth[k]);
    CHECK(est[k].available);
  }
  CHECK(trajectory_rmse(est, truth) == 0.0);
}

TEST_CASE("noiseless dead reckoning stays within 1e-9 over 10^4 steps") {
  Rng rng = make_rng(9, "t");
  std::vector<Vec2> truth{Vec2(0, 0)};
  for (int k = 1; k <= 10000; ++k) {
    const double a = 0.001 * k;
    truth.push_back(truth.back() + Vec2(std::cos(a), std::sin(a)) * 0.7);
  }
  std::vector<Vec2> steps;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    steps.push_back(vo_relative_step(truth[k - 1], truth[k], params(MotionKind::Vo, 0.0), rng));
  }
  const auto est = dead_reckon(truth[0], steps);
  double worst = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    worst = std::max(worst, (est[k].position - truth[k]).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("final dead-reckoning error follows the random-walk spread") {
  Rng rng = make_rng(10, "t");
  const double sigma = 0.05;
  const int steps = 100, trials = 1000;
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec2 pos = Vec2::Zero();
    for (int k = 0; k < steps; ++k) {
      pos += vo_relative_step(Vec2(k, 0), Vec2(k + 1, 0), params(MotionKind::Vo, sigma), rng);
    }
    total += (pos - Vec2(steps, 0)).norm();
  }
  const double expected = sigma * std::sqrt(static_cast<double>(steps)) * std::sqrt(std::numbers::pi / 2.0);
  CHECK(std::abs(total / trials - expected) < 0.05 * expected);
}

TEST_CASE("expected drift grows with noise and episode length") {
  Rng rng = make_rng(11, "t");
  const std::vector<double> sigmas{0.02, 0.1, 0.5};
  const std::vector<int> lengths{10, 40, 160};
  const int trials = 400;
  Eigen::MatrixXd mean(3, 3), half(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Eigen::ArrayXd v(trials);
      for (int t = 0; t < trials; ++t) {
        v(t) = drift_rmse(sigmas[static_cast<std::size_t>(i)], lengths[static_cast<std::size_t>(j)], rng);
      }
      mean(i, j) = v.mean();
      half(i, j) = 2.576 * std::sqrt((v - v.mean()).square().sum() / (trials - 1) / trials);
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i + 1 < 3) CHECK(mean(i, j) + half(i, j) < mean(i + 1, j) - half(i + 1, j));
      if (j + 1 < 3) CHECK(mean(i, j) + half(i, j) < mean(i, j + 1) - half(i, j + 1));
    }
  }
}

TEST_CASE("motion feature is the affine box map, clamped outside") {
  const BoundingBox b = box(0, 0, 10, 20);
  CHECK(motion_feature(Vec2(5, 10), b).isApprox(Vec2(0, 0)));
  CHECK(motion_feature(Vec2(10, 20), b) == Vec2(1, 1));
  CHECK(motion_feature(Vec2(2.5, 15), b).isApprox(Vec2(-0.5, 0.5)));
  CHECK(motion_feature(Vec2(-100, 30), b) == Vec2(-1, 1));
  CHECK_THROWS_AS(motion_feature(Vec2(0, 0), box(0, 0, 0, 1)), ValidationError);
}

TEST_CASE("motion feature stays inside the unit square for arbitrary inputs") {
  Rng rng = make_rng(12, "t");
  const BoundingBox b = box(-3, 2, 7, 4);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 p(uniform_real(rng, -50, 50), uniform_real(rng, -50, 50));
    const Vec2 f = motion_feature(p, b);
    CHECK(f.cwiseAbs().maxCoeff() <= 1.0);
    if (p.x() >= -3 && p.x() <= 7 && p.y() >= 2 && p.y() <= 4) {
      const Vec2 exact(2.0 * (p.x() + 3) / 10.0 - 1.0, 2.0 * (p.y() - 2) / 2.0 - 1.0);
      CHECK((f - exact).norm() < 1e-12);
    }
  }
}

TEST_CASE("trajectory rmse matches hand evaluation") {
  const std::vector<Vec2> truth{Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)};
  std::vector<MotionEstimate> same{{Vec2(0, 0), true}, {Vec2(1, 1), true}, {Vec2(2, 2), true}};
  CHECK(trajectory_rmse(same, truth) == 0.0);

  std::vector<MotionEstimate> shifted;
  for (const Vec2& p : truth) shifted.push_back({p + Vec2(3, 4), true});
  CHECK(trajectory_rmse(shifted, truth) == doctest::Approx(5.0).epsilon(1e-15));

  const std::vector<Vec2> two{Vec2(0, 0), Vec2(0, 0)};
  const std::vector<MotionEstimate> mixed{{Vec2(0, 0), true}, {Vec2(3, 4), true}};
  CHECK(trajectory_rmse(mixed, two) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));

  CHECK_THROWS_AS(trajectory_rmse(std::span<const MotionEstimate>(), std::span<const Vec2>()),
                  ValidationError);
  CHECK_THROWS_AS(trajectory_rmse(mixed, truth), ValidationError);
}

TEST_CASE("index ranges parse, format and validate") {
  const auto r = parse_index_ranges("0-9, 20-29,35");
  REQUIRE(r.size() == 3);
  CHECK(r[0] == IndexRange{0, 9});
  CHECK(r[2] == IndexRange{35, 35});
  CHECK(format_index_ranges(r) == "0-9,20-29,35");
  CHECK(parse_index_ranges("").empty());
  CHECK_THROWS_AS(parse_index_ranges("5-x"), ValidationError);

  CHECK_NOTHROW(validate(params(MotionKind::Gps, 0.5, {{0, 9}, {20, 29}}), 100));
  CHECK_THROWS_AS(validate(params(MotionKind::Gps, 0.5, {{0, 9}, {5, 12}}), 100), ValidationError);
  CHECK_THROWS_AS(validate(params(MotionKind::Gps, 0.5, {{90, 100}}), 100), ValidationError);
  CHECK_THROWS_AS(validate(params(MotionKind::Vo, 0.1, {{0, 9}}), 100), ValidationError);
  CHECK_THROWS_AS(validate(params(MotionKind::Vo, -0.1), 100), ValidationError);
}
