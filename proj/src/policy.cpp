#include "mvp/policy.hpp"

#include <cmath>

namespace mvp {
namespace {

void fill_uniform(Eigen::Map<Eigen::MatrixXd> m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform_real(rng, -bound, bound);
  }
}

Eigen::MatrixXd random_orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  // Sign fix makes the distribution uniform over the orthogonal group.
  const Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (d(j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

PolicyParams init_params(const PolicyShape& shape, std::uint64_t seed) {
  validate(shape);
  PolicyParams p(shape);
  Rng rng = make_rng(seed, "policy.init");
  const Eigen::Index e = shape.encoder_units, a = shape.n_actions, h = shape.lstm_units;

  fill_uniform(p.encoder_weight(), 1.0 / std::sqrt(static_cast<double>(shape.input_dim)), rng);

  auto w_l = p.lstm_weight();
  const double input_bound = 1.0 / std::sqrt(static_cast<double>(e + a));
  for (Eigen::Index j = 0; j < e + a; ++j) {
    for (Eigen::Index i = 0; i < 4 * h; ++i) w_l(i, j) = uniform_real(rng, -input_bound, input_bound);
  }
  for (int gate = 0; gate < 4; ++gate) {
    w_l.block(gate * h, e + a, h, h) = random_orthogonal(h, rng);
  }
  p.lstm_bias().middleRows(h, h).setOnes();

  fill_uniform(p.policy_weight(), 0.01 / std::sqrt(static_cast<double>(h)), rng);
  fill_uniform(p.value_weight(), 1.0 / std::sqrt(static_cast<double>(h)), rng);
  return p;
}

int sample_action(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  require(probs.size() >= 1, "sample_action: empty distribution");
  require((probs.array() >= 0.0).all() && probs.allFinite(),
          "sample_action: negative or non-finite probability");
  require(std::abs(probs.sum() - 1.0) <= 1e-6, "sample_action: probabilities do not sum to 1");
  const double u = uniform_real(rng, 0.0, 1.0) * probs.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u at the very top; return the last action with mass.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
    if (probs(i) > 0.0) return static_cast<int>(i);
  }
  return 0;
}

}  // namespace mvp
