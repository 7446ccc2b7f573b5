#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mvp/common.hpp"
#include "mvp/env.hpp"
#include "mvp/rng.hpp"

namespace mvp {

// Architecture of the recurrent actor-critic:
//
//   e_t = relu(W_e [m; x; g] + b_e)                      (encoder_units)
//   z_t = [e_t; a_{t-1}; h_{t-1}]
//   [i; f; c~; o] = [sig; sig; tanh; sig](W_l z_t + b_l)  (4 * lstm_units)
//   c_t = f * c_{t-1} + i * c~,  h_t = o * tanh(c_t)
//   logits_t = W_p h_t + b_p,  V_t = w_v . h_t + b_v
//
// With prev_action_in_encoder the one-hot a_{t-1} is also appended to the
// encoder input. relu_encoder = false gives a purely affine encoder.
struct PolicyShape {
  int input_dim = 68;
  int n_actions = 2;
  int encoder_units = 512;
  int lstm_units = 256;
  bool relu_encoder = true;
  bool prev_action_in_encoder = false;

  int lstm_input_dim() const { return encoder_units + n_actions + lstm_units; }
  int gate_rows() const { return 4 * lstm_units; }

  bool operator==(const PolicyShape&) const = default;
};

inline PolicyShape make_policy_shape(int descriptor_dim, int n_actions,
                                     bool prev_action_in_encoder = false,
                                     int encoder_units = 512, int lstm_units = 256,
                                     bool relu_encoder = true) {
  PolicyShape s;
  s.input_dim = 2 + descriptor_dim + 2 + (prev_action_in_encoder ? n_actions : 0);
  s.n_actions = n_actions;
  s.encoder_units = encoder_units;
  s.lstm_units = lstm_units;
  s.relu_encoder = relu_encoder;
  s.prev_action_in_encoder = prev_action_in_encoder;
  return s;
}

inline void validate(const PolicyShape& s) {
  require(s.input_dim >= 1 && s.n_actions >= 1 && s.encoder_units >= 1 && s.lstm_units >= 1,
          "policy dimensions must be >= 1");
  require(!s.prev_action_in_encoder || s.input_dim > s.n_actions,
          "policy input_dim too small for the previous-action slot");
}

enum class ParamBlock : int {
  EncoderWeight,
  EncoderBias,
  LstmWeight,
  LstmBias,
  PolicyWeight,
  PolicyBias,
  ValueWeight,
  ValueBias,
};

inline constexpr std::array<ParamBlock, 8> kAllParamBlocks{
    ParamBlock::EncoderWeight, ParamBlock::EncoderBias, ParamBlock::LstmWeight,
    ParamBlock::LstmBias,      ParamBlock::PolicyWeight, ParamBlock::PolicyBias,
    ParamBlock::ValueWeight,   ParamBlock::ValueBias};

struct BlockLayout {
  std::string_view name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

// Blocks are stored back to back, column-major, in kAllParamBlocks order.
inline BlockLayout block_layout(const PolicyShape& s, ParamBlock block) {
  const Eigen::Index e = s.encoder_units, in = s.input_dim, g = s.gate_rows();
  const Eigen::Index zl = s.lstm_input_dim(), a = s.n_actions, h = s.lstm_units;
  const std::array<BlockLayout, 8> all{{
      {"encoder.weight", 0, e, in},
      {"encoder.bias", 0, e, 1},
      {"lstm.weight", 0, g, zl},
      {"lstm.bias", 0, g, 1},
      {"policy.weight", 0, a, h},
      {"policy.bias", 0, a, 1},
      {"value.weight", 0, 1, h},
      {"value.bias", 0, 1, 1},
  }};
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (static_cast<int>(i) == static_cast<int>(block)) {
      BlockLayout out = all[i];
      out.offset = offset;
      return out;
    }
    offset += all[i].size();
  }
  return {};
}

inline Eigen::Index parameter_count(const PolicyShape& s) {
  const BlockLayout last = block_layout(s, ParamBlock::ValueBias);
  return last.offset + last.size();
}

// All weights in one flat vector with typed block views. The same type
// serves as the gradient accumulator.
template <typename Scalar>
class PolicyParamsT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  PolicyParamsT() = default;
  explicit PolicyParamsT(const PolicyShape& shape)
      : shape_(shape), values_(Vector::Zero(parameter_count(shape))) {}

  const PolicyShape& shape() const { return shape_; }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  MatrixMap block(ParamBlock b) {
    const BlockLayout l = block_layout(shape_, b);
    return MatrixMap(values_.data() + l.offset, l.rows, l.cols);
  }
  ConstMatrixMap block(ParamBlock b) const {
    const BlockLayout l = block_layout(shape_, b);
    return ConstMatrixMap(values_.data() + l.offset, l.rows, l.cols);
  }

  MatrixMap encoder_weight() { return block(ParamBlock::EncoderWeight); }
  ConstMatrixMap encoder_weight() const { return block(ParamBlock::EncoderWeight); }
  MatrixMap encoder_bias() { return block(ParamBlock::EncoderBias); }
  ConstMatrixMap encoder_bias() const { return block(ParamBlock::EncoderBias); }
  MatrixMap lstm_weight() { return block(ParamBlock::LstmWeight); }
  ConstMatrixMap lstm_weight() const { return block(ParamBlock::LstmWeight); }
  MatrixMap lstm_bias() { return block(ParamBlock::LstmBias); }
  ConstMatrixMap lstm_bias() const { return block(ParamBlock::LstmBias); }
  MatrixMap policy_weight() { return block(ParamBlock::PolicyWeight); }
  ConstMatrixMap policy_weight() const { return block(ParamBlock::PolicyWeight); }
  MatrixMap policy_bias() { return block(ParamBlock::PolicyBias); }
  ConstMatrixMap policy_bias() const { return block(ParamBlock::PolicyBias); }
  MatrixMap value_weight() { return block(ParamBlock::ValueWeight); }
  ConstMatrixMap value_weight() const { return block(ParamBlock::ValueWeight); }
  MatrixMap value_bias() { return block(ParamBlock::ValueBias); }
  ConstMatrixMap value_bias() const { return block(ParamBlock::ValueBias); }

  template <typename Other>
  PolicyParamsT<Other> cast() const {
    PolicyParamsT<Other> out(shape_);
    out.values() = values_.template cast<Other>();
    return out;
  }

 private:
  PolicyShape shape_;
  Vector values_;
};

using PolicyParams = PolicyParamsT<double>;

// Orthogonal recurrent blocks (one per gate), uniform(+-1/sqrt(fan_in))
// input weights, policy head scaled by 0.01, zero biases except the forget
// gate bias = 1.
PolicyParams init_params(const PolicyShape& shape, std::uint64_t seed);

template <typename Scalar>
struct RecurrentStateT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector hidden;
  Vector cell;

  static RecurrentStateT zeros(const PolicyShape& s) {
    return {Vector::Zero(s.lstm_units), Vector::Zero(s.lstm_units)};
  }
};

using RecurrentState = RecurrentStateT<double>;

template <typename Scalar>
struct ForwardOutputT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector action_logits;
  Vector action_probs;
  Scalar value = 0;
  RecurrentStateT<Scalar> next_state;
};

using ForwardOutput = ForwardOutputT<double>;

// Encoder input [m; x; g] (plus the previous-action one-hot when the shape
// routes it through the encoder).
inline Eigen::VectorXd encode_observation(const Observation& obs, const PolicyShape& s) {
  const Eigen::Index d = obs.x.size();
  const Eigen::Index expected = 4 + d + (s.prev_action_in_encoder ? obs.prev_action.size() : 0);
  require(expected == s.input_dim && obs.prev_action.size() == s.n_actions,
          "observation dims (descriptor " + std::to_string(d) + ", actions " +
              std::to_string(obs.prev_action.size()) + ") do not match policy input_dim " +
              std::to_string(s.input_dim) + " / n_actions " + std::to_string(s.n_actions));
  Eigen::VectorXd in(s.input_dim);
  in << obs.m, obs.x, obs.g;
  if (s.prev_action_in_encoder) in.tail(s.n_actions) = obs.prev_action;
  return in;
}

// A batch of B sequences replayed in lock step over T steps.
template <typename Scalar>
struct SequenceBatchT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  std::vector<Matrix> inputs;        // T x (input_dim x B)
  std::vector<Matrix> prev_actions;  // T x (n_actions x B), one-hot or zero
  std::vector<RowVector> carry;      // T x (1 x B): 0 zeroes the incoming state
  Matrix h0;                         // lstm_units x B
  Matrix c0;

  int steps() const { return static_cast<int>(inputs.size()); }
  int batch() const { return static_cast<int>(h0.cols()); }
};

using SequenceBatch = SequenceBatchT<double>;

// Activations cached by the forward pass for backpropagation.
template <typename Scalar>
struct SequenceTraceT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Step {
    Matrix encoder_pre;  // E x B
    Matrix z;            // (E + A + H) x B, with the masked h_{t-1}
    Matrix gates;        // 4H x B after activation, order i, f, c~, o
    Matrix cell_prev;    // masked c_{t-1}
    Matrix cell;
    Matrix cell_tanh;
    Matrix hidden;
    Matrix logits;       // A x B
    Matrix probs;
    RowVector values;    // 1 x B
  };
  std::vector<Step> steps;
};

using SequenceTrace = SequenceTraceT<double>;

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_columns(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& logits) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const Scalar mx = logits.col(b).maxCoeff();
    out.col(b) = (logits.col(b).array() - mx).exp().matrix();
    out.col(b) /= out.col(b).sum();
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
SequenceTraceT<Scalar> forward_sequence(const PolicyParamsT<Scalar>& params,
                                        const SequenceBatchT<Scalar>& batch) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const PolicyShape& s = params.shape();
  const Eigen::Index e = s.encoder_units, a = s.n_actions, h = s.lstm_units;
  const int steps = batch.steps();
  const Eigen::Index b = batch.batch();
  require(static_cast<int>(batch.prev_actions.size()) == steps &&
              static_cast<int>(batch.carry.size()) == steps,
          "sequence batch: inconsistent step counts");
  require(batch.h0.rows() == h && batch.c0.rows() == h && batch.c0.cols() == b,
          "sequence batch: recurrent state does not match lstm_units " + std::to_string(h));

  const auto w_e = params.encoder_weight();
  const auto b_e = params.encoder_bias();
  const auto w_l = params.lstm_weight();
  const auto b_l = params.lstm_bias();
  const auto w_p = params.policy_weight();
  const auto b_p = params.policy_bias();
  const auto w_v = params.value_weight();
  const Scalar b_v = params.value_bias()(0, 0);

  SequenceTraceT<Scalar> trace;
  trace.steps.resize(static_cast<std::size_t>(steps));
  const Matrix* h_prev = &batch.h0;
  const Matrix* c_prev = &batch.c0;
  for (int t = 0; t < steps; ++t) {
    auto& st = trace.steps[static_cast<std::size_t>(t)];
    const Matrix& x = batch.inputs[static_cast<std::size_t>(t)];
    require(x.rows() == s.input_dim && x.cols() == b,
            "sequence batch: input has " + std::to_string(x.rows()) + " rows, policy expects " +
                std::to_string(s.input_dim));
    const auto& carry = batch.carry[static_cast<std::size_t>(t)];

    st.encoder_pre.noalias() = w_e * x;
    st.encoder_pre.colwise() += b_e.col(0);

    st.z.resize(s.lstm_input_dim(), b);
    if (s.relu_encoder) {
      st.z.topRows(e) = st.encoder_pre.cwiseMax(Scalar(0));
    } else {
      st.z.topRows(e) = st.encoder_pre;
    }
    st.z.middleRows(e, a) = batch.prev_actions[static_cast<std::size_t>(t)];
    st.z.bottomRows(h) = h_prev->array().rowwise() * carry.array();
    st.cell_prev = c_prev->array().rowwise() * carry.array();

    Matrix pre;
    pre.noalias() = w_l * st.z;
    pre.colwise() += b_l.col(0);
    st.gates.resize(4 * h, b);
    st.gates.topRows(2 * h) = detail::sigmoid(pre.topRows(2 * h).array()).matrix();
    st.gates.middleRows(2 * h, h) = pre.middleRows(2 * h, h).array().tanh().matrix();
    st.gates.bottomRows(h) = detail::sigmoid(pre.bottomRows(h).array()).matrix();

    const auto in_gate = st.gates.topRows(h).array();
    const auto forget_gate = st.gates.middleRows(h, h).array();
    const auto cand = st.gates.middleRows(2 * h, h).array();
    const auto out_gate = st.gates.bottomRows(h).array();
    st.cell = (forget_gate * st.cell_prev.array() + in_gate * cand).matrix();
    st.cell_tanh = st.cell.array().tanh().matrix();
    st.hidden = (out_gate * st.cell_tanh.array()).matrix();

    st.logits.noalias() = w_p * st.hidden;
    st.logits.colwise() += b_p.col(0);
    st.probs = detail::softmax_columns<Scalar>(st.logits);
    st.values.noalias() = w_v * st.hidden;
    st.values.array() += b_v;

    h_prev = &st.hidden;
    c_prev = &st.cell;
  }
  return trace;
}

// Reverse-mode gradient of a scalar loss whose partial derivatives with
// respect to every step's logits (A x B) and values (1 x B) are supplied.
// The incoming state at a step with carry 0 is a constant, so no gradient
// crosses an episode boundary; h0 and c0 are constants as well.
template <typename Scalar>
PolicyParamsT<Scalar> backward_sequence(
    const PolicyParamsT<Scalar>& params, const SequenceBatchT<Scalar>& batch,
    const SequenceTraceT<Scalar>& trace,
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& d_logits,
    const std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>& d_values) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const PolicyShape& s = params.shape();
  const Eigen::Index e = s.encoder_units, a = s.n_actions, h = s.lstm_units;
  const int steps = batch.steps();
  const Eigen::Index b = batch.batch();
  require(static_cast<int>(trace.steps.size()) == steps &&
              static_cast<int>(d_logits.size()) == steps &&
              static_cast<int>(d_values.size()) == steps,
          "backward: trace and upstream gradients must cover every step");

  PolicyParamsT<Scalar> grad(s);
  auto g_we = grad.encoder_weight();
  auto g_be = grad.encoder_bias();
  auto g_wl = grad.lstm_weight();
  auto g_bl = grad.lstm_bias();
  auto g_wp = grad.policy_weight();
  auto g_bp = grad.policy_bias();
  auto g_wv = grad.value_weight();
  auto g_bv = grad.value_bias();

  const auto w_l = params.lstm_weight();
  const auto w_p = params.policy_weight();
  const auto w_v = params.value_weight();

  Matrix dh_next = Matrix::Zero(h, b);
  Matrix dc_next = Matrix::Zero(h, b);
  Matrix d_gates(4 * h, b);
  Matrix dz;
  for (int t = steps - 1; t >= 0; --t) {
    const auto& st = trace.steps[static_cast<std::size_t>(t)];
    const Matrix& dl = d_logits[static_cast<std::size_t>(t)];
    const auto& dv = d_values[static_cast<std::size_t>(t)];
    require(dl.rows() == a && dl.cols() == b && dv.cols() == b,
            "backward: upstream gradient shape mismatch");

    g_wp.noalias() += dl * st.hidden.transpose();
    g_bp.col(0) += dl.rowwise().sum();
    g_wv.noalias() += dv * st.hidden.transpose();
    g_bv(0, 0) += dv.sum();

    Matrix dh = dh_next;
    dh.noalias() += w_p.transpose() * dl;
    dh.noalias() += w_v.transpose() * dv;

    const auto in_gate = st.gates.topRows(h).array();
    const auto forget_gate = st.gates.middleRows(h, h).array();
    const auto cand = st.gates.middleRows(2 * h, h).array();
    const auto out_gate = st.gates.bottomRows(h).array();
    const auto tc = st.cell_tanh.array();

    const Matrix dc =
        (dc_next.array() + dh.array() * out_gate * (Scalar(1) - tc.square())).matrix();
    d_gates.topRows(h) = (dc.array() * cand * in_gate * (Scalar(1) - in_gate)).matrix();
    d_gates.middleRows(h, h) =
        (dc.array() * st.cell_prev.array() * forget_gate * (Scalar(1) - forget_gate)).matrix();
    d_gates.middleRows(2 * h, h) = (dc.array() * in_gate * (Scalar(1) - cand.square())).matrix();
    d_gates.bottomRows(h) = (dh.array() * tc * out_gate * (Scalar(1) - out_gate)).matrix();

    g_wl.noalias() += d_gates * st.z.transpose();
    g_bl.col(0) += d_gates.rowwise().sum();
    dz.noalias() = w_l.transpose() * d_gates;

    const auto& carry = batch.carry[static_cast<std::size_t>(t)];
    dh_next = dz.bottomRows(h).array().rowwise() * carry.array();
    dc_next = (dc.array() * forget_gate).rowwise() * carry.array();

    Matrix d_enc = dz.topRows(e);
    if (s.relu_encoder) {
      d_enc = (st.encoder_pre.array() > Scalar(0)).select(d_enc, Scalar(0));
    }
    g_we.noalias() += d_enc * batch.inputs[static_cast<std::size_t>(t)].transpose();
    g_be.col(0) += d_enc.rowwise().sum();
  }
  return grad;
}

// Single-observation forward pass.
template <typename Scalar>
ForwardOutputT<Scalar> forward_step(const PolicyParamsT<Scalar>& params, const Observation& obs,
                                    const RecurrentStateT<Scalar>& state) {
  const PolicyShape& s = params.shape();
  require(state.hidden.size() == s.lstm_units && state.cell.size() == s.lstm_units,
          "forward_step: recurrent state does not match lstm_units");
  SequenceBatchT<Scalar> batch;
  batch.inputs.push_back(encode_observation(obs, s).template cast<Scalar>());
  batch.prev_actions.push_back(obs.prev_action.template cast<Scalar>());
  batch.carry.push_back(Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Ones(1));
  batch.h0 = state.hidden;
  batch.c0 = state.cell;
  const auto trace = forward_sequence(params, batch);
  const auto& st = trace.steps.front();
  ForwardOutputT<Scalar> out;
  out.action_logits = st.logits.col(0);
  out.action_probs = st.probs.col(0);
  out.value = st.values(0);
  out.next_state.hidden = st.hidden.col(0);
  out.next_state.cell = st.cell.col(0);
  return out;
}

// Categorical draw. Rejects negative entries or a sum off by more than 1e-6.
int sample_action(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

inline int argmax_action(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

// A loss that is linear/quadratic in the network outputs, used to verify
// gradients:
//   L = sum_t sum_b [ sum_a W_tab log pi_tab + c_tb V_tb + 0.5 u_tb (V_tb - y_tb)^2 ]
template <typename Scalar>
struct ProbeLossT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  std::vector<Matrix> log_prob_weights;
  std::vector<RowVector> value_linear;
  std::vector<RowVector> value_quadratic;
  std::vector<RowVector> value_targets;

  Scalar operator()(const SequenceTraceT<Scalar>& trace) const {
    Scalar total = 0;
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      const auto& st = trace.steps[t];
      total += (log_prob_weights[t].array() * st.probs.array().log()).sum();
      total += (value_linear[t].array() * st.values.array()).sum();
      total += Scalar(0.5) *
               (value_quadratic[t].array() * (st.values - value_targets[t]).array().square()).sum();
    }
    return total;
  }

  void gradient(const SequenceTraceT<Scalar>& trace, std::vector<Matrix>& d_logits,
                std::vector<RowVector>& d_values) const {
    d_logits.resize(trace.steps.size());
    d_values.resize(trace.steps.size());
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      const auto& st = trace.steps[t];
      const Matrix& w = log_prob_weights[t];
      // d/dlogit_k sum_a w_a log pi_a = w_k - pi_k sum_a w_a
      d_logits[t] = w - (st.probs.array().rowwise() * w.colwise().sum().array()).matrix();
      d_values[t] = (value_linear[t].array() +
                     value_quadratic[t].array() * (st.values - value_targets[t]).array())
                        .matrix();
    }
  }
};

using ProbeLoss = ProbeLossT<double>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  Eigen::Index max_params = 0;              // 0 checks every parameter
  std::uint64_t seed = 0;                   // subsample selection
  std::vector<ParamBlock> blocks;           // empty means all blocks
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Eigen::Index checked = 0;
};

// Compares backward_sequence against central differences of `loss` over the
// selected parameters. Relative error uses max(|analytic|, |numeric|, 1e-8)
// as the denominator.
template <typename Scalar, typename Loss>
GradCheckResult finite_difference_check(const PolicyParamsT<Scalar>& params,
                                        const SequenceBatchT<Scalar>& batch, const Loss& loss,
                                        const GradCheckOptions& options) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  const auto trace = forward_sequence(params, batch);
  std::vector<Matrix> d_logits;
  std::vector<RowVector> d_values;
  loss.gradient(trace, d_logits, d_values);
  const PolicyParamsT<Scalar> analytic = backward_sequence(params, batch, trace, d_logits, d_values);

  std::vector<Eigen::Index> candidates;
  const auto blocks = options.blocks.empty()
                          ? std::vector<ParamBlock>(kAllParamBlocks.begin(), kAllParamBlocks.end())
                          : options.blocks;
  for (ParamBlock blk : blocks) {
    const BlockLayout l = block_layout(params.shape(), blk);
    for (Eigen::Index i = 0; i < l.size(); ++i) candidates.push_back(l.offset + i);
  }
  if (options.max_params > 0 && static_cast<Eigen::Index>(candidates.size()) > options.max_params) {
    Rng rng = make_rng(options.seed, "gradcheck.subsample");
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(static_cast<std::size_t>(options.max_params));
    std::sort(candidates.begin(), candidates.end());
  }

  GradCheckResult result;
  PolicyParamsT<Scalar> probe = params;
  const Scalar eps = static_cast<Scalar>(options.epsilon);
  for (Eigen::Index idx : candidates) {
    const Scalar original = probe.values()(idx);
    probe.values()(idx) = original + eps;
    const Scalar plus = loss(forward_sequence(probe, batch));
    probe.values()(idx) = original - eps;
    const Scalar minus = loss(forward_sequence(probe, batch));
    probe.values()(idx) = original;

    const double numeric = static_cast<double>((plus - minus) / (Scalar(2) * eps));
    const double exact = static_cast<double>(analytic.values()(idx));
    const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
    const double rel = std::abs(exact - numeric) / denom;
    if (rel > result.max_relative_error || result.worst_index < 0) {
      result.max_relative_error = rel;
      result.worst_index = idx;
      result.analytic = exact;
      result.numeric = numeric;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace mvp
