#include "dualcap/model.hpp"

#include <cmath>

#include "dualcap/error.hpp"
#include "dualcap/features.hpp"
#include "dualcap/numerics.hpp"
#include "dualcap/rng.hpp"

namespace dualcap {
namespace {

const std::array<std::string_view, kTensorCount> kNames = {
    "embedding.weight",          "embedding.bias",     "lstm1.input_weights",
    "lstm1.recurrent_weights",   "lstm1.bias",         "lstm2.input_weights",
    "lstm2.recurrent_weights",   "lstm2.bias",         "visual.weight",
    "visual.bias",               "output.weight",      "output.bias",
};

LSTMCellParams zero_cell(std::size_t input_dim, std::size_t hidden) {
  return {Matrix(4 * hidden, input_dim), Matrix(4 * hidden, hidden), Matrix(4 * hidden, 1)};
}

void check_dims(const ModelDims& dims) {
  if (dims.vocab_size == 0 || dims.embed_dim == 0 || dims.hidden == 0 || dims.pooled_dim == 0) {
    throw ArgumentError("model dims must be positive (vocab " + std::to_string(dims.vocab_size) +
                        ", embed " + std::to_string(dims.embed_dim) + ", hidden " +
                        std::to_string(dims.hidden) + ", pooled " +
                        std::to_string(dims.pooled_dim) + ")");
  }
}

void add_into(std::span<double> acc, std::span<const double> v, double scale = 1.0) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

// Backprop through one cell step. `dh` and `dc` hold the gradient flowing
// into this step's outputs; on return they hold the gradient for h_prev and
// c_prev. Returns the gradient with respect to the step input x.
Vector lstm_backward_step(const LSTMCellParams& cell, const LSTMStepCache& cache, Vector& dh,
                          Vector& dc, LSTMCellParams& grad) {
  const std::size_t h = cell.hidden();
  Vector gate_grad(4 * h);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = cache.input_gate[k];
    const double f = cache.forget_gate[k];
    const double g = cache.candidate[k];
    const double o = cache.output_gate[k];
    const double tc = cache.tanh_c[k];

    const double d_o = dh[k] * tc;
    const double d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
    gate_grad[k] = d_c * g * i * (1.0 - i);
    gate_grad[h + k] = d_c * cache.c_prev[k] * f * (1.0 - f);
    gate_grad[2 * h + k] = d_c * i * (1.0 - g * g);
    gate_grad[3 * h + k] = d_o * o * (1.0 - o);
    dc[k] = d_c * f;
  }
  add_outer(grad.input_weights, gate_grad, cache.x);
  add_outer(grad.recurrent_weights, gate_grad, cache.h_prev);
  add_into(grad.gate_bias.values(), gate_grad);
  dh = matvec_transposed(cell.recurrent_weights, gate_grad);
  return matvec_transposed(cell.input_weights, gate_grad);
}

Vector dropout_mask(std::size_t n, const ForwardOptions& options, Rng& rng) {
  Vector mask(n, 1.0);
  if (options.mode == Mode::eval || options.dropout_rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - options.dropout_rate);
  for (auto& m : mask) m = rng.uniform() < options.dropout_rate ? 0.0 : keep_scale;
  return mask;
}

}  // namespace

std::array<Matrix*, kTensorCount> ModelParams::tensors() {
  return {&embedding,          &embedding_bias,     &lstm1.input_weights,
          &lstm1.recurrent_weights, &lstm1.gate_bias, &lstm2.input_weights,
          &lstm2.recurrent_weights, &lstm2.gate_bias, &visual_projection,
          &visual_bias,        &output_weights,     &output_bias};
}

std::array<const Matrix*, kTensorCount> ModelParams::tensors() const {
  return {&embedding,          &embedding_bias,     &lstm1.input_weights,
          &lstm1.recurrent_weights, &lstm1.gate_bias, &lstm2.input_weights,
          &lstm2.recurrent_weights, &lstm2.gate_bias, &visual_projection,
          &visual_bias,        &output_weights,     &output_bias};
}

const std::array<std::string_view, kTensorCount>& ModelParams::tensor_names() { return kNames; }

ModelParams ModelParams::zeros(const ModelDims& dims) {
  check_dims(dims);
  ModelParams p;
  p.dims = dims;
  p.embedding = Matrix(dims.embed_dim, dims.vocab_size);
  p.embedding_bias = Matrix(dims.embed_dim, 1);
  p.lstm1 = zero_cell(dims.embed_dim, dims.hidden);
  p.lstm2 = zero_cell(dims.embed_dim + dims.hidden, dims.hidden);
  p.visual_projection = Matrix(dims.hidden, dims.pooled_dim);
  p.visual_bias = Matrix(dims.hidden, 1);
  p.output_weights = Matrix(dims.vocab_size, dims.hidden);
  p.output_bias = Matrix(dims.vocab_size, 1);
  return p;
}

ParamSet ModelParams::to_param_set() const {
  ParamSet set;
  const auto ts = tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) set.push_back({std::string(kNames[k]), *ts[k]});
  return set;
}

ModelParams ModelParams::from_param_set(const ModelDims& dims, const ParamSet& set) {
  ModelParams p = zeros(dims);
  if (set.size() != kTensorCount) {
    throw DimensionError("expected " + std::to_string(kTensorCount) + " tensors, got " +
                         std::to_string(set.size()));
  }
  auto ts = p.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    if (!ts[k]->same_shape(set[k].value)) {
      throw DimensionError("tensor '" + std::string(kNames[k]) + "' expected shape " +
                           ts[k]->shape_string() + ", got " + set[k].value.shape_string());
    }
    *ts[k] = set[k].value;
  }
  return p;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(dims);
  Rng rng(seed);
  for (Matrix* m : {&p.embedding, &p.lstm1.input_weights, &p.lstm1.recurrent_weights,
                    &p.lstm2.input_weights, &p.lstm2.recurrent_weights, &p.visual_projection,
                    &p.output_weights}) {
    for (auto& v : m->values()) v = rng.uniform(-kInitRange, kInitRange);
  }
  for (LSTMCellParams* cell : {&p.lstm1, &p.lstm2}) {
    for (std::size_t k = 0; k < dims.hidden; ++k) cell->gate_bias[dims.hidden + k] = 1.0;
  }
  return p;
}

LSTMStepCache lstm_step_cached(const LSTMCellParams& cell, std::span<const double> x,
                               std::span<const double> h_prev, std::span<const double> c_prev) {
  const std::size_t h = cell.hidden();
  if (x.size() != cell.input_dim() || h_prev.size() != h || c_prev.size() != h ||
      cell.input_weights.rows() != 4 * h || cell.gate_bias.size() != 4 * h) {
    throw DimensionError("lstm_step: cell expects input " + std::to_string(cell.input_dim()) +
                         " and hidden " + std::to_string(h) + ", got input " +
                         std::to_string(x.size()) + ", h " + std::to_string(h_prev.size()) +
                         ", c " + std::to_string(c_prev.size()));
  }
  Vector pre = matvec(cell.input_weights, x);
  const Vector rec = matvec(cell.recurrent_weights, h_prev);
  for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += rec[k] + cell.gate_bias[k];

  LSTMStepCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.c_prev.assign(c_prev.begin(), c_prev.end());
  cache.input_gate.resize(h);
  cache.forget_gate.resize(h);
  cache.candidate.resize(h);
  cache.output_gate.resize(h);
  cache.c.resize(h);
  cache.tanh_c.resize(h);
  cache.h.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    cache.input_gate[k] = sigmoid(pre[k]);
    cache.forget_gate[k] = sigmoid(pre[h + k]);
    cache.candidate[k] = std::tanh(pre[2 * h + k]);
    cache.output_gate[k] = sigmoid(pre[3 * h + k]);
    cache.c[k] = cache.forget_gate[k] * c_prev[k] + cache.input_gate[k] * cache.candidate[k];
    cache.tanh_c[k] = std::tanh(cache.c[k]);
    cache.h[k] = cache.output_gate[k] * cache.tanh_c[k];
  }
  return cache;
}

LSTMState lstm_step(const LSTMCellParams& cell, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev) {
  LSTMStepCache cache = lstm_step_cached(cell, x, h_prev, c_prev);
  return {std::move(cache.h), std::move(cache.c)};
}

Matrix ForwardTrace::logits() const {
  Matrix out(steps.size(), dims.vocab_size);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::copy(steps[t].logits.begin(), steps[t].logits.end(), out.row(t).begin());
  }
  return out;
}

ForwardTrace forward(const ModelParams& params, std::span<const double> pooled,
                     std::span<const TokenId> inputs, const ForwardOptions& options) {
  const ModelDims& dims = params.dims;
  if (pooled.size() != dims.pooled_dim) {
    throw DimensionError("forward: pooled feature has " + std::to_string(pooled.size()) +
                         " values, model expects " + std::to_string(dims.pooled_dim));
  }
  if (!(options.dropout_rate >= 0.0 && options.dropout_rate < 1.0)) {
    throw ArgumentError("forward: dropout rate must lie in [0, 1)");
  }

  ForwardTrace trace;
  trace.dims = dims;
  trace.pooled.assign(pooled.begin(), pooled.end());
  trace.visual = project_summary(pooled, params.visual_projection, params.visual_bias.values());
  trace.steps.reserve(inputs.size());

  Rng rng(options.seed);
  Vector h1 = trace.visual;
  Vector c1(dims.hidden, 0.0);
  Vector h2(dims.hidden, 0.0);
  Vector c2(dims.hidden, 0.0);
  Vector stream2_input(dims.embed_dim + dims.hidden);
  std::copy(trace.visual.begin(), trace.visual.end(), stream2_input.begin() + dims.embed_dim);

  for (TokenId id : inputs) {
    if (id >= dims.vocab_size) {
      throw DimensionError("forward: token id " + std::to_string(id) +
                           " outside vocabulary of " + std::to_string(dims.vocab_size));
    }
    StepTrace step;
    step.input = id;
    step.embedded.resize(dims.embed_dim);
    for (std::size_t e = 0; e < dims.embed_dim; ++e) {
      step.embedded[e] = params.embedding(e, id) + params.embedding_bias[e];
    }
    std::copy(step.embedded.begin(), step.embedded.end(), stream2_input.begin());

    step.stream1 = lstm_step_cached(params.lstm1, step.embedded, h1, c1);
    step.stream2 = lstm_step_cached(params.lstm2, stream2_input, h2, c2);
    h1 = step.stream1.h;
    c1 = step.stream1.c;
    h2 = step.stream2.h;
    c2 = step.stream2.c;

    step.mask1 = dropout_mask(dims.hidden, options, rng);
    step.mask2 = dropout_mask(dims.hidden, options, rng);
    step.z1.resize(dims.hidden);
    step.z2.resize(dims.hidden);
    step.fused.resize(dims.hidden);
    for (std::size_t k = 0; k < dims.hidden; ++k) {
      step.z1[k] = h1[k] * step.mask1[k];
      step.z2[k] = h2[k] * step.mask2[k];
      step.fused[k] = step.z1[k] * step.z2[k];
    }
    step.logits = matvec(params.output_weights, step.fused);
    for (std::size_t v = 0; v < dims.vocab_size; ++v) step.logits[v] += params.output_bias[v];
    if (!all_finite(step.logits)) {
      throw NumericError("forward: non-finite logits at step " + std::to_string(trace.steps.size()));
    }
    step.probabilities = softmax_row(step.logits);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

ForwardTrace forward(const ModelParams& params, std::span<const double> pooled,
                     const TokenizedCaption& caption, const ForwardOptions& options) {
  return forward(params, pooled, std::span<const TokenId>(caption.ids).first(caption.steps()),
                 options);
}

double loss(const Matrix& logits, const TokenizedCaption& targets) {
  if (logits.rows() >= kEncodedLength) {
    throw ArgumentError("loss: " + std::to_string(logits.rows()) +
                        " timesteps exceed the encoded caption length");
  }
  double sum = 0.0;
  std::size_t tokens = 0;
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const TokenId target = targets.ids[t + 1];
    if (target == kPadId) continue;
    sum += cross_entropy(softmax_row(logits.row(t)), target);
    ++tokens;
  }
  if (tokens == 0) throw ArgumentError("loss: no non-PAD targets");
  return sum / static_cast<double>(tokens);
}

TokenLoss token_loss(const ForwardTrace& trace, const TokenizedCaption& targets) {
  if (trace.steps.size() >= kEncodedLength) {
    throw ArgumentError("loss: trace longer than the encoded caption");
  }
  TokenLoss out;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const TokenId target = targets.ids[t + 1];
    if (target == kPadId) continue;
    out.sum += cross_entropy(trace.steps[t].probabilities, target);
    ++out.tokens;
  }
  return out;
}

void accumulate_backward(const ForwardTrace& trace, const ModelParams& params,
                         const TokenizedCaption& targets, double scale, Gradients& grads) {
  const ModelDims& dims = params.dims;
  if (trace.dims != dims || grads.dims != dims) {
    throw StateError("backward: trace or gradient dims do not match the parameters");
  }
  if (trace.steps.size() >= kEncodedLength) {
    throw StateError("backward: trace longer than the encoded caption");
  }
  for (const auto& step : trace.steps) {
    if (step.probabilities.size() != dims.vocab_size || step.fused.size() != dims.hidden) {
      throw StateError("backward: trace was not produced by these parameters");
    }
  }

  const std::size_t embed = dims.embed_dim;
  Vector dh1(dims.hidden, 0.0), dc1(dims.hidden, 0.0);
  Vector dh2(dims.hidden, 0.0), dc2(dims.hidden, 0.0);
  Vector dvisual(dims.hidden, 0.0);

  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    const StepTrace& step = trace.steps[t];
    const TokenId target = targets.ids[t + 1];

    if (target != kPadId) {
      Vector dlogits(dims.vocab_size);
      for (std::size_t v = 0; v < dims.vocab_size; ++v) {
        dlogits[v] = scale * step.probabilities[v];
      }
      dlogits[target] -= scale;

      add_outer(grads.output_weights, dlogits, step.fused);
      add_into(grads.output_bias.values(), dlogits);
      const Vector dfused = matvec_transposed(params.output_weights, dlogits);
      for (std::size_t k = 0; k < dims.hidden; ++k) {
        dh1[k] += dfused[k] * step.z2[k] * step.mask1[k];
        dh2[k] += dfused[k] * step.z1[k] * step.mask2[k];
      }
    }

    const Vector dx1 = lstm_backward_step(params.lstm1, step.stream1, dh1, dc1, grads.lstm1);
    const Vector dx2 = lstm_backward_step(params.lstm2, step.stream2, dh2, dc2, grads.lstm2);

    // Both streams read the same embedding.
    for (std::size_t e = 0; e < embed; ++e) {
      const double d = dx1[e] + dx2[e];
      grads.embedding(e, step.input) += d;
      grads.embedding_bias[e] += d;
    }
    for (std::size_t k = 0; k < dims.hidden; ++k) dvisual[k] += dx2[embed + k];
  }

  // Stream 1 was seeded with the visual vector as its initial hidden state.
  add_into(dvisual, dh1);
  add_outer(grads.visual_projection, dvisual, trace.pooled);
  add_into(grads.visual_bias.values(), dvisual);
}

Gradients backward(const ForwardTrace& trace, const ModelParams& params,
                   const TokenizedCaption& targets) {
  const TokenLoss tl = token_loss(trace, targets);
  if (tl.tokens == 0) throw ArgumentError("backward: no non-PAD targets");
  Gradients grads = ModelParams::zeros(params.dims);
  accumulate_backward(trace, params, targets, 1.0 / static_cast<double>(tl.tokens), grads);
  return grads;
}

}  // namespace dualcap
