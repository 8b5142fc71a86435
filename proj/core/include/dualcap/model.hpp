#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dualcap/gradcheck.hpp"
#include "dualcap/matrix.hpp"
#include "dualcap/text.hpp"

namespace dualcap {

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden = 512;
  std::size_t pooled_dim = 0;

  bool operator==(const ModelDims&) const = default;
};

// Gate rows are stacked [input, forget, candidate, output], each `hidden` tall.
struct LSTMCellParams {
  Matrix input_weights;      // 4h x input_dim
  Matrix recurrent_weights;  // 4h x h
  Matrix gate_bias;          // 4h x 1

  std::size_t hidden() const noexcept { return recurrent_weights.cols(); }
  std::size_t input_dim() const noexcept { return input_weights.cols(); }
  bool operator==(const LSTMCellParams&) const = default;
};

inline constexpr std::size_t kTensorCount = 12;

// Learnable tensors of the dual-stream decoder. Biases are n x 1 matrices.
struct ModelParams {
  ModelDims dims;
  Matrix embedding;          // embed x vocab
  Matrix embedding_bias;     // embed x 1
  LSTMCellParams lstm1;      // input: embedding
  LSTMCellParams lstm2;      // input: [embedding; visual]
  Matrix visual_projection;  // hidden x pooled
  Matrix visual_bias;        // hidden x 1
  Matrix output_weights;     // vocab x hidden
  Matrix output_bias;        // vocab x 1

  // Fixed serialization order; names match tensor_names().
  std::array<Matrix*, kTensorCount> tensors();
  std::array<const Matrix*, kTensorCount> tensors() const;
  static const std::array<std::string_view, kTensorCount>& tensor_names();

  // Zero tensors shaped like `dims`; the gradient container.
  static ModelParams zeros(const ModelDims& dims);

  ParamSet to_param_set() const;
  static ModelParams from_param_set(const ModelDims& dims, const ParamSet& set);

  bool operator==(const ModelParams&) const = default;
};

using Gradients = ModelParams;

inline constexpr double kInitRange = 0.08;

// Uniform [-0.08, 0.08] weights, zero biases, forget-gate bias 1.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

struct LSTMState {
  Vector h;
  Vector c;
};

// Activations of one cell step kept for the backward pass.
struct LSTMStepCache {
  Vector x, h_prev, c_prev;
  Vector input_gate, forget_gate, candidate, output_gate;
  Vector c, tanh_c, h;
};

LSTMState lstm_step(const LSTMCellParams& cell, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev);
LSTMStepCache lstm_step_cached(const LSTMCellParams& cell, std::span<const double> x,
                               std::span<const double> h_prev, std::span<const double> c_prev);

enum class Mode { train, eval };

struct ForwardOptions {
  double dropout_rate = 0.0;
  Mode mode = Mode::eval;
  std::uint64_t seed = 0;
};

struct StepTrace {
  TokenId input = kPadId;
  Vector embedded;
  LSTMStepCache stream1;
  LSTMStepCache stream2;
  // Inverted-dropout multipliers (all 1 in eval mode).
  Vector mask1, mask2;
  Vector z1, z2;
  Vector fused;
  Vector logits;
  Vector probabilities;
};

struct ForwardTrace {
  ModelDims dims;
  Vector pooled;
  Vector visual;
  std::vector<StepTrace> steps;

  // T x vocab
  Matrix logits() const;
};

// Projects `pooled` (the f_a summary) to the visual vector, seeds stream 1's
// hidden state with it, feeds [embedding; visual] to stream 2, fuses the two
// outputs by element-wise product and applies the output projection.
// Non-finite logits raise NumericError.
ForwardTrace forward(const ModelParams& params, std::span<const double> pooled,
                     std::span<const TokenId> inputs, const ForwardOptions& options = {});

// Teacher-forced forward over BOS + content tokens of `caption`.
ForwardTrace forward(const ModelParams& params, std::span<const double> pooled,
                     const TokenizedCaption& caption, const ForwardOptions& options = {});

// Step t predicts targets.ids[t + 1]. Mean cross-entropy over non-PAD targets.
double loss(const Matrix& logits, const TokenizedCaption& targets);

// Sum of per-token cross-entropy and the number of tokens it covers.
struct TokenLoss {
  double sum = 0.0;
  std::size_t tokens = 0;
};
TokenLoss token_loss(const ForwardTrace& trace, const TokenizedCaption& targets);

// Gradients of `loss` (the per-token mean) with respect to every tensor.
Gradients backward(const ForwardTrace& trace, const ModelParams& params,
                   const TokenizedCaption& targets);

// Accumulates scale * d(sum of token losses)/d(params) into `grads`.
void accumulate_backward(const ForwardTrace& trace, const ModelParams& params,
                         const TokenizedCaption& targets, double scale, Gradients& grads);

}  // namespace dualcap
