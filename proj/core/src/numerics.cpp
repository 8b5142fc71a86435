#include "dualcap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualcap/error.hpp"
#include "dualcap/rng.hpp"

namespace dualcap {

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw ArgumentError("Rng::below requires n > 0");
  const std::uint64_t bound = n;
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector softmax_row(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax_row: empty input");
  if (!all_finite(logits)) throw ArgumentError("softmax_row: non-finite logit");
  const double max = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
  return out;
}

double cross_entropy(std::span<const double> probabilities, std::size_t target_index) {
  if (target_index >= probabilities.size()) {
    throw ArgumentError("cross_entropy: target index " + std::to_string(target_index) +
                        " out of range for " + std::to_string(probabilities.size()) +
                        " classes");
  }
  return -std::log(std::max(probabilities[target_index], kProbabilityFloor));
}

AdamState AdamState::zeros_like(const Matrix& param) {
  return AdamState{Matrix(param.rows(), param.cols()), Matrix(param.rows(), param.cols()), 0};
}

void adam_update(Matrix& param, const Matrix& grad, AdamState& state, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(state.first_moment) ||
      !param.same_shape(state.second_moment)) {
    throw DimensionError("adam_step: parameter " + param.shape_string() + ", gradient " +
                         grad.shape_string() + ", moments " +
                         state.first_moment.shape_string() + "/" +
                         state.second_moment.shape_string());
  }
  if (!(lr > 0.0)) throw ArgumentError("adam_step: learning rate must be positive");

  constexpr double b1 = AdamConfig::beta1;
  constexpr double b2 = AdamConfig::beta2;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  auto p = param.values();
  auto g = grad.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamConfig::epsilon);
  }
}

std::pair<Matrix, AdamState> adam_step(const Matrix& param, const Matrix& grad,
                                       const AdamState& state, double lr) {
  Matrix next = param;
  AdamState next_state = state;
  adam_update(next, grad, next_state, lr);
  return {std::move(next), std::move(next_state)};
}

}  // namespace dualcap
