#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "dualcap/matrix.hpp"

namespace dualcap {

inline constexpr double kProbabilityFloor = 1e-12;

// Numerically stable softmax (max-subtracted).
Vector softmax_row(std::span<const double> logits);

// -log(p[target]) with p floored at kProbabilityFloor.
double cross_entropy(std::span<const double> probabilities, std::size_t target_index);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct AdamConfig {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;
};

struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros_like(const Matrix& param);
  bool operator==(const AdamState&) const = default;
};

// Pure form: returns the updated parameter and state.
std::pair<Matrix, AdamState> adam_step(const Matrix& param, const Matrix& grad,
                                       const AdamState& state, double lr);

// In-place form used by the training loop; same arithmetic as adam_step.
void adam_update(Matrix& param, const Matrix& grad, AdamState& state, double lr);

}  // namespace dualcap
