#include "dualcap/reference_loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dualcap/error.hpp"

namespace dualcap {
namespace {

using Real = long double;
using RVec = std::vector<Real>;

Real logistic(Real x) { return 1.0L / (1.0L + std::exp(-x)); }

struct Cell {
  const LSTMCellParams& p;

  void step(const RVec& x, RVec& h, RVec& c) const {
    const std::size_t n = p.hidden();
    RVec gates(4 * n);
    for (std::size_t r = 0; r < 4 * n; ++r) {
      Real acc = p.gate_bias(r, 0);
      for (std::size_t j = 0; j < x.size(); ++j) acc += Real{p.input_weights(r, j)} * x[j];
      for (std::size_t j = 0; j < n; ++j) acc += Real{p.recurrent_weights(r, j)} * h[j];
      gates[r] = acc;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const Real i = logistic(gates[k]);
      const Real f = logistic(gates[n + k]);
      const Real g = std::tanh(gates[2 * n + k]);
      const Real o = logistic(gates[3 * n + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
};

}  // namespace

long double reference_loss(const ModelParams& params, std::span<const double> pooled,
                           const TokenizedCaption& caption, std::span<const Vector> mask1,
                           std::span<const Vector> mask2) {
  const ModelDims& d = params.dims;
  const std::size_t steps = caption.steps();
  if (pooled.size() != d.pooled_dim) throw DimensionError("reference_loss: pooled size mismatch");
  if ((!mask1.empty() && mask1.size() != steps) || (!mask2.empty() && mask2.size() != steps)) {
    throw DimensionError("reference_loss: dropout masks do not cover every step");
  }

  RVec visual(d.hidden);
  for (std::size_t r = 0; r < d.hidden; ++r) {
    Real acc = params.visual_bias(r, 0);
    for (std::size_t j = 0; j < d.pooled_dim; ++j) {
      acc += Real{params.visual_projection(r, j)} * pooled[j];
    }
    visual[r] = acc;
  }

  RVec h1 = visual, c1(d.hidden, 0.0L), h2(d.hidden, 0.0L), c2(d.hidden, 0.0L);
  const Cell cell1{params.lstm1}, cell2{params.lstm2};
  Real total = 0.0L;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const TokenId id = caption.ids[t];
    RVec y(d.embed_dim);
    for (std::size_t e = 0; e < d.embed_dim; ++e) {
      y[e] = Real{params.embedding(e, id)} + params.embedding_bias(e, 0);
    }
    RVec joined = y;
    joined.insert(joined.end(), visual.begin(), visual.end());
    cell1.step(y, h1, c1);
    cell2.step(joined, h2, c2);

    const TokenId target = caption.ids[t + 1];
    if (target == kPadId) continue;
    RVec fused(d.hidden);
    for (std::size_t k = 0; k < d.hidden; ++k) {
      const Real m1 = mask1.empty() ? 1.0L : mask1[t][k];
      const Real m2 = mask2.empty() ? 1.0L : mask2[t][k];
      fused[k] = (h1[k] * m1) * (h2[k] * m2);
    }
    RVec logits(d.vocab_size);
    for (std::size_t v = 0; v < d.vocab_size; ++v) {
      Real acc = params.output_bias(v, 0);
      for (std::size_t k = 0; k < d.hidden; ++k) acc += Real{params.output_weights(v, k)} * fused[k];
      logits[v] = acc;
    }
    const Real top = *std::max_element(logits.begin(), logits.end());
    Real z = 0.0L;
    for (Real l : logits) z += std::exp(l - top);
    total += (top + std::log(z)) - logits[target];
    ++counted;
  }
  if (counted == 0) throw ArgumentError("reference_loss: no non-PAD targets");
  return total / static_cast<Real>(counted);
}

std::pair<std::vector<Vector>, std::vector<Vector>> trace_masks(const ForwardTrace& trace) {
  std::pair<std::vector<Vector>, std::vector<Vector>> out;
  for (const auto& step : trace.steps) {
    out.first.push_back(step.mask1);
    out.second.push_back(step.mask2);
  }
  return out;
}

}  // namespace dualcap
