#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dualcap/model.hpp"

namespace dualcap {

// Independent re-implementation of the decoder's forward pass and masked
// cross-entropy, carried out in long double. It shares no code with
// forward()/loss() and serves as the loss oracle for finite-difference
// gradient checks, where double-precision roundoff (~1e-15 on a loss of
// order 1) would swamp gradients near 1e-8.
//
// mask1/mask2 hold the per-step dropout multipliers (e.g. from a
// ForwardTrace); pass empty spans for eval mode.
long double reference_loss(const ModelParams& params, std::span<const double> pooled,
                           const TokenizedCaption& caption, std::span<const Vector> mask1,
                           std::span<const Vector> mask2);

// Dropout masks of a trace, split per stream.
std::pair<std::vector<Vector>, std::vector<Vector>> trace_masks(const ForwardTrace& trace);

}  // namespace dualcap
