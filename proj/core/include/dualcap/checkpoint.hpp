#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualcap/model.hpp"
#include "dualcap/numerics.hpp"

namespace dualcap {

inline constexpr char kCheckpointMagic[4] = {'D', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// One Adam state per model tensor, in ModelParams::tensors() order.
struct OptimizerState {
  std::vector<AdamState> tensors;

  static OptimizerState zeros_like(const ModelParams& params);
  bool operator==(const OptimizerState&) const = default;
};

struct Checkpoint {
  ModelParams params;
  std::uint32_t epochs_completed = 0;
  std::optional<OptimizerState> optimizer;

  bool operator==(const Checkpoint&) const = default;
};

// Layout (little-endian):
//   "DSCK", u32 version,
//   dims: u32 vocab, u32 embed, u32 hidden, u32 pooled, u32 epochs_completed,
//   then per tensor:
//     u16 name length, name bytes, u32 rows, u32 cols, rows*cols float64.
// Model tensors come first in ModelParams::tensor_names() order. When
// optimizer state is present it follows directly as "adam.step" (1x1) and then
// "adam.<tensor>.m", "adam.<tensor>.v" for each model tensor.
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dualcap
