#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualcap/checkpoint.hpp"
#include "dualcap/model.hpp"
#include "dualcap/text.hpp"

namespace dualcap {

struct TrainingConfig {
  double learning_rate = 2e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  double dropout = 0.5;
  std::size_t hidden = 512;
  std::size_t embed_dim = 512;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 0;
  // When set, a checkpoint per epoch and train_log.jsonl are written here.
  std::filesystem::path output_dir;

  // Throws ArgumentError naming the first offending field.
  void validate() const;
};

struct TrainingExample {
  std::string video_id;
  std::size_t visual_index = 0;
  TokenizedCaption caption;
};

// Pooled f_a summaries (one per video) plus one example per caption.
struct TrainingSet {
  std::vector<Vector> visuals;
  std::vector<TrainingExample> examples;
  std::size_t vocab_size = 0;

  std::size_t pooled_dim() const { return visuals.empty() ? 0 : visuals.front().size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

struct TrainResult {
  ModelParams params;
  OptimizerState optimizer;
  std::vector<EpochRecord> log;
  // Global gradient norm after clipping, one entry per optimizer step.
  std::vector<double> clipped_norms;
  std::size_t steps = 0;
};

// Seeded Fisher-Yates shuffle of [0, count), cut into batches; the final
// short batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t epoch_seed);

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

// Rescales `grads` in place so the global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

std::string epoch_checkpoint_name(std::size_t epoch);

using EpochCallback = std::function<void(const EpochRecord&, const Checkpoint&)>;

// Teacher-forced mini-batch training with Adam. With `resume`, training picks
// up after resume->epochs_completed using its parameters and optimizer state.
TrainResult train(const TrainingSet& dataset, const TrainingConfig& config,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  const EpochCallback& on_epoch = {});

}  // namespace dualcap
