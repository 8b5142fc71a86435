#include "dualcap/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dualcap/error.hpp"
#include "dualcap/rng.hpp"

namespace dualcap {
namespace {

constexpr std::uint64_t kInitSalt = 0x1417;
constexpr std::uint64_t kDropoutSalt = 0xd40;

double global_norm(const Gradients& grads) {
  double acc = 0.0;
  for (const Matrix* m : grads.tensors()) acc += squared_norm(m->values());
  return std::sqrt(acc);
}

std::string norm_report(const ModelParams& params) {
  std::ostringstream out;
  const auto& names = ModelParams::tensor_names();
  const auto tensors = params.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    out << (k ? ", " : "") << names[k] << "=" << std::sqrt(squared_norm(tensors[k]->values()));
  }
  return out.str();
}

void check_dataset(const TrainingSet& dataset, const ModelDims& dims) {
  if (dataset.examples.empty()) throw ArgumentError("training set has no examples");
  for (const auto& v : dataset.visuals) {
    if (v.size() != dims.pooled_dim) {
      throw DimensionError("visual vectors disagree on pooled dimension");
    }
  }
  for (const auto& ex : dataset.examples) {
    if (ex.visual_index >= dataset.visuals.size()) {
      throw ArgumentError("example for '" + ex.video_id + "' has no visual vector");
    }
    for (TokenId id : ex.caption.ids) {
      if (id >= dims.vocab_size) {
        throw DimensionError("caption for '" + ex.video_id + "' uses id " + std::to_string(id) +
                             " outside vocabulary of " + std::to_string(dims.vocab_size));
      }
    }
  }
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning_rate must be a finite non-negative number");
  }
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (epochs == 0) throw ArgumentError("epochs must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must lie in [0, 1)");
  if (hidden == 0) throw ArgumentError("hidden must be positive");
  if (embed_dim == 0) throw ArgumentError("embed_dim must be positive");
  if (!(gradient_clip_norm > 0.0)) throw ArgumentError("gradient_clip_norm must be positive");
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t epoch_seed) {
  if (batch_size == 0) throw ArgumentError("make_batches: batch_size must be positive");
  if (count == 0) throw ArgumentError("make_batches: no examples");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(epoch_seed);
  for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < count; begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, count);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
  return mix_seed(run_seed, epoch);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix* m : grads.tensors()) {
      for (auto& v : m->values()) v *= scale;
    }
  }
  return norm;
}

std::string epoch_checkpoint_name(std::size_t epoch) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch_%04zu.dsck", epoch);
  return buf;
}

TrainResult train(const TrainingSet& dataset, const TrainingConfig& config,
                  const std::optional<Checkpoint>& resume, const EpochCallback& on_epoch) {
  config.validate();
  const ModelDims dims{dataset.vocab_size, config.embed_dim, config.hidden, dataset.pooled_dim()};
  check_dataset(dataset, dims);

  TrainResult result;
  std::size_t first_epoch = 1;
  if (resume) {
    if (resume->params.dims != dims) {
      throw DimensionError("resume checkpoint dims (vocab " +
                           std::to_string(resume->params.dims.vocab_size) + ", embed " +
                           std::to_string(resume->params.dims.embed_dim) + ", hidden " +
                           std::to_string(resume->params.dims.hidden) + ", pooled " +
                           std::to_string(resume->params.dims.pooled_dim) +
                           ") do not match the training configuration");
    }
    if (!resume->optimizer) throw ArgumentError("resume checkpoint carries no optimizer state");
    result.params = resume->params;
    result.optimizer = *resume->optimizer;
    first_epoch = resume->epochs_completed + 1;
  } else {
    result.params = init_params(dims, mix_seed(config.seed, kInitSalt));
    result.optimizer = OptimizerState::zeros_like(result.params);
  }

  std::ofstream log_stream;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    log_stream.open(config.output_dir / "train_log.jsonl",
                    resume ? std::ios::app : std::ios::trunc);
    if (!log_stream) throw ArgumentError("cannot write training log in " + config.output_dir.string());
  }

  ForwardOptions fwd{config.dropout, Mode::train, 0};
  for (std::size_t epoch = first_epoch; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto batches =
        make_batches(dataset.examples.size(), config.batch_size, epoch_seed(config.seed, epoch));

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      std::vector<ForwardTrace> traces;
      traces.reserve(batch.size());
      TokenLoss batch_loss;
      for (std::size_t idx : batch) {
        const TrainingExample& ex = dataset.examples[idx];
        fwd.seed = mix_seed(mix_seed(epoch_seed(config.seed, epoch), kDropoutSalt), idx);
        try {
          traces.push_back(
              forward(result.params, dataset.visuals[ex.visual_index], ex.caption, fwd));
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b + 1) + "; parameter norms: " +
                             norm_report(result.params));
        }
        const TokenLoss tl = token_loss(traces.back(), ex.caption);
        batch_loss.sum += tl.sum;
        batch_loss.tokens += tl.tokens;
      }
      if (!std::isfinite(batch_loss.sum)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + "; parameter norms: " +
                           norm_report(result.params));
      }

      Gradients grads = ModelParams::zeros(dims);
      const double scale = 1.0 / static_cast<double>(batch_loss.tokens);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        accumulate_backward(traces[i], result.params, dataset.examples[batch[i]].caption, scale,
                            grads);
      }
      const double pre_clip = clip_global_norm(grads, config.gradient_clip_norm);
      if (!std::isfinite(pre_clip)) {
        throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + "; parameter norms: " +
                           norm_report(result.params));
      }
      result.clipped_norms.push_back(global_norm(grads));

      if (config.learning_rate > 0.0) {
        auto params = result.params.tensors();
        auto grad_tensors = grads.tensors();
        for (std::size_t k = 0; k < kTensorCount; ++k) {
          adam_update(*params[k], *grad_tensors[k], result.optimizer.tensors[k],
                      config.learning_rate);
        }
      }
      ++result.steps;
      epoch_loss += batch_loss.sum;
      epoch_tokens += batch_loss.tokens;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = epoch_loss / static_cast<double>(epoch_tokens);

    Checkpoint checkpoint{result.params, static_cast<std::uint32_t>(epoch), result.optimizer};
    if (!config.output_dir.empty()) {
      const auto path = config.output_dir / epoch_checkpoint_name(epoch);
      save_checkpoint(checkpoint, path);
      record.checkpoint_path = path.string();
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (log_stream.is_open()) {
      nlohmann::json line = {{"epoch", record.epoch},
                             {"mean_loss", record.mean_loss},
                             {"wall_seconds", record.wall_seconds},
                             {"checkpoint_path", record.checkpoint_path}};
      log_stream << line.dump() << '\n' << std::flush;
    }
    if (on_epoch) on_epoch(record, checkpoint);
    result.log.push_back(std::move(record));
  }
  return result;
}

}  // namespace dualcap
