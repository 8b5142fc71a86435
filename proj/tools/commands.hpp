#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcap/gradcheck.hpp"
#include "dualcap/model.hpp"
#include "dualcap/training.hpp"

namespace dualcap::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

struct PreprocessOptions {
  fs::path manifest;
  fs::path feature_dir;
  fs::path output_dir;
  std::size_t vocab_cap = kDefaultVocabCap;
};

struct PreprocessSummary {
  std::size_t videos = 0;
  std::size_t captions = 0;
  std::size_t vocab_size = 0;
  std::size_t content_tokens = 0;
  std::size_t unk_tokens = 0;
  std::size_t truncated_captions = 0;

  double unk_rate() const {
    return content_tokens == 0 ? 0.0
                               : static_cast<double>(unk_tokens) / static_cast<double>(content_tokens);
  }
};

// Writes <output_dir>/vocab.txt and <output_dir>/encoded.json.
PreprocessSummary run_preprocess(const PreprocessOptions& options, std::ostream& log);

struct EncodedDataset {
  std::size_t vocab_size = 0;
  std::vector<TrainingExample> examples;  // visual_index unset
};

nlohmann::ordered_json encoded_dataset_to_json(const EncodedDataset& dataset);
EncodedDataset load_encoded_dataset(const fs::path& path);

// Applies the keys of a JSON config object onto `config`. Unknown keys are an
// error so typos do not pass silently.
void apply_config_json(const nlohmann::json& doc, TrainingConfig& config);
nlohmann::ordered_json config_to_json(const TrainingConfig& config);

struct TrainOptions {
  fs::path data;
  fs::path vocab;
  fs::path feature_dir;
  fs::path output_dir;
  std::optional<fs::path> resume;
  TrainingConfig config;
};

// Pools every referenced video's features and trains. Writes per-epoch
// checkpoints, train_log.jsonl, config.json and model.dsck (final weights).
TrainResult run_train(const TrainOptions& options, std::ostream& log);

struct GenerateOptions {
  fs::path checkpoint;
  fs::path feature_dir;
  fs::path manifest;
  fs::path vocab;
  fs::path output;
  std::size_t max_len = kMaxContentTokens;
};

std::map<std::string, std::string> run_generate(const GenerateOptions& options);

struct EvaluateOptions {
  fs::path hypotheses;
  fs::path manifest;
  std::optional<fs::path> output;
  bool verbose = false;
};

nlohmann::ordered_json run_evaluate(const EvaluateOptions& options, std::ostream& out);

struct GradcheckOptions {
  std::size_t vocab = 20;
  std::size_t embed = 10;
  std::size_t hidden = 8;
  std::size_t pooled = 6;
  std::size_t steps = 5;
  double dropout = 0.5;
  // 0 uses init_params(); otherwise every tensor, biases included, is drawn
  // from [-param_scale, param_scale].
  double param_scale = 0.0;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  std::size_t trials = 3;
};

struct GradcheckTrial {
  std::uint64_t seed = 0;
  std::vector<GradCheckResult> results;
  double max_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckTrial> trials;
  double max_error = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

// Per-command --config handling; same unknown-key policy as for training.
void apply_config_json(const nlohmann::json& doc, PreprocessOptions& options);
void apply_config_json(const nlohmann::json& doc, GenerateOptions& options);
void apply_config_json(const nlohmann::json& doc, EvaluateOptions& options);
void apply_config_json(const nlohmann::json& doc, GradcheckOptions& options);

using BackwardFn =
    std::function<Gradients(const ForwardTrace&, const ModelParams&, const TokenizedCaption&)>;

// Compares `backward_fn` against central differences on random tiny models.
GradcheckReport run_gradcheck(const GradcheckOptions& options,
                              const BackwardFn& backward_fn = &dualcap::backward);
void print_gradcheck(const GradcheckReport& report, double tolerance, std::ostream& out);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace dualcap::cli
