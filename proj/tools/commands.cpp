#include "commands.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "dualcap/checkpoint.hpp"
#include "dualcap/decoding.hpp"
#include "dualcap/error.hpp"
#include "dualcap/features.hpp"
#include "dualcap/io.hpp"
#include "dualcap/metrics.hpp"
#include "dualcap/reference_loss.hpp"
#include "dualcap/rng.hpp"
#include "dualcap/text.hpp"

namespace dualcap::cli {
namespace {

constexpr int kEncodedFormatVersion = 1;
constexpr std::size_t kGradcheckMaxHidden = 16;
constexpr std::size_t kGradcheckMaxVocab = 64;

nlohmann::json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw ArgumentError(std::string(what) + " not found: " + path.string());
  }
}

void require_dir(const fs::path& path, const char* what) {
  if (!fs::is_directory(path)) {
    throw ArgumentError(std::string(what) + " not found: " + path.string());
  }
}

std::string dims_string(const ModelDims& d) {
  return "vocab " + std::to_string(d.vocab_size) + ", embed " + std::to_string(d.embed_dim) +
         ", hidden " + std::to_string(d.hidden) + ", pooled " + std::to_string(d.pooled_dim);
}

Vector pooled_summary(const FeatureStore& store, const std::string& video_id) {
  return average_pool(store.load(video_id)).summary;
}

}  // namespace

PreprocessSummary run_preprocess(const PreprocessOptions& options, std::ostream& log) {
  require_file(options.manifest, "caption manifest");
  require_dir(options.feature_dir, "feature directory");
  const auto records = load_caption_manifest(options.manifest);
  const FeatureStore store(options.feature_dir);

  std::vector<std::string> missing;
  for (const auto& rec : records) {
    if (!store.contains(rec.video_id)) missing.push_back(rec.video_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ArgumentError("missing feature files for video(s): " + list);
  }

  std::vector<Tokens> corpus;
  std::vector<std::string> owners;
  for (const auto& rec : records) {
    for (const auto& cap : rec.captions) {
      corpus.push_back(tokenize(cap));
      owners.push_back(rec.video_id);
    }
  }
  if (corpus.empty()) throw ArgumentError("caption manifest contains no captions");

  const Vocabulary vocab = Vocabulary::build(corpus, options.vocab_cap);
  PreprocessSummary summary;
  summary.videos = records.size();
  summary.captions = corpus.size();
  summary.vocab_size = vocab.size();

  EncodedDataset encoded{vocab.size(), {}};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].size() > kMaxContentTokens) ++summary.truncated_captions;
    TrainingExample ex{owners[i], 0, encode(corpus[i], vocab)};
    summary.content_tokens += ex.caption.content_length;
    for (std::size_t t = 1; t <= ex.caption.content_length; ++t) {
      if (ex.caption.ids[t] == kUnkId) ++summary.unk_tokens;
    }
    encoded.examples.push_back(std::move(ex));
  }

  fs::create_directories(options.output_dir);
  vocab.save(options.output_dir / "vocab.txt");
  write_file(options.output_dir / "encoded.json", encoded_dataset_to_json(encoded).dump() + "\n");

  log << "videos: " << summary.videos << "\ncaptions: " << summary.captions
      << "\nvocab size: " << summary.vocab_size << "\nUKN rate: " << std::fixed
      << std::setprecision(4) << summary.unk_rate() << std::defaultfloat
      << "\ntruncated captions: " << summary.truncated_captions << "\n";
  return summary;
}

nlohmann::ordered_json encoded_dataset_to_json(const EncodedDataset& dataset) {
  nlohmann::ordered_json doc;
  doc["format"] = "dualcap-encoded";
  doc["version"] = kEncodedFormatVersion;
  doc["maxContentTokens"] = kMaxContentTokens;
  doc["vocabSize"] = dataset.vocab_size;
  auto& examples = doc["examples"] = nlohmann::ordered_json::array();
  for (const auto& ex : dataset.examples) {
    examples.push_back({{"videoId", ex.video_id},
                        {"contentLength", ex.caption.content_length},
                        {"ids", ex.caption.ids}});
  }
  return doc;
}

EncodedDataset load_encoded_dataset(const fs::path& path) {
  require_file(path, "encoded dataset");
  const auto doc = parse_json_file(path);
  const auto fail = [&](const std::string& why) { return FormatError(path.string() + ": " + why, 0); };
  if (!doc.is_object() || doc.value("format", "") != "dualcap-encoded") {
    throw fail("not an encoded dataset file");
  }
  if (doc.value("version", 0) != kEncodedFormatVersion) throw fail("unsupported version");

  EncodedDataset dataset;
  dataset.vocab_size = doc.at("vocabSize").get<std::size_t>();
  for (const auto& item : doc.at("examples")) {
    TrainingExample ex;
    ex.video_id = item.at("videoId").get<std::string>();
    ex.caption.content_length = item.at("contentLength").get<std::size_t>();
    const auto ids = item.at("ids").get<std::vector<TokenId>>();
    if (ids.size() != kEncodedLength || ex.caption.content_length > kMaxContentTokens) {
      throw fail("malformed caption for '" + ex.video_id + "'");
    }
    std::copy(ids.begin(), ids.end(), ex.caption.ids.begin());
    if (ex.caption.ids[0] != kBosId || ex.caption.ids[ex.caption.content_length + 1] != kEosId) {
      throw fail("caption for '" + ex.video_id + "' violates the BOS/EOS layout");
    }
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

void apply_config_json(const nlohmann::json& doc, TrainingConfig& config) {
  if (!doc.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "learning_rate") config.learning_rate = value.get<double>();
      else if (key == "batch_size") config.batch_size = value.get<std::size_t>();
      else if (key == "epochs") config.epochs = value.get<std::size_t>();
      else if (key == "dropout") config.dropout = value.get<double>();
      else if (key == "hidden") config.hidden = value.get<std::size_t>();
      else if (key == "embed_dim") config.embed_dim = value.get<std::size_t>();
      else if (key == "gradient_clip_norm") config.gradient_clip_norm = value.get<double>();
      else if (key == "seed") config.seed = value.get<std::uint64_t>();
      else throw ArgumentError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("config key '" + key + "': " + e.what());
    }
  }
}

namespace {

// Calls `apply(key, value)` for each entry; `apply` returns false for keys it
// does not know.
template <typename Apply>
void apply_keys(const nlohmann::json& doc, const char* command, Apply apply) {
  if (!doc.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    try {
      known = apply(key, value);
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("config key '" + key + "': " + e.what());
    }
    if (!known) throw ArgumentError("unknown config key '" + key + "' for " + command);
  }
}

}  // namespace

void apply_config_json(const nlohmann::json& doc, PreprocessOptions& options) {
  apply_keys(doc, "preprocess", [&](const std::string& key, const nlohmann::json& value) {
    if (key != "vocab_cap") return false;
    options.vocab_cap = value.get<std::size_t>();
    return true;
  });
}

void apply_config_json(const nlohmann::json& doc, GenerateOptions& options) {
  apply_keys(doc, "generate", [&](const std::string& key, const nlohmann::json& value) {
    if (key != "max_len") return false;
    options.max_len = value.get<std::size_t>();
    return true;
  });
}

void apply_config_json(const nlohmann::json& doc, EvaluateOptions& options) {
  apply_keys(doc, "evaluate", [&](const std::string& key, const nlohmann::json& value) {
    if (key != "verbose") return false;
    options.verbose = value.get<bool>();
    return true;
  });
}

void apply_config_json(const nlohmann::json& doc, GradcheckOptions& options) {
  apply_keys(doc, "gradcheck", [&](const std::string& key, const nlohmann::json& value) {
    if (key == "vocab") options.vocab = value.get<std::size_t>();
    else if (key == "embed") options.embed = value.get<std::size_t>();
    else if (key == "hidden") options.hidden = value.get<std::size_t>();
    else if (key == "pooled") options.pooled = value.get<std::size_t>();
    else if (key == "steps") options.steps = value.get<std::size_t>();
    else if (key == "dropout") options.dropout = value.get<double>();
    else if (key == "param_scale") options.param_scale = value.get<double>();
    else if (key == "epsilon") options.epsilon = value.get<double>();
    else if (key == "tolerance") options.tolerance = value.get<double>();
    else if (key == "seed") options.seed = value.get<std::uint64_t>();
    else if (key == "trials") options.trials = value.get<std::size_t>();
    else return false;
    return true;
  });
}

nlohmann::ordered_json config_to_json(const TrainingConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"epochs", config.epochs},
          {"dropout", config.dropout},
          {"hidden", config.hidden},
          {"embed_dim", config.embed_dim},
          {"gradient_clip_norm", config.gradient_clip_norm},
          {"seed", config.seed}};
}

TrainResult run_train(const TrainOptions& options, std::ostream& log) {
  options.config.validate();
  require_file(options.vocab, "vocabulary file");
  require_dir(options.feature_dir, "feature directory");
  if (options.resume) require_file(*options.resume, "resume checkpoint");

  const EncodedDataset encoded = load_encoded_dataset(options.data);
  const Vocabulary vocab = Vocabulary::load(options.vocab);
  if (vocab.size() != encoded.vocab_size) {
    throw DimensionError("encoded dataset expects a vocabulary of " +
                         std::to_string(encoded.vocab_size) + " entries, vocabulary file has " +
                         std::to_string(vocab.size()));
  }

  const FeatureStore store(options.feature_dir);
  TrainingSet dataset;
  dataset.vocab_size = vocab.size();
  std::map<std::string, std::size_t> visual_index;
  for (auto ex : encoded.examples) {
    auto [it, inserted] = visual_index.try_emplace(ex.video_id, dataset.visuals.size());
    if (inserted) {
      dataset.visuals.push_back(pooled_summary(store, ex.video_id));
      if (dataset.visuals.back().size() != dataset.visuals.front().size()) {
        throw DimensionError("video '" + ex.video_id + "' pools to " +
                             std::to_string(dataset.visuals.back().size()) +
                             " dims, others to " + std::to_string(dataset.visuals.front().size()));
      }
    }
    ex.visual_index = it->second;
    dataset.examples.push_back(std::move(ex));
  }

  std::optional<Checkpoint> resume;
  if (options.resume) resume = load_checkpoint(*options.resume);

  TrainingConfig config = options.config;
  config.output_dir = options.output_dir;
  fs::create_directories(options.output_dir);
  write_file(options.output_dir / "config.json", config_to_json(config).dump(2) + "\n");

  log << "training on " << dataset.examples.size() << " captions from " << dataset.visuals.size()
      << " videos\n";
  TrainResult result = train(dataset, config, resume, [&](const EpochRecord& r, const Checkpoint&) {
    log << "epoch " << r.epoch << " mean_loss " << std::setprecision(6) << r.mean_loss << "\n";
  });
  save_checkpoint(Checkpoint{result.params, static_cast<std::uint32_t>(config.epochs), result.optimizer},
                  options.output_dir / "model.dsck");
  return result;
}

std::map<std::string, std::string> run_generate(const GenerateOptions& options) {
  require_file(options.checkpoint, "checkpoint");
  require_file(options.manifest, "caption manifest");
  require_file(options.vocab, "vocabulary file");
  require_dir(options.feature_dir, "feature directory");

  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  const Vocabulary vocab = Vocabulary::load(options.vocab);
  const ModelDims& dims = checkpoint.params.dims;
  if (vocab.size() != dims.vocab_size) {
    throw DimensionError("checkpoint dims (" + dims_string(dims) + ") expect a vocabulary of " +
                         std::to_string(dims.vocab_size) + " entries, found " +
                         std::to_string(vocab.size()));
  }
  const auto records = load_caption_manifest(options.manifest);
  const FeatureStore store(options.feature_dir);

  std::map<std::string, std::string> hypotheses;
  for (const auto& rec : records) {
    const Vector pooled = pooled_summary(store, rec.video_id);
    if (pooled.size() != dims.pooled_dim) {
      throw DimensionError("video '" + rec.video_id + "' pools to " +
                           std::to_string(pooled.size()) + " dims, checkpoint expects " +
                           std::to_string(dims.pooled_dim));
    }
    hypotheses[rec.video_id] = generate_caption(checkpoint.params, pooled, vocab, options.max_len);
  }
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [id, caption] : hypotheses) out[id] = caption;
  write_file(options.output, out.dump(2) + "\n");
  return hypotheses;
}

nlohmann::ordered_json run_evaluate(const EvaluateOptions& options, std::ostream& out) {
  require_file(options.hypotheses, "hypotheses file");
  require_file(options.manifest, "caption manifest");
  const auto doc = parse_json_file(options.hypotheses);
  if (!doc.is_object()) throw FormatError(options.hypotheses.string() + ": expected an object", 0);
  std::map<std::string, std::string> hypotheses;
  for (const auto& [id, caption] : doc.items()) {
    if (!caption.is_string()) {
      throw FormatError(options.hypotheses.string() + ": caption for '" + id + "' is not a string", 0);
    }
    hypotheses[id] = caption.get<std::string>();
  }
  const auto references = load_caption_manifest(options.manifest);
  const auto report = report_to_json(evaluate(hypotheses, references), options.verbose);
  const std::string text = report.dump(2) + "\n";
  if (options.output) write_file(*options.output, text);
  out << text;
  return report;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options, const BackwardFn& backward_fn) {
  if (options.hidden > kGradcheckMaxHidden || options.vocab > kGradcheckMaxVocab) {
    throw ArgumentError("gradcheck is limited to hidden <= " +
                        std::to_string(kGradcheckMaxHidden) + " and vocab <= " +
                        std::to_string(kGradcheckMaxVocab) +
                        "; finite differences scale with the parameter count, so check a tiny "
                        "configuration (e.g. --hidden 8 --vocab 20)");
  }
  if (options.vocab <= kFirstContentId) throw ArgumentError("gradcheck needs vocab > 4");
  if (options.steps == 0 || options.steps > kMaxContentTokens + 1) {
    throw ArgumentError("gradcheck steps must lie in [1, " + std::to_string(kMaxContentTokens + 1) + "]");
  }
  if (options.trials == 0) throw ArgumentError("gradcheck needs at least one trial");
  if (!(options.param_scale >= 0.0)) throw ArgumentError("gradcheck param scale must be >= 0");

  const auto started = std::chrono::steady_clock::now();
  const ModelDims dims{options.vocab, options.embed, options.hidden, options.pooled};
  GradcheckReport report;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    const std::uint64_t seed = options.seed + trial;
    Rng rng(mix_seed(seed, 0x6c));
    ModelParams params = init_params(dims, seed);
    if (options.param_scale > 0.0) {
      for (Matrix* m : params.tensors()) {
        for (auto& v : m->values()) v = rng.uniform(-options.param_scale, options.param_scale);
      }
    }
    Vector pooled(dims.pooled_dim);
    for (auto& v : pooled) v = rng.uniform(-1.0, 1.0);
    TokenizedCaption caption;
    caption.content_length = options.steps - 1;
    caption.ids[0] = kBosId;
    for (std::size_t t = 1; t <= caption.content_length; ++t) {
      caption.ids[t] = static_cast<TokenId>(kFirstContentId +
                                            rng.below(dims.vocab_size - kFirstContentId));
    }
    caption.ids[caption.content_length + 1] = kEosId;

    const ForwardOptions fwd{options.dropout, Mode::train, mix_seed(seed, 0xd0)};
    const ForwardTrace trace = forward(params, pooled, caption, fwd);
    const auto [mask1, mask2] = trace_masks(trace);
    const auto loss_fn = [&](const ParamSet& set) {
      return reference_loss(ModelParams::from_param_set(dims, set), pooled, caption, mask1, mask2);
    };
    const Gradients grads = backward_fn(trace, params, caption);

    GradcheckTrial result{seed, check_gradients(loss_fn, params.to_param_set(),
                                                grads.to_param_set(), options.epsilon), 0.0};
    for (const auto& r : result.results) result.max_error = std::max(result.max_error, r.max_relative_error);
    report.max_error = std::max(report.max_error, result.max_error);
    report.trials.push_back(std::move(result));
  }
  report.passed = report.max_error < options.tolerance;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void print_gradcheck(const GradcheckReport& report, double tolerance, std::ostream& out) {
  out << std::left << std::setw(8) << "seed" << std::setw(26) << "tensor" << "max_rel_error\n";
  for (const auto& trial : report.trials) {
    for (const auto& r : trial.results) {
      out << std::setw(8) << trial.seed << std::setw(26) << r.name << std::scientific
          << std::setprecision(3) << r.max_relative_error << std::defaultfloat << "\n";
    }
  }
  out << (report.passed ? "PASS" : "FAIL") << ": max relative error " << std::scientific
      << std::setprecision(3) << report.max_error << " (tolerance " << tolerance << ") in "
      << std::defaultfloat << std::setprecision(3) << report.seconds << " s\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Dual-stream LSTM video captioner: preprocess, train, generate, evaluate, gradcheck"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  fs::path config_path;

  PreprocessOptions pre;
  auto* preprocess = app.add_subcommand("preprocess", "Tokenize captions, build the vocabulary, encode");
  preprocess->add_option("--manifest", pre.manifest, "Caption manifest JSON")->required();
  preprocess->add_option("--features", pre.feature_dir, "Directory of .vfea files")->required();
  preprocess->add_option("--output", pre.output_dir, "Output directory")->required();
  std::optional<std::size_t> vocab_cap;
  preprocess->add_option("--vocab-cap", vocab_cap, "Most frequent tokens kept");
  preprocess->add_option("--seed", seed, "Random seed (unused, accepted for uniformity)");
  preprocess->add_option("--config", config_path, "JSON config");

  TrainOptions tr;
  std::optional<double> lr, dropout, clip;
  std::optional<std::size_t> batch, epochs, hidden, embed;
  fs::path resume_path;
  auto* train_cmd = app.add_subcommand("train", "Train with teacher forcing and Adam");
  train_cmd->add_option("--data", tr.data, "encoded.json from preprocess")->required();
  train_cmd->add_option("--vocab", tr.vocab, "vocab.txt from preprocess")->required();
  train_cmd->add_option("--features", tr.feature_dir, "Directory of .vfea files")->required();
  train_cmd->add_option("--output", tr.output_dir, "Checkpoint and log directory")->required();
  train_cmd->add_option("--resume", resume_path, "Checkpoint to resume from");
  train_cmd->add_option("--learning-rate", lr);
  train_cmd->add_option("--batch-size", batch);
  train_cmd->add_option("--epochs", epochs);
  train_cmd->add_option("--dropout", dropout);
  train_cmd->add_option("--hidden", hidden);
  train_cmd->add_option("--embed", embed);
  train_cmd->add_option("--clip-norm", clip);
  auto* train_seed = train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--config", config_path, "JSON config overriding defaults");

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Greedy caption generation");
  generate->add_option("--checkpoint", gen.checkpoint)->required();
  generate->add_option("--features", gen.feature_dir)->required();
  generate->add_option("--manifest", gen.manifest, "Caption manifest listing the videos")->required();
  generate->add_option("--vocab", gen.vocab)->required();
  generate->add_option("--output", gen.output, "Hypotheses JSON")->required();
  std::optional<std::size_t> max_len;
  generate->add_option("--max-len", max_len, "Content-token limit per caption");
  generate->add_option("--seed", seed);
  generate->add_option("--config", config_path);

  EvaluateOptions ev;
  fs::path eval_output;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "BLEU-1..4, METEOR, ROUGE-L, CIDEr");
  evaluate_cmd->add_option("--hypotheses", ev.hypotheses)->required();
  evaluate_cmd->add_option("--manifest", ev.manifest, "Reference caption manifest")->required();
  evaluate_cmd->add_option("--output", eval_output, "Report JSON path (also printed)");
  bool verbose = false;
  evaluate_cmd->add_flag("--verbose", verbose, "Include per-video scores");
  evaluate_cmd->add_option("--seed", seed);
  evaluate_cmd->add_option("--config", config_path);

  GradcheckOptions gc;
  std::optional<std::size_t> gc_vocab, gc_embed, gc_hidden, gc_pooled, gc_steps, gc_trials;
  std::optional<double> gc_dropout, gc_epsilon, gc_scale;
  auto* gradcheck = app.add_subcommand("gradcheck", "Check backward against finite differences");
  gradcheck->add_option("--vocab", gc_vocab);
  gradcheck->add_option("--embed", gc_embed);
  gradcheck->add_option("--hidden", gc_hidden);
  gradcheck->add_option("--pooled", gc_pooled);
  gradcheck->add_option("--steps", gc_steps, "Timesteps (BOS + content tokens)");
  gradcheck->add_option("--dropout", gc_dropout);
  gradcheck->add_option("--epsilon", gc_epsilon);
  gradcheck->add_option("--param-scale", gc_scale,
                        "Draw parameters from [-s, s] instead of the training init");
  gradcheck->add_option("--trials", gc_trials, "Seeds seed, seed+1, ...");
  auto* gc_seed = gradcheck->add_option("--seed", seed);
  gradcheck->add_option("--config", config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const auto config_doc = [&] { return parse_json_file(config_path); };
    if (*preprocess) {
      if (!config_path.empty()) apply_config_json(config_doc(), pre);
      if (vocab_cap) pre.vocab_cap = *vocab_cap;
      run_preprocess(pre, std::cout);
    } else if (*train_cmd) {
      if (!config_path.empty()) apply_config_json(config_doc(), tr.config);
      if (lr) tr.config.learning_rate = *lr;
      if (batch) tr.config.batch_size = *batch;
      if (epochs) tr.config.epochs = *epochs;
      if (dropout) tr.config.dropout = *dropout;
      if (hidden) tr.config.hidden = *hidden;
      if (embed) tr.config.embed_dim = *embed;
      if (clip) tr.config.gradient_clip_norm = *clip;
      if (train_seed->count() > 0) tr.config.seed = seed;
      if (!resume_path.empty()) tr.resume = resume_path;
      const auto result = run_train(tr, std::cout);
      std::cout << "final mean loss " << result.log.back().mean_loss << " after " << result.steps
                << " steps\n";
    } else if (*generate) {
      if (!config_path.empty()) apply_config_json(config_doc(), gen);
      if (max_len) gen.max_len = *max_len;
      const auto hyps = run_generate(gen);
      std::cout << "wrote " << hyps.size() << " captions to " << gen.output.string() << "\n";
    } else if (*evaluate_cmd) {
      if (!config_path.empty()) apply_config_json(config_doc(), ev);
      if (verbose) ev.verbose = true;
      if (!eval_output.empty()) ev.output = eval_output;
      run_evaluate(ev, std::cout);
    } else if (*gradcheck) {
      if (!config_path.empty()) apply_config_json(config_doc(), gc);
      if (gc_vocab) gc.vocab = *gc_vocab;
      if (gc_embed) gc.embed = *gc_embed;
      if (gc_hidden) gc.hidden = *gc_hidden;
      if (gc_pooled) gc.pooled = *gc_pooled;
      if (gc_steps) gc.steps = *gc_steps;
      if (gc_trials) gc.trials = *gc_trials;
      if (gc_dropout) gc.dropout = *gc_dropout;
      if (gc_epsilon) gc.epsilon = *gc_epsilon;
      if (gc_scale) gc.param_scale = *gc_scale;
      if (gc_seed->count() > 0) gc.seed = seed;
      const auto report = run_gradcheck(gc);
      print_gradcheck(report, gc.tolerance, std::cout);
      return report.passed ? kExitOk : kExitRuntime;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dualcap::cli
