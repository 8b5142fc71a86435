#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "dualcap/error.hpp"
#include "dualcap/io.hpp"
#include "support/synthetic.hpp"

namespace dualcap::cli {
namespace {

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dualcap");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

struct Workspace {
  fs::path root, features, manifest, prep;
};

Workspace make_workspace(const std::string& name) {
  Workspace ws;
  ws.root = testing::scratch_dir(name);
  testing::write_corpus(testing::overfit_corpus(), ws.root);
  ws.features = ws.root / "features";
  ws.manifest = ws.root / "captions.json";
  ws.prep = ws.root / "prep";
  return ws;
}

std::vector<double> log_losses(const fs::path& log) {
  std::ifstream in(log);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line).at("mean_loss"));
  return out;
}

TEST(Preprocess, DeterministicArtifacts) {
  const auto ws = make_workspace("cli_pre");
  std::ostringstream log;
  const auto summary = run_preprocess({ws.manifest, ws.features, ws.root / "a"}, log);
  run_preprocess({ws.manifest, ws.features, ws.root / "b"}, log);
  EXPECT_EQ(summary.videos, 4u);
  EXPECT_EQ(summary.captions, 4u);
  EXPECT_EQ(summary.unk_rate(), 0.0);
  EXPECT_EQ(read_file(ws.root / "a" / "vocab.txt"), read_file(ws.root / "b" / "vocab.txt"));
  EXPECT_EQ(read_file(ws.root / "a" / "encoded.json"), read_file(ws.root / "b" / "encoded.json"));
  EXPECT_NE(log.str().find("UKN rate"), std::string::npos);
  const auto encoded = load_encoded_dataset(ws.root / "a" / "encoded.json");
  EXPECT_EQ(encoded.examples.size(), 4u);
  EXPECT_EQ(encoded.vocab_size, summary.vocab_size);
}

TEST(Preprocess, MissingFeatureNamesVideo) {
  const auto ws = make_workspace("cli_missing");
  fs::remove(ws.features / "vid2.vfea");
  std::ostringstream log;
  try {
    run_preprocess({ws.manifest, ws.features, ws.prep}, log);
    FAIL() << "expected ArgumentError";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("vid2"), std::string::npos);
  }
  EXPECT_EQ(invoke({"preprocess", "--manifest", ws.manifest.string(), "--features",
                    ws.features.string(), "--output", ws.prep.string()}),
            kExitValidation);
}

TEST(Preprocess, LongCaptionTruncatedAndCounted) {
  const auto ws = make_workspace("cli_long");
  std::string long_caption;
  for (int i = 0; i < 45; ++i) long_caption += "word" + std::to_string(i) + " ";
  write_file(ws.manifest,
             nlohmann::json::array({{{"videoId", "vid0"}, {"enCap", {long_caption}}}}).dump());
  std::ostringstream log;
  const auto summary = run_preprocess({ws.manifest, ws.features, ws.prep}, log);
  EXPECT_EQ(summary.truncated_captions, 1u);
  const auto encoded = load_encoded_dataset(ws.prep / "encoded.json");
  EXPECT_EQ(encoded.examples[0].caption.content_length, 30u);
  EXPECT_EQ(encoded.examples[0].caption.ids[31], kEosId);
}

TEST(Preprocess, MalformedManifestReportsLocation) {
  const auto ws = make_workspace("cli_badjson");
  write_file(ws.manifest, "[{\"videoId\": \"vid0\",, }]");
  std::ostringstream log;
  try {
    run_preprocess({ws.manifest, ws.features, ws.prep}, log);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(Train, BadConfigRejectedBeforeWork) {
  const auto ws = make_workspace("cli_bad_train");
  ASSERT_EQ(invoke({"preprocess", "--manifest", ws.manifest.string(), "--features",
                    ws.features.string(), "--output", ws.prep.string()}),
            kExitOk);
  const auto out = ws.root / "run";
  EXPECT_EQ(invoke({"train", "--data", (ws.prep / "encoded.json").string(), "--vocab",
                    (ws.prep / "vocab.txt").string(), "--features", ws.features.string(),
                    "--output", out.string(), "--dropout", "1.0"}),
            kExitValidation);
  EXPECT_FALSE(fs::exists(out));

  write_file(ws.root / "typo.json", R"({"learnig_rate": 0.1})");
  EXPECT_EQ(invoke({"train", "--data", (ws.prep / "encoded.json").string(), "--vocab",
                    (ws.prep / "vocab.txt").string(), "--features", ws.features.string(),
                    "--output", out.string(), "--config", (ws.root / "typo.json").string()}),
            kExitValidation);
  EXPECT_EQ(invoke({"train", "--data", "nowhere.json"}), kExitValidation);
}

TEST(Train, ResumeReproducesUninterruptedRun) {
  const auto ws = make_workspace("cli_resume");
  ASSERT_EQ(invoke({"preprocess", "--manifest", ws.manifest.string(), "--features",
                    ws.features.string(), "--output", ws.prep.string()}),
            kExitOk);
  const std::vector<std::string> common{
      "train", "--data", (ws.prep / "encoded.json").string(), "--vocab",
      (ws.prep / "vocab.txt").string(), "--features", ws.features.string(), "--hidden", "16",
      "--embed", "8", "--batch-size", "3", "--learning-rate", "0.005", "--seed", "11"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = common;
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  };
  ASSERT_EQ(with({"--epochs", "5", "--output", (ws.root / "full").string()}), kExitOk);
  ASSERT_EQ(with({"--epochs", "2", "--output", (ws.root / "part").string()}), kExitOk);
  ASSERT_EQ(with({"--epochs", "5", "--output", (ws.root / "rest").string(), "--resume",
                  (ws.root / "part" / "checkpoint_epoch_0002.dsck").string()}),
            kExitOk);

  const auto full = log_losses(ws.root / "full" / "train_log.jsonl");
  const auto rest = log_losses(ws.root / "rest" / "train_log.jsonl");
  ASSERT_EQ(full.size(), 5u);
  ASSERT_EQ(rest.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rest[i], full[i + 2]);
  EXPECT_EQ(read_file(ws.root / "rest" / "model.dsck"), read_file(ws.root / "full" / "model.dsck"));
  const auto config = nlohmann::json::parse(read_file(ws.root / "full" / "config.json"));
  EXPECT_EQ(config.at("seed"), 11);
  EXPECT_EQ(config.at("hidden"), 16);
}

TEST(Pipeline, OverfitThenGenerateAndEvaluate) {
  const auto ws = make_workspace("cli_pipeline");
  ASSERT_EQ(invoke({"preprocess", "--manifest", ws.manifest.string(), "--features",
                    ws.features.string(), "--output", ws.prep.string()}),
            kExitOk);
  auto cfg = testing::overfit_config();
  write_file(ws.root / "overfit.json", config_to_json(cfg).dump());
  const auto run_dir = ws.root / "run";
  ASSERT_EQ(invoke({"train", "--data", (ws.prep / "encoded.json").string(), "--vocab",
                    (ws.prep / "vocab.txt").string(), "--features", ws.features.string(),
                    "--output", run_dir.string(), "--config", (ws.root / "overfit.json").string()}),
            kExitOk);
  EXPECT_LT(log_losses(run_dir / "train_log.jsonl").back(), 0.05);

  const std::vector<std::string> gen{"generate", "--checkpoint", (run_dir / "model.dsck").string(),
                                     "--features", ws.features.string(), "--manifest",
                                     ws.manifest.string(), "--vocab",
                                     (ws.prep / "vocab.txt").string(), "--output"};
  auto gen_to = [&](const fs::path& out) {
    auto args = gen;
    args.push_back(out.string());
    return invoke(args);
  };
  ASSERT_EQ(gen_to(ws.root / "hyp1.json"), kExitOk);
  ASSERT_EQ(gen_to(ws.root / "hyp2.json"), kExitOk);
  EXPECT_EQ(read_file(ws.root / "hyp1.json"), read_file(ws.root / "hyp2.json"));
  const auto hyps = nlohmann::json::parse(read_file(ws.root / "hyp1.json"));
  for (const auto& rec : testing::overfit_corpus().records) {
    EXPECT_EQ(hyps.at(rec.video_id), rec.captions[0]);
  }

  std::ostringstream out;
  const auto report = run_evaluate({ws.root / "hyp1.json", ws.manifest, std::nullopt, true}, out);
  EXPECT_EQ(report.at("bleu_4"), 1.0);
  EXPECT_EQ(report.at("rouge_l"), 1.0);
  EXPECT_TRUE(report.contains("details"));
  EXPECT_EQ(report.at("details").size(), 4u);
}

TEST(Generate, EmptyManifestAndDimMismatch) {
  const auto ws = make_workspace("cli_generate");
  std::ostringstream log;
  run_preprocess({ws.manifest, ws.features, ws.prep}, log);
  const auto vocab = Vocabulary::load(ws.prep / "vocab.txt");
  const ModelDims dims{vocab.size(), 4, 5, 4};
  save_checkpoint({init_params(dims, 1), 0, std::nullopt}, ws.root / "m.dsck");

  write_file(ws.root / "empty.json", "[]");
  const auto hyps =
      run_generate({ws.root / "m.dsck", ws.features, ws.root / "empty.json", ws.prep / "vocab.txt",
                    ws.root / "out.json"});
  EXPECT_TRUE(hyps.empty());
  EXPECT_EQ(nlohmann::json::parse(read_file(ws.root / "out.json")), nlohmann::json::object());

  Vocabulary::from_content_tokens({"a", "b"}).save(ws.root / "small.txt");
  try {
    run_generate({ws.root / "m.dsck", ws.features, ws.manifest, ws.root / "small.txt",
                  ws.root / "out.json"});
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("vocab " + std::to_string(vocab.size())), std::string::npos) << what;
    EXPECT_NE(what.find("found 6"), std::string::npos) << what;
  }
}

TEST(Evaluate, FirstReferencesAndUnknownVideo) {
  const auto root = testing::scratch_dir("cli_evaluate");
  write_file(root / "refs.json", R"([{"videoId": "a", "enCap": ["A cat sits on the mat.", "x"]},
                                     {"videoId": "b", "enCap": ["Two dogs play in a park."]}])");
  write_file(root / "hyps.json", R"({"a": "a cat sits on the mat .", "b": "two dogs play in a park ."})");
  std::ostringstream out;
  const auto report = run_evaluate({root / "hyps.json", root / "refs.json", root / "r.json", false}, out);
  EXPECT_EQ(report.at("bleu_4"), 1.0);
  EXPECT_FALSE(report.contains("details"));
  EXPECT_EQ(nlohmann::json::parse(read_file(root / "r.json")), nlohmann::json::parse(out.str()));

  write_file(root / "ghost.json", R"({"ghost": "boo"})");
  EXPECT_THROW(run_evaluate({root / "ghost.json", root / "refs.json", std::nullopt, false}, out),
               ArgumentError);
  EXPECT_EQ(invoke({"evaluate", "--hypotheses", (root / "ghost.json").string(), "--manifest",
                    (root / "refs.json").string()}),
            kExitValidation);
  EXPECT_EQ(invoke({"evaluate", "--hypotheses", (root / "hyps.json").string(), "--manifest",
                    (root / "refs.json").string(), "--verbose"}),
            kExitOk);
}

TEST(Gradcheck, DefaultConfigPasses) {
  const auto report = run_gradcheck(GradcheckOptions{});
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_error, 1e-4);
  EXPECT_EQ(report.trials.size(), 3u);
  for (const auto& t : report.trials) EXPECT_EQ(t.results.size(), kTensorCount);
  std::ostringstream out;
  print_gradcheck(report, 1e-4, out);
  EXPECT_NE(out.str().find("PASS"), std::string::npos);
  EXPECT_EQ(invoke({"gradcheck", "--trials", "1"}), kExitOk);
}

TEST(Gradcheck, CorruptedBackwardFails) {
  const BackwardFn corrupted = [](const ForwardTrace& trace, const ModelParams& params,
                                  const TokenizedCaption& caption) {
    Gradients g = backward(trace, params, caption);
    // Perturb the largest entry; tiny entries sit under the relative-error floor.
    const auto values = g.lstm2.recurrent_weights.values();
    *std::max_element(values.begin(), values.end(),
                      [](double a, double b) { return std::abs(a) < std::abs(b); }) *= 1.01;
    return g;
  };
  GradcheckOptions options;
  options.trials = 1;
  const auto report = run_gradcheck(options, corrupted);
  EXPECT_FALSE(report.passed);
  std::ostringstream out;
  print_gradcheck(report, options.tolerance, out);
  EXPECT_NE(out.str().find("FAIL"), std::string::npos);
}

TEST(Gradcheck, LargeConfigRefusedWithHint) {
  GradcheckOptions options;
  options.hidden = 512;
  try {
    run_gradcheck(options);
    FAIL() << "expected ArgumentError";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("--hidden 8"), std::string::npos);
  }
  EXPECT_EQ(invoke({"gradcheck", "--hidden", "512"}), kExitValidation);
}

TEST(Cli, ConfigFilesAndExitCodes) {
  const auto root = testing::scratch_dir("cli_config");
  write_file(root / "gc.json", R"({"trials": 1, "hidden": 4, "steps": 3})");
  EXPECT_EQ(invoke({"gradcheck", "--config", (root / "gc.json").string()}), kExitOk);
  write_file(root / "bad.json", R"({"hiden": 4})");
  EXPECT_EQ(invoke({"gradcheck", "--config", (root / "bad.json").string()}), kExitValidation);
  EXPECT_EQ(invoke({}), kExitValidation);
  EXPECT_EQ(invoke({"nonsense"}), kExitValidation);
  EXPECT_EQ(invoke({"--help"}), kExitOk);

  GradcheckOptions gc;
  apply_config_json(nlohmann::json::parse(R"({"vocab": 30, "epsilon": 1e-6})"), gc);
  EXPECT_EQ(gc.vocab, 30u);
  EXPECT_EQ(gc.epsilon, 1e-6);
  PreprocessOptions pre;
  apply_config_json(nlohmann::json::parse(R"({"vocab_cap": 100})"), pre);
  EXPECT_EQ(pre.vocab_cap, 100u);
  TrainingConfig tc;
  EXPECT_THROW(apply_config_json(nlohmann::json::parse(R"({"epochs": "many"})"), tc),
               ArgumentError);
}

}  // namespace
}  // namespace dualcap::cli
