#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcap/text.hpp"

namespace dualcap {

struct EvalEntry {
  std::string video_id;
  Tokens hypothesis;
  std::vector<Tokens> references;
};

using EvalCorpus = std::vector<EvalEntry>;

// Corpus-level BLEU internals, kept for inspection and tests.
struct BleuStats {
  std::vector<std::size_t> matched;  // clipped n-gram matches, index n-1
  std::vector<std::size_t> total;    // hypothesis n-grams, index n-1
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;  // sum of closest reference lengths
  double brevity_penalty = 1.0;
  std::vector<double> precisions;
  std::vector<double> scores;  // BLEU-1..BLEU-max_n
};

BleuStats bleu_stats(const EvalCorpus& corpus, std::size_t max_n = 4);
std::vector<double> bleu(const EvalCorpus& corpus, std::size_t max_n = 4);

inline constexpr double kRougeBeta = 1.2;

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
double rouge_l_sentence(const Tokens& hypothesis, std::span<const Tokens> references);
double rouge_l(const EvalCorpus& corpus);

// Per-video CIDEr (already scaled by 10) in corpus order.
std::vector<double> cider_per_video(const EvalCorpus& corpus);
double cider(const EvalCorpus& corpus);

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-match unigram alignment with the most matches, and among those the
// fewest chunks.
Alignment align_exact(const Tokens& hypothesis, const Tokens& reference);
double meteor_score(const Tokens& hypothesis, const Tokens& reference);
double meteor_sentence(const Tokens& hypothesis, std::span<const Tokens> references);
double meteor_exact(const EvalCorpus& corpus);

struct VideoScore {
  std::string video_id;
  double bleu_4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

struct EvalReport {
  double bleu_1 = 0.0;
  double bleu_2 = 0.0;
  double bleu_3 = 0.0;
  double bleu_4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::vector<VideoScore> details;
};

EvalReport evaluate_corpus(const EvalCorpus& corpus);

// Tokenizes both sides with tokenize() and scores every hypothesis against
// the references of its video.
EvalReport evaluate(const std::map<std::string, std::string>& hypotheses,
                    std::span<const CaptionRecord> references);

// Seven score fields rounded to 4 decimals; "details" only when verbose.
nlohmann::ordered_json report_to_json(const EvalReport& report, bool verbose = false);

}  // namespace dualcap
