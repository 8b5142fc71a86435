#include "dualcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "dualcap/error.hpp"

namespace dualcap {
namespace {

using NgramCounts = std::map<std::string, std::size_t>;

// n-grams keyed by their tokens joined with a unit separator.
NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

void check_corpus(const EvalCorpus& corpus, const char* metric) {
  if (corpus.empty()) throw ArgumentError(std::string(metric) + ": empty corpus");
  for (const auto& entry : corpus) {
    if (entry.references.empty()) {
      throw ArgumentError(std::string(metric) + ": video '" + entry.video_id +
                          "' has no references");
    }
  }
}

std::size_t closest_reference_length(std::size_t hyp_len, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) { return len > hyp_len ? len - hyp_len : hyp_len - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

// Branch and bound over alignments with the maximal match count, looking for
// the most adjacent pairs (chunks = matches - adjacent pairs).
class AlignmentSearch {
 public:
  AlignmentSearch(const Tokens& hyp, const Tokens& ref) : hyp_(hyp), used_(ref.size(), false) {
    std::unordered_map<std::string, std::size_t> ref_counts;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      ref_positions_[ref[j]].push_back(j);
      ++ref_counts[ref[j]];
    }
    std::unordered_map<std::string, std::size_t> hyp_counts;
    for (const auto& w : hyp) ++hyp_counts[w];
    for (const auto& [w, c] : hyp_counts) {
      const std::size_t need = std::min(c, ref_counts[w]);
      need_[w] = need;
      total_matches_ += need;
    }
    suffix_count_.resize(hyp.size());
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = hyp.size(); i-- > 0;) suffix_count_[i] = ++seen[hyp[i]];
  }

  Alignment run() {
    if (total_matches_ == 0) return {};
    search(0, kNone, 0, 0);
    return {total_matches_, total_matches_ - best_adjacent_};
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t kNodeBudget = 2'000'000;

  void search(std::size_t i, std::size_t prev_ref, std::size_t adjacent, std::size_t matched) {
    if (found_ && (adjacent + (total_matches_ - matched) <= best_adjacent_ || nodes_ > kNodeBudget)) {
      return;
    }
    ++nodes_;
    if (matched == total_matches_ || i == hyp_.size()) {
      if (matched == total_matches_ && (!found_ || adjacent > best_adjacent_)) {
        best_adjacent_ = adjacent;
        found_ = true;
      }
      return;
    }
    const std::string& w = hyp_[i];
    auto need_it = need_.find(w);
    const std::size_t need = need_it == need_.end() ? 0 : need_it->second;
    if (need > 0) {
      const auto& positions = ref_positions_[w];
      // Extending the current chunk first finds good solutions early.
      if (prev_ref != kNone && prev_ref + 1 < used_.size() && !used_[prev_ref + 1] &&
          std::binary_search(positions.begin(), positions.end(), prev_ref + 1)) {
        take(i, prev_ref + 1, adjacent + 1, matched, w);
      }
      for (std::size_t j : positions) {
        if (used_[j] || (prev_ref != kNone && j == prev_ref + 1)) continue;
        take(i, j, adjacent, matched, w);
      }
    }
    // Leaving hyp[i] unmatched is allowed only if later copies can still
    // supply every required match of this word.
    if (suffix_count_[i] - 1 >= need) search(i + 1, kNone, adjacent, matched);
  }

  void take(std::size_t i, std::size_t j, std::size_t adjacent, std::size_t matched,
            const std::string& w) {
    used_[j] = true;
    --need_[w];
    search(i + 1, j, adjacent, matched + 1);
    ++need_[w];
    used_[j] = false;
  }

  const Tokens& hyp_;
  std::vector<bool> used_;
  std::unordered_map<std::string, std::vector<std::size_t>> ref_positions_;
  std::unordered_map<std::string, std::size_t> need_;
  std::vector<std::size_t> suffix_count_;
  std::size_t total_matches_ = 0;
  std::size_t best_adjacent_ = 0;
  bool found_ = false;
  std::size_t nodes_ = 0;
};

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

BleuStats bleu_stats(const EvalCorpus& corpus, std::size_t max_n) {
  check_corpus(corpus, "bleu");
  if (max_n == 0) throw ArgumentError("bleu: max_n must be positive");
  BleuStats stats;
  stats.matched.assign(max_n, 0);
  stats.total.assign(max_n, 0);
  for (const auto& entry : corpus) {
    stats.hypothesis_length += entry.hypothesis.size();
    stats.reference_length += closest_reference_length(entry.hypothesis.size(), entry.references);
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts hyp = count_ngrams(entry.hypothesis, n);
      NgramCounts max_ref;
      for (const auto& ref : entry.references) {
        for (const auto& [g, c] : count_ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
      }
      for (const auto& [g, c] : hyp) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) stats.matched[n - 1] += std::min(c, it->second);
        stats.total[n - 1] += c;
      }
    }
  }

  const double c = static_cast<double>(stats.hypothesis_length);
  const double r = static_cast<double>(stats.reference_length);
  stats.brevity_penalty = (c < r) ? (c == 0.0 ? 0.0 : std::exp(1.0 - r / c)) : 1.0;

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const double p = stats.total[n - 1] == 0
                         ? 0.0
                         : static_cast<double>(stats.matched[n - 1]) /
                               static_cast<double>(stats.total[n - 1]);
    stats.precisions.push_back(p);
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    stats.scores.push_back(zero ? 0.0
                                : stats.brevity_penalty *
                                      std::exp(log_sum / static_cast<double>(n)));
  }
  return stats;
}

std::vector<double> bleu(const EvalCorpus& corpus, std::size_t max_n) {
  return bleu_stats(corpus, max_n).scores;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_sentence(const Tokens& hypothesis, std::span<const Tokens> references) {
  if (hypothesis.empty()) return 0.0;
  double best = 0.0;
  constexpr double beta2 = kRougeBeta * kRougeBeta;
  for (const auto& ref : references) {
    const std::size_t l = lcs_length(hypothesis, ref);
    if (l == 0) continue;
    const double p = static_cast<double>(l) / static_cast<double>(hypothesis.size());
    const double r = static_cast<double>(l) / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + beta2) * p * r / (r + beta2 * p));
  }
  return best;
}

double rouge_l(const EvalCorpus& corpus) {
  check_corpus(corpus, "rouge_l");
  std::vector<double> scores;
  for (const auto& e : corpus) scores.push_back(rouge_l_sentence(e.hypothesis, e.references));
  return mean(scores);
}

std::vector<double> cider_per_video(const EvalCorpus& corpus) {
  check_corpus(corpus, "cider");
  constexpr std::size_t kMaxN = 4;
  const double log_videos = std::log(static_cast<double>(corpus.size()));
  std::vector<double> per_video(corpus.size(), 0.0);

  for (std::size_t n = 1; n <= kMaxN; ++n) {
    std::vector<NgramCounts> hyp_counts;
    std::vector<std::vector<NgramCounts>> ref_counts;
    std::map<std::string, std::size_t> doc_freq;
    for (const auto& entry : corpus) {
      hyp_counts.push_back(count_ngrams(entry.hypothesis, n));
      auto& refs = ref_counts.emplace_back();
      std::set<std::string> in_video;
      for (const auto& ref : entry.references) {
        refs.push_back(count_ngrams(ref, n));
        for (const auto& [g, c] : refs.back()) in_video.insert(g);
      }
      for (const auto& g : in_video) ++doc_freq[g];
    }
    const auto idf = [&](const std::string& g) {
      auto it = doc_freq.find(g);
      const double df = it == doc_freq.end() ? 1.0 : static_cast<double>(it->second);
      return log_videos - std::log(df);
    };
    const auto weigh = [&](const NgramCounts& counts) {
      std::map<std::string, double> vec;
      for (const auto& [g, c] : counts) vec[g] = static_cast<double>(c) * idf(g);
      return vec;
    };
    const auto norm = [](const std::map<std::string, double>& v) {
      double acc = 0.0;
      for (const auto& [g, x] : v) acc += x * x;
      return std::sqrt(acc);
    };

    for (std::size_t v = 0; v < corpus.size(); ++v) {
      const auto hyp_vec = weigh(hyp_counts[v]);
      const double hyp_norm = norm(hyp_vec);
      double sim_sum = 0.0;
      for (const auto& ref : ref_counts[v]) {
        const auto ref_vec = weigh(ref);
        const double ref_norm = norm(ref_vec);
        if (hyp_norm == 0.0 || ref_norm == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, x] : hyp_vec) {
          auto it = ref_vec.find(g);
          if (it != ref_vec.end()) dot += x * it->second;
        }
        sim_sum += dot / (hyp_norm * ref_norm);
      }
      per_video[v] += sim_sum / static_cast<double>(ref_counts[v].size());
    }
  }
  for (auto& s : per_video) s = 10.0 * s / static_cast<double>(kMaxN);
  return per_video;
}

double cider(const EvalCorpus& corpus) { return mean(cider_per_video(corpus)); }

Alignment align_exact(const Tokens& hypothesis, const Tokens& reference) {
  return AlignmentSearch(hypothesis, reference).run();
}

double meteor_score(const Tokens& hypothesis, const Tokens& reference) {
  const Alignment a = align_exact(hypothesis, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(hypothesis.size());
  const double r = m / static_cast<double>(reference.size());
  const double f_mean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

double meteor_sentence(const Tokens& hypothesis, std::span<const Tokens> references) {
  double best = 0.0;
  for (const auto& ref : references) best = std::max(best, meteor_score(hypothesis, ref));
  return best;
}

double meteor_exact(const EvalCorpus& corpus) {
  check_corpus(corpus, "meteor");
  std::vector<double> scores;
  for (const auto& e : corpus) scores.push_back(meteor_sentence(e.hypothesis, e.references));
  return mean(scores);
}

EvalReport evaluate_corpus(const EvalCorpus& corpus) {
  EvalReport report;
  const auto b = bleu(corpus, 4);
  report.bleu_1 = b[0];
  report.bleu_2 = b[1];
  report.bleu_3 = b[2];
  report.bleu_4 = b[3];
  report.meteor = meteor_exact(corpus);
  report.rouge_l = rouge_l(corpus);
  const auto cider_scores = cider_per_video(corpus);
  report.cider = mean(cider_scores);

  for (std::size_t v = 0; v < corpus.size(); ++v) {
    const auto& e = corpus[v];
    VideoScore s;
    s.video_id = e.video_id;
    s.bleu_4 = bleu(EvalCorpus{e}, 4)[3];
    s.meteor = meteor_sentence(e.hypothesis, e.references);
    s.rouge_l = rouge_l_sentence(e.hypothesis, e.references);
    s.cider = cider_scores[v];
    report.details.push_back(std::move(s));
  }
  return report;
}

EvalReport evaluate(const std::map<std::string, std::string>& hypotheses,
                    std::span<const CaptionRecord> references) {
  if (hypotheses.empty()) throw ArgumentError("evaluate: no hypotheses");
  std::map<std::string, const CaptionRecord*> by_id;
  for (const auto& rec : references) by_id[rec.video_id] = &rec;

  std::string missing;
  EvalCorpus corpus;
  for (const auto& [id, caption] : hypotheses) {
    auto it = by_id.find(id);
    if (it == by_id.end() || it->second->captions.empty()) {
      missing += (missing.empty() ? "" : ", ") + id;
      continue;
    }
    EvalEntry entry{id, tokenize(caption), {}};
    for (const auto& ref : it->second->captions) entry.references.push_back(tokenize(ref));
    corpus.push_back(std::move(entry));
  }
  if (!missing.empty()) throw ArgumentError("evaluate: no references for video(s): " + missing);
  return evaluate_corpus(corpus);
}

nlohmann::ordered_json report_to_json(const EvalReport& report, bool verbose) {
  nlohmann::ordered_json out;
  out["bleu_1"] = round4(report.bleu_1);
  out["bleu_2"] = round4(report.bleu_2);
  out["bleu_3"] = round4(report.bleu_3);
  out["bleu_4"] = round4(report.bleu_4);
  out["meteor"] = round4(report.meteor);
  out["rouge_l"] = round4(report.rouge_l);
  out["cider"] = round4(report.cider);
  if (verbose) {
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
    for (const auto& d : report.details) {
      details[d.video_id] = {{"bleu_4", round4(d.bleu_4)},
                             {"meteor", round4(d.meteor)},
                             {"rouge_l", round4(d.rouge_l)},
                             {"cider", round4(d.cider)}};
    }
    out["details"] = std::move(details);
  }
  return out;
}

}  // namespace dualcap
