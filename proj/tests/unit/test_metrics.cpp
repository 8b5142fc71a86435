#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <gtest/gtest.h>

#include "dualcap/error.hpp"
#include "dualcap/metrics.hpp"
#include "dualcap/rng.hpp"

namespace dualcap {
namespace {

Tokens words(const std::string& s) { return tokenize(s); }

Tokens random_sentence(Rng& rng, std::size_t min_len, std::size_t max_len, std::size_t vocab) {
  Tokens t;
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  for (std::size_t i = 0; i < len; ++i) t.push_back("w" + std::to_string(rng.below(vocab)));
  return t;
}

EvalCorpus random_corpus(Rng& rng, std::size_t min_len = 1) {
  EvalCorpus corpus;
  const std::size_t videos = 1 + rng.below(5);
  for (std::size_t v = 0; v < videos; ++v) {
    EvalEntry e{"v" + std::to_string(v), random_sentence(rng, min_len, 10, 6), {}};
    for (std::size_t r = 0, n = 1 + rng.below(4); r < n; ++r) {
      e.references.push_back(random_sentence(rng, 1, 10, 6));
    }
    corpus.push_back(std::move(e));
  }
  return corpus;
}

// Exhaustive search over partial injective matchings of equal words.
Alignment brute_force_alignment(const Tokens& hyp, const Tokens& ref) {
  Alignment best;
  std::vector<int> map(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == hyp.size()) {
      std::size_t m = 0, chunks = 0;
      for (std::size_t k = 0; k < hyp.size(); ++k) {
        if (map[k] < 0) continue;
        ++m;
        if (k == 0 || map[k - 1] < 0 || map[k - 1] + 1 != map[k]) ++chunks;
      }
      if (m > best.matches || (m == best.matches && m > 0 && chunks < best.chunks)) {
        best = {m, chunks};
      }
      return;
    }
    go(i + 1);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || ref[j] != hyp[i]) continue;
      used[j] = true;
      map[i] = static_cast<int>(j);
      go(i + 1);
      map[i] = -1;
      used[j] = false;
    }
  };
  go(0);
  return best;
}

TEST(Bleu, IdentityIsOne) {
  const EvalCorpus c{{"v", words("a man is playing guitar"), {words("a man is playing guitar")}}};
  for (double s : bleu(c)) EXPECT_DOUBLE_EQ(s, 1.0);
}

TEST(Bleu, ClippedUnigramPrecision) {
  const EvalCorpus c{{"v", words("the the the the the the the"), {words("the cat is on the mat")}}};
  const auto stats = bleu_stats(c);
  EXPECT_EQ(stats.matched[0], 2u);
  EXPECT_EQ(stats.total[0], 7u);
  EXPECT_DOUBLE_EQ(stats.precisions[0], 2.0 / 7.0);
}

TEST(Bleu, BrevityPenalty) {
  const EvalCorpus c{{"v", words("a b c"), {words("a b c d e f")}}};
  const auto stats = bleu_stats(c, 3);
  EXPECT_EQ(stats.hypothesis_length, 3u);
  EXPECT_EQ(stats.reference_length, 6u);
  EXPECT_DOUBLE_EQ(stats.brevity_penalty, std::exp(-1.0));
  EXPECT_DOUBLE_EQ(stats.scores[2], std::exp(-1.0));
}

TEST(Bleu, ClosestReferenceTiePrefersShorter) {
  const EvalCorpus c{{"v", words("a b c d"), {words("a b c d e f"), words("a b")}}};
  EXPECT_EQ(bleu_stats(c).reference_length, 2u);
}

TEST(Bleu, ZeroPrecisionZeroesHigherOrders) {
  const EvalCorpus c{{"v", words("a x b y"), {words("a b")}}};
  const auto s = bleu(c);
  EXPECT_GT(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[3], 0.0);
}

// Clipping is per reference, so every bigram can match while a unigram does
// not: the order bleu_1 >= bleu_2 is not guaranteed by the definition.
TEST(Bleu, HigherOrderCanExceedLowerWithMultipleReferences) {
  const auto s = bleu_stats({{"v", words("a b a"), {words("a b"), words("b a")}}}, 2);
  EXPECT_DOUBLE_EQ(s.precisions[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.precisions[1], 1.0);
  EXPECT_DOUBLE_EQ(s.brevity_penalty, 1.0);
  EXPECT_NEAR(s.scores[1], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_GT(s.scores[1], s.scores[0]);
}

TEST(Bleu, EmptyCorpusRejected) { EXPECT_THROW(bleu(EvalCorpus{}), ArgumentError); }

// Clipped counts against a direct recount, and monotone in added references.
TEST(Bleu, ClippedCountsMatchRecountAndGrowWithReferences) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    EvalCorpus corpus = random_corpus(rng);
    for (std::size_t n = 1; n <= 4; ++n) {
      std::size_t matched = 0;
      for (const auto& e : corpus) {
        if (e.hypothesis.size() < n) continue;
        std::vector<Tokens> grams;
        for (std::size_t i = 0; i + n <= e.hypothesis.size(); ++i)
          grams.emplace_back(e.hypothesis.begin() + i, e.hypothesis.begin() + i + n);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (const auto& g : grams) {
          const auto count_in = [&](const Tokens& s) {
            std::size_t c = 0;
            for (std::size_t i = 0; i + n <= s.size(); ++i)
              c += std::equal(g.begin(), g.end(), s.begin() + i);
            return c;
          };
          std::size_t best_ref = 0;
          for (const auto& r : e.references) best_ref = std::max(best_ref, count_in(r));
          matched += std::min(count_in(e.hypothesis), best_ref);
        }
      }
      EXPECT_EQ(bleu_stats(corpus).matched[n - 1], matched);
    }
    const auto before = bleu_stats(corpus);
    corpus[rng.below(corpus.size())].references.push_back(random_sentence(rng, 1, 10, 6));
    const auto after = bleu_stats(corpus);
    for (std::size_t n = 0; n < 4; ++n) {
      EXPECT_GE(after.matched[n], before.matched[n]);
      EXPECT_GE(after.precisions[n], before.precisions[n]);
    }
  }
}

TEST(RougeL, Cases) {
  const Tokens h = words("a b c d");
  const std::vector<Tokens> same{h};
  EXPECT_DOUBLE_EQ(rouge_l_sentence(h, same), 1.0);
  const std::vector<Tokens> ref{words("a c d")};
  const double expected = (2.44 * 0.75) / (1.0 + 1.44 * 0.75);
  EXPECT_NEAR(rouge_l_sentence(h, ref), expected, 1e-12);
  EXPECT_NEAR(rouge_l_sentence(h, ref), 0.8798, 1e-4);
  const std::vector<Tokens> disjoint{words("x y z")};
  EXPECT_EQ(rouge_l_sentence(h, disjoint), 0.0);
  EXPECT_EQ(rouge_l_sentence(Tokens{}, ref), 0.0);
  const std::vector<Tokens> two{words("x y z"), words("a c d")};
  EXPECT_NEAR(rouge_l_sentence(h, two), expected, 1e-12);
}

TEST(RougeL, LcsAgainstBruteForce) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Tokens a = random_sentence(rng, 0, 7, 4), b = random_sentence(rng, 0, 7, 4);
    // Longest common subsequence by enumerating subsets of a.
    std::size_t best = 0;
    for (std::size_t mask = 0; mask < (1u << a.size()); ++mask) {
      Tokens sub;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (mask >> i & 1) sub.push_back(a[i]);
      std::size_t j = 0;
      for (const auto& t : b)
        if (j < sub.size() && t == sub[j]) ++j;
      if (j == sub.size()) best = std::max(best, sub.size());
    }
    EXPECT_EQ(lcs_length(a, b), best);
  }
}

TEST(Cider, DisjointSelfMatchScoresTen) {
  const EvalCorpus c{{"v1", words("a man plays a guitar"), {words("a man plays a guitar")}},
                     {"v2", words("the dog runs on grass"), {words("the dog runs on grass")}}};
  EXPECT_NEAR(cider(c), 10.0, 1e-12);
}

TEST(Cider, SingleVideoHasZeroIdf) {
  const EvalCorpus c{{"v", words("a man plays guitar"), {words("a man plays guitar")}}};
  EXPECT_EQ(cider(c), 0.0);
}

TEST(Cider, UnsharedNgramsContributeNothing) {
  const EvalCorpus c{{"v1", words("x y z w"), {words("a man plays a guitar")}},
                     {"v2", words("the dog runs on grass"), {words("the dog runs on grass")}}};
  const auto per = cider_per_video(c);
  EXPECT_EQ(per[0], 0.0);
  EXPECT_NEAR(per[1], 10.0, 1e-12);
  EXPECT_NEAR(cider(c), 5.0, 1e-12);
}

TEST(Cider, CommonNgramHasZeroWeight) {
  // "a" occurs in every video's references, so only "x" and "a x" carry weight.
  const EvalCorpus with{{"v1", words("a x"), {words("a x")}}, {"v2", words("a y"), {words("a y")}}};
  const EvalCorpus without{{"v1", words("x"), {words("x")}}, {"v2", words("y"), {words("y")}}};
  EXPECT_NEAR(cider_per_video(with)[0], 10.0 * 2.0 / 4.0, 1e-12);
  EXPECT_NEAR(cider_per_video(without)[0], 2.5, 1e-12);
}

TEST(Meteor, Cases) {
  const Tokens s = words("a man is playing guitar");
  EXPECT_NEAR(meteor_score(s, s), 0.996, 1e-12);
  EXPECT_EQ(meteor_score(words("x y"), s), 0.0);
  // Reversed order: every match is its own chunk.
  const Tokens h = words("c b a");
  const Tokens r = words("a b c");
  const auto al = align_exact(h, r);
  EXPECT_EQ(al.matches, 3u);
  EXPECT_EQ(al.chunks, 3u);
  EXPECT_NEAR(meteor_score(h, r), 0.5, 1e-12);
}

TEST(Meteor, AlignmentAgainstBruteForce) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const Tokens h = random_sentence(rng, 0, 7, 3), r = random_sentence(rng, 0, 7, 3);
    const auto fast = align_exact(h, r);
    const auto slow = brute_force_alignment(h, r);
    EXPECT_EQ(fast.matches, slow.matches);
    EXPECT_EQ(fast.chunks, slow.chunks);
  }
}

TEST(Meteor, SelfEvaluation) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tokens s = random_sentence(rng, 1, 12, 5);
    const double m = static_cast<double>(s.size());
    EXPECT_NEAR(meteor_score(s, s), 1.0 - 0.5 / (m * m * m), 1e-12);
  }
}

TEST(Metrics, InvariantUnderVideoOrder) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    EvalCorpus c = random_corpus(rng);
    const auto a = evaluate_corpus(c);
    std::reverse(c.begin(), c.end());
    const auto b = evaluate_corpus(c);
    EXPECT_DOUBLE_EQ(a.bleu_4, b.bleu_4);
    EXPECT_DOUBLE_EQ(a.bleu_1, b.bleu_1);
    EXPECT_NEAR(a.meteor, b.meteor, 1e-12);
    EXPECT_NEAR(a.rouge_l, b.rouge_l, 1e-12);
    EXPECT_NEAR(a.cider, b.cider, 1e-12);
  }
}

TEST(Metrics, RangesHold) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = evaluate_corpus(random_corpus(rng));
    for (double v : {r.bleu_1, r.bleu_2, r.bleu_3, r.bleu_4, r.meteor, r.rouge_l}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(r.cider, 0.0);
  }
}

TEST(Evaluate, ComposesStandaloneMetrics) {
  const std::vector<CaptionRecord> refs{{"v1", {"A man plays a guitar.", "Someone plays music."}},
                                        {"v2", {"The dog runs on the grass."}}};
  const std::map<std::string, std::string> hyps{{"v1", "a man plays guitar"},
                                                {"v2", "a dog runs on grass"}};
  const auto report = evaluate(hyps, refs);
  EvalCorpus corpus{{"v1", words("a man plays guitar"),
                     {words("A man plays a guitar."), words("Someone plays music.")}},
                    {"v2", words("a dog runs on grass"), {words("The dog runs on the grass.")}}};
  EXPECT_EQ(report.bleu_4, bleu(corpus)[3]);
  EXPECT_EQ(report.meteor, meteor_exact(corpus));
  EXPECT_EQ(report.rouge_l, rouge_l(corpus));
  EXPECT_EQ(report.cider, cider(corpus));
  ASSERT_EQ(report.details.size(), 2u);
  EXPECT_EQ(report.details[0].video_id, "v1");
}

TEST(Evaluate, FirstReferencesScorePerfectBleu) {
  const std::vector<CaptionRecord> refs{{"v1", {"a man plays a guitar", "x"}},
                                        {"v2", {"the dog runs on the grass", "y"}}};
  const auto report = evaluate({{"v1", "a man plays a guitar"}, {"v2", "the dog runs on the grass"}},
                               refs);
  EXPECT_DOUBLE_EQ(report.bleu_4, 1.0);
  EXPECT_DOUBLE_EQ(report.rouge_l, 1.0);
}

TEST(Evaluate, Errors) {
  const std::vector<CaptionRecord> refs{{"v1", {"a b"}}};
  EXPECT_THROW(evaluate({}, refs), ArgumentError);
  try {
    evaluate({{"v1", "a"}, {"ghost", "b"}, {"phantom", "c"}}, refs);
    FAIL() << "expected ArgumentError";
  } catch (const ArgumentError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("ghost"), std::string::npos);
    EXPECT_NE(what.find("phantom"), std::string::npos);
  }
}

TEST(ReportJson, RoundedFieldsAndDetails) {
  EvalReport r;
  r.bleu_1 = 0.123456;
  r.cider = 1.99996;
  r.details.push_back({"v", 0.5, 0.25, 0.125, 0.0625});
  const auto plain = report_to_json(r);
  EXPECT_EQ(plain.size(), 7u);
  EXPECT_DOUBLE_EQ(plain["bleu_1"].get<double>(), 0.1235);
  EXPECT_DOUBLE_EQ(plain["cider"].get<double>(), 2.0);
  EXPECT_FALSE(plain.contains("details"));
  const auto verbose = report_to_json(r, true);
  EXPECT_DOUBLE_EQ(verbose["details"]["v"]["rouge_l"].get<double>(), 0.125);
  EXPECT_EQ(verbose.begin().key(), "bleu_1");
}

}  // namespace
}  // namespace dualcap
