#include <benchmark/benchmark.h>

#include "dualcap/metrics.hpp"
#include "dualcap/rng.hpp"

namespace {

using namespace dualcap;

Tokens sentence(Rng& rng) {
  Tokens t;
  for (std::size_t i = 0, n = 5 + rng.below(10); i < n; ++i)
    t.push_back("w" + std::to_string(rng.below(200)));
  return t;
}

void BM_EvaluateCorpus(benchmark::State& state) {
  Rng rng(5);
  EvalCorpus corpus;
  for (int v = 0; v < state.range(0); ++v) {
    EvalEntry e{"v" + std::to_string(v), sentence(rng), {}};
    for (int r = 0; r < 20; ++r) e.references.push_back(sentence(rng));
    corpus.push_back(std::move(e));
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_corpus(corpus));
}
BENCHMARK(BM_EvaluateCorpus)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
