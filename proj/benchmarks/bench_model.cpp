#include <benchmark/benchmark.h>

#include "dualcap/decoding.hpp"
#include "dualcap/model.hpp"
#include "dualcap/rng.hpp"

namespace {

using namespace dualcap;

struct Vocabulary make_vocab() {
  std::vector<std::string> words;
  for (int i = 0; i < 500; ++i) words.push_back("w" + std::to_string(i));
  return Vocabulary::from_content_tokens(words);
}

struct Fixture {
  Vocabulary vocab = make_vocab();
  ModelParams params;
  Vector pooled;
  TokenizedCaption caption;

  explicit Fixture(std::size_t hidden) {
    params = init_params({vocab.size(), 128, hidden, 256}, 1);
    Rng rng(2);
    pooled.resize(256);
    for (auto& v : pooled) v = rng.uniform(-1.0, 1.0);
    std::vector<std::string> tokens;
    for (int i = 0; i < 12; ++i) tokens.push_back("w" + std::to_string(rng.below(500)));
    caption = encode(tokens, vocab);
  }
};

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const ForwardOptions opts{0.5, Mode::train, 3};
  for (auto _ : state) {
    const auto trace = forward(f.params, f.pooled, f.caption, opts);
    benchmark::DoNotOptimize(backward(trace, f.params, f.caption));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_GreedyGenerate(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(greedy_generate(f.params, f.pooled, f.vocab));
}
BENCHMARK(BM_GreedyGenerate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
