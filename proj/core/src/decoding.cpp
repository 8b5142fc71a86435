#include "dualcap/decoding.hpp"

#include "dualcap/error.hpp"
#include "dualcap/features.hpp"

namespace dualcap {

TokenId greedy_argmax(std::span<const double> scores) {
  if (scores.size() <= kEosId) throw ArgumentError("greedy_argmax: score vector too short");
  TokenId best = kEosId;
  for (std::size_t v = kEosId + 1; v < scores.size(); ++v) {
    if (scores[v] > scores[best]) best = static_cast<TokenId>(v);
  }
  return best;
}

std::vector<TokenId> greedy_generate(const ModelParams& params, std::span<const double> pooled,
                                     const Vocabulary& vocab, std::size_t max_len) {
  const ModelDims& dims = params.dims;
  if (vocab.size() != dims.vocab_size) {
    throw DimensionError("vocabulary has " + std::to_string(vocab.size()) +
                         " entries, model expects " + std::to_string(dims.vocab_size));
  }
  if (pooled.size() != dims.pooled_dim) {
    throw DimensionError("pooled feature has " + std::to_string(pooled.size()) +
                         " values, model expects " + std::to_string(dims.pooled_dim));
  }

  const Vector visual =
      project_summary(pooled, params.visual_projection, params.visual_bias.values());
  LSTMState s1{visual, Vector(dims.hidden, 0.0)};
  LSTMState s2{Vector(dims.hidden, 0.0), Vector(dims.hidden, 0.0)};
  Vector embedded(dims.embed_dim);
  Vector stream2_input(dims.embed_dim + dims.hidden);
  std::copy(visual.begin(), visual.end(), stream2_input.begin() + dims.embed_dim);

  std::vector<TokenId> out;
  TokenId previous = kBosId;
  while (out.size() < max_len) {
    for (std::size_t e = 0; e < dims.embed_dim; ++e) {
      embedded[e] = params.embedding(e, previous) + params.embedding_bias[e];
    }
    std::copy(embedded.begin(), embedded.end(), stream2_input.begin());
    s1 = lstm_step(params.lstm1, embedded, s1.h, s1.c);
    s2 = lstm_step(params.lstm2, stream2_input, s2.h, s2.c);

    Vector fused(dims.hidden);
    for (std::size_t k = 0; k < dims.hidden; ++k) fused[k] = s1.h[k] * s2.h[k];
    Vector logits = matvec(params.output_weights, fused);
    for (std::size_t v = 0; v < dims.vocab_size; ++v) logits[v] += params.output_bias[v];

    // Softmax is monotone, so the argmax of the logits is the most probable word.
    const TokenId next = greedy_argmax(logits);
    if (next == kEosId) break;
    out.push_back(next);
    previous = next;
  }
  return out;
}

std::string generate_caption(const ModelParams& params, std::span<const double> pooled,
                             const Vocabulary& vocab, std::size_t max_len) {
  return decode_ids(greedy_generate(params, pooled, vocab, max_len), vocab);
}

}  // namespace dualcap
