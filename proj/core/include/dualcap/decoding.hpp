#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dualcap/model.hpp"
#include "dualcap/text.hpp"

namespace dualcap {

// Index of the largest score among EOS and content ids (PAD and BOS are
// never emitted); ties go to the smallest id.
TokenId greedy_argmax(std::span<const double> scores);

// Greedy decoding from BOS. Each step feeds back the previous argmax; stops
// at EOS or after `max_len` content tokens. BOS/EOS are not returned.
std::vector<TokenId> greedy_generate(const ModelParams& params, std::span<const double> pooled,
                                     const Vocabulary& vocab,
                                     std::size_t max_len = kMaxContentTokens);

std::string generate_caption(const ModelParams& params, std::span<const double> pooled,
                             const Vocabulary& vocab, std::size_t max_len = kMaxContentTokens);

}  // namespace dualcap
