#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dualcap {

using TokenId = std::uint32_t;
using Tokens = std::vector<std::string>;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kFirstContentId = 4;

inline constexpr std::size_t kMaxContentTokens = 30;
inline constexpr std::size_t kEncodedLength = kMaxContentTokens + 2;
inline constexpr std::size_t kDefaultVocabCap = 15000;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kUnkToken = "UKN";

// Lowercase, split on whitespace, detach leading/trailing ASCII punctuation
// one character per token, split a trailing "'s" clitic.
Tokens tokenize(std::string_view text);

class Vocabulary {
 public:
  // Keeps the `cap` most frequent tokens; ties go to the lexicographically
  // smaller token.
  static Vocabulary build(std::span<const Tokens> corpus, std::size_t cap = kDefaultVocabCap);
  // Content tokens in id order, first one gets kFirstContentId.
  static Vocabulary from_content_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path& path);
  // One content token per line; line i holds id i + 4.
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return id_to_token_.size(); }
  bool contains(std::string_view token) const;
  // UKN for tokens not in the vocabulary.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::span<const std::string> tokens() const noexcept { return id_to_token_; }

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  Vocabulary();
  void add(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

struct TokenizedCaption {
  std::array<TokenId, kEncodedLength> ids{};
  std::size_t content_length = 0;

  // Number of teacher-forced steps: BOS plus each content token.
  std::size_t steps() const noexcept { return content_length + 1; }
  bool operator==(const TokenizedCaption&) const = default;
};

TokenizedCaption encode(std::span<const std::string> tokens, const Vocabulary& vocab);
std::string decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab);

// Entry of the caption manifest: [{"videoId": ..., "enCap": [...]}, ...]
struct CaptionRecord {
  std::string video_id;
  std::vector<std::string> captions;
};

std::vector<CaptionRecord> parse_caption_manifest(std::string_view json_text);
std::vector<CaptionRecord> load_caption_manifest(const std::filesystem::path& path);

}  // namespace dualcap
