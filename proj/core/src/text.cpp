#include "dualcap/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dualcap/error.hpp"
#include "dualcap/io.hpp"

namespace dualcap {
namespace {

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

void split_word(std::string word, Tokens& out) {
  std::size_t begin = 0;
  while (begin < word.size() && is_ascii_punct(word[begin]) &&
         std::string_view(word).substr(begin) != "'s") {
    out.emplace_back(1, word[begin]);
    ++begin;
  }
  std::size_t end = word.size();
  while (end > begin && is_ascii_punct(word[end - 1])) --end;

  std::string core = word.substr(begin, end - begin);
  if (core.size() > 2 && core.ends_with("'s")) {
    out.push_back(core.substr(0, core.size() - 2));
    out.emplace_back("'s");
  } else if (!core.empty()) {
    out.push_back(std::move(core));
  }
  for (std::size_t i = end; i < word.size(); ++i) out.emplace_back(1, word[i]);
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string word;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!word.empty()) split_word(std::exchange(word, {}), out);
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!word.empty()) split_word(std::move(word), out);
  return out;
}

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kBosToken));
  add(std::string(kEosToken));
  add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
  if (token.empty()) throw ArgumentError("vocabulary tokens must be non-empty");
  if (token.find_first_of(" \t\r\n") != std::string::npos) {
    throw ArgumentError("vocabulary token contains whitespace: '" + token + "'");
  }
  const auto id = static_cast<TokenId>(id_to_token_.size());
  if (!token_to_id_.emplace(token, id).second) {
    throw ArgumentError("duplicate vocabulary token '" + token + "'");
  }
  id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, std::size_t cap) {
  if (corpus.empty()) throw ArgumentError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& caption : corpus) {
    for (const auto& tok : caption) ++counts[tok];
  }
  // Reserved spellings never become content entries.
  for (auto reserved : {kPadToken, kBosToken, kEosToken, kUnkToken}) {
    counts.erase(std::string(reserved));
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > cap) ranked.resize(cap);

  Vocabulary vocab;
  for (auto& [tok, count] : ranked) vocab.add(std::move(tok));
  return vocab;
}

Vocabulary Vocabulary::from_content_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  for (auto& tok : tokens) vocab.add(std::move(tok));
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw FormatError(path.string() + ": empty token on line " +
                            std::to_string(tokens.size() + 1),
                        static_cast<std::size_t>(in.tellg()));
    }
    tokens.push_back(std::move(line));
  }
  return from_content_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (std::size_t i = kFirstContentId; i < id_to_token_.size(); ++i) {
    out += id_to_token_[i];
    out += '\n';
  }
  write_file(path, out);
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw ArgumentError("token id " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

TokenizedCaption encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  TokenizedCaption caption;
  caption.content_length = std::min(tokens.size(), kMaxContentTokens);
  caption.ids[0] = kBosId;
  for (std::size_t i = 0; i < caption.content_length; ++i) {
    caption.ids[i + 1] = vocab.id(tokens[i]);
  }
  caption.ids[caption.content_length + 1] = kEosId;
  return caption;
}

std::string decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token(id);
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::vector<CaptionRecord> parse_caption_manifest(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("caption manifest: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw FormatError("caption manifest must be a JSON array", 0);

  std::vector<CaptionRecord> records;
  records.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    const std::string where = "caption manifest entry " + std::to_string(i);
    if (!entry.is_object() || !entry.contains("videoId") || !entry["videoId"].is_string()) {
      throw FormatError(where + ": missing string field 'videoId'", 0);
    }
    CaptionRecord record{entry["videoId"].get<std::string>(), {}};
    if (entry.contains("enCap")) {
      const auto& caps = entry["enCap"];
      if (!caps.is_array()) throw FormatError(where + ": 'enCap' must be an array", 0);
      for (const auto& c : caps) {
        if (!c.is_string()) throw FormatError(where + ": captions must be strings", 0);
        record.captions.push_back(c.get<std::string>());
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<CaptionRecord> load_caption_manifest(const std::filesystem::path& path) {
  try {
    return parse_caption_manifest(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace dualcap
