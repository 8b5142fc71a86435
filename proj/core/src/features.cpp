#include "dualcap/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "dualcap/error.hpp"
#include "dualcap/io.hpp"

namespace dualcap {
namespace {

static_assert(std::endian::native == std::endian::little,
              "feature and checkpoint codecs assume a little-endian host");

constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

}  // namespace

std::string encode_features(const FeatureSequence& seq) {
  if (seq.segments.empty()) throw ArgumentError("feature sequence has no segments");
  if (seq.feature_dim == 0) throw ArgumentError("feature dimension must be positive");
  std::string out;
  out.reserve(kHeaderBytes + seq.segments.size() * seq.feature_dim * 4);
  out.append(kFeatureMagic, 4);
  put_u32(out, kFeatureFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(seq.segments.size()));
  put_u32(out, static_cast<std::uint32_t>(seq.feature_dim));
  for (const auto& segment : seq.segments) {
    if (segment.size() != seq.feature_dim) {
      throw DimensionError("segment has " + std::to_string(segment.size()) +
                           " values, expected " + std::to_string(seq.feature_dim));
    }
    for (double v : segment) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw ArgumentError("non-finite feature value in " + seq.video_id);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

FeatureSequence decode_features(std::string_view bytes, std::string video_id) {
  if (bytes.size() < kHeaderBytes) throw FormatError("truncated feature header", bytes.size());
  if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw FormatError("bad magic bytes, expected VFEA", 0);
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFeatureFormatVersion) {
    throw FormatError("unsupported feature format version " + std::to_string(version), 4);
  }
  const std::uint32_t n = get_u32(bytes, 8);
  const std::uint32_t dim = get_u32(bytes, 12);
  if (n == 0) throw FormatError("segment count must be positive", 8);
  if (dim == 0) throw FormatError("feature dimension must be positive", 12);

  const std::size_t expected = kHeaderBytes + std::size_t{n} * dim * 4;
  if (bytes.size() < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()),
                      bytes.size());
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes after payload", expected);

  FeatureSequence seq{std::move(video_id), dim, {}};
  seq.segments.reserve(n);
  std::size_t offset = kHeaderBytes;
  for (std::uint32_t s = 0; s < n; ++s) {
    Vector segment(dim);
    for (std::uint32_t j = 0; j < dim; ++j, offset += 4) {
      float f;
      std::memcpy(&f, bytes.data() + offset, 4);
      if (!std::isfinite(f)) throw FormatError("non-finite feature value", offset);
      segment[j] = f;
    }
    seq.segments.push_back(std::move(segment));
  }
  return seq;
}

FeatureSequence load_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.stem().string());
}

void write_features(const FeatureSequence& seq, const std::filesystem::path& path) {
  write_file(path, encode_features(seq));
}

std::size_t pooled_dim(std::size_t feature_dim, std::size_t window) {
  if (window == 0) throw ArgumentError("pooling window must be at least 1");
  return (feature_dim + window - 1) / window;
}

PooledFeature average_pool(const FeatureSequence& seq, std::size_t window) {
  const std::size_t out_dim = pooled_dim(seq.feature_dim, window);
  if (seq.segments.empty()) throw ArgumentError("feature sequence has no segments");

  PooledFeature pooled{seq.video_id, {}, Vector(out_dim, 0.0)};
  pooled.pooled_segments.reserve(seq.segments.size());
  for (const auto& segment : seq.segments) {
    if (segment.size() != seq.feature_dim) {
      throw DimensionError("segment has " + std::to_string(segment.size()) +
                           " values, expected " + std::to_string(seq.feature_dim));
    }
    Vector out(out_dim);
    for (std::size_t w = 0; w < out_dim; ++w) {
      const std::size_t begin = w * window;
      const std::size_t end = std::min(begin + window, segment.size());
      double sum = 0.0;
      for (std::size_t j = begin; j < end; ++j) sum += segment[j];
      out[w] = sum / static_cast<double>(end - begin);
    }
    pooled.pooled_segments.push_back(std::move(out));
  }

  const double count = static_cast<double>(pooled.pooled_segments.size());
  for (const auto& p : pooled.pooled_segments) {
    for (std::size_t w = 0; w < out_dim; ++w) pooled.summary[w] += p[w];
  }
  for (auto& v : pooled.summary) v /= count;
  return pooled;
}

Vector project_summary(std::span<const double> summary, const Matrix& projection,
                       std::span<const double> bias) {
  if (projection.cols() != summary.size() || projection.rows() != bias.size()) {
    throw DimensionError("projection " + projection.shape_string() + " cannot map summary of " +
                         std::to_string(summary.size()) + " values with bias of " +
                         std::to_string(bias.size()));
  }
  Vector out = matvec(projection, summary);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i];
  return out;
}

FeatureStore::FeatureStore(std::filesystem::path feature_dir) : dir_(std::move(feature_dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ArgumentError("feature directory does not exist: " + dir_.string());
  }
  const auto manifest_path = dir_ / "features.json";
  if (std::filesystem::exists(manifest_path)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(manifest_path.string() + ": " + e.what(), e.byte);
    }
    if (!doc.is_object()) throw FormatError(manifest_path.string() + ": expected an object", 0);
    for (const auto& [id, rel] : doc.items()) {
      if (!rel.is_string()) {
        throw FormatError(manifest_path.string() + ": path for '" + id + "' is not a string", 0);
      }
      manifest_[id] = dir_ / rel.get<std::string>();
    }
    has_manifest_ = true;
  }
}

std::filesystem::path FeatureStore::path_for(const std::string& video_id) const {
  if (has_manifest_) {
    auto it = manifest_.find(video_id);
    if (it != manifest_.end()) return it->second;
  }
  return dir_ / (video_id + std::string(kFeatureExtension));
}

bool FeatureStore::contains(const std::string& video_id) const {
  return std::filesystem::is_regular_file(path_for(video_id));
}

FeatureSequence FeatureStore::load(const std::string& video_id) const {
  const auto path = path_for(video_id);
  if (!std::filesystem::is_regular_file(path)) {
    throw ArgumentError("no feature file for video '" + video_id + "' (" + path.string() + ")");
  }
  FeatureSequence seq = load_features(path);
  seq.video_id = video_id;
  return seq;
}

}  // namespace dualcap
