#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualcap/matrix.hpp"

namespace dualcap {

// Per-segment visual features for one video, temporally ordered.
struct FeatureSequence {
  std::string video_id;
  std::size_t feature_dim = 0;
  std::vector<Vector> segments;

  bool operator==(const FeatureSequence&) const = default;
};

struct PooledFeature {
  std::string video_id;
  std::vector<Vector> pooled_segments;
  // Mean over pooled_segments; the single conditioning vector of the decoder.
  Vector summary;
};

inline constexpr std::size_t kDefaultPoolWindow = 5;
inline constexpr char kFeatureMagic[4] = {'V', 'F', 'E', 'A'};
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::string_view kFeatureExtension = ".vfea";

// .vfea layout (little-endian): "VFEA", u32 version = 1, u32 n, u32 m_x,
// then n * m_x float32 values, segment-major.
std::string encode_features(const FeatureSequence& seq);
FeatureSequence decode_features(std::string_view bytes, std::string video_id);

// video_id is taken from the file stem.
FeatureSequence load_features(const std::filesystem::path& path);
void write_features(const FeatureSequence& seq, const std::filesystem::path& path);

// Non-overlapping windows along the feature axis of each segment; a trailing
// partial window is averaged over its actual length.
PooledFeature average_pool(const FeatureSequence& seq, std::size_t window = kDefaultPoolWindow);

std::size_t pooled_dim(std::size_t feature_dim, std::size_t window = kDefaultPoolWindow);

// projection * f_a + bias
Vector project_summary(std::span<const double> summary, const Matrix& projection,
                       std::span<const double> bias);

// Resolves video_id -> feature file inside `feature_dir`. When the directory
// holds a features.json manifest ({"<video_id>": "<relative path>"}) it is
// used; otherwise files are expected at <feature_dir>/<video_id>.vfea.
class FeatureStore {
 public:
  explicit FeatureStore(std::filesystem::path feature_dir);

  std::filesystem::path path_for(const std::string& video_id) const;
  bool contains(const std::string& video_id) const;
  FeatureSequence load(const std::string& video_id) const;

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::filesystem::path> manifest_;
  bool has_manifest_ = false;
};

}  // namespace dualcap
