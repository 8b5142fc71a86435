#include "dualcap/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include "dualcap/error.hpp"
#include "dualcap/io.hpp"

namespace dualcap {
namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }

  void tensor(std::string_view name, const Matrix& m) {
    put(static_cast<std::uint16_t>(name.size()));
    out_.append(name);
    put(static_cast<std::uint32_t>(m.rows()));
    put(static_cast<std::uint32_t>(m.cols()));
    for (double v : m.values()) put(v);
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Matrix tensor(std::string_view expected_name) {
    const std::size_t at = pos_;
    const auto len = get<std::uint16_t>();
    const std::string_view name = raw(len);
    if (name != expected_name) {
      throw FormatError("expected tensor '" + std::string(expected_name) + "', found '" +
                            std::string(name) + "'",
                        at);
    }
    const auto rows = get<std::uint32_t>();
    const auto cols = get<std::uint32_t>();
    need(std::size_t{rows} * cols * sizeof(double));
    std::vector<double> values(std::size_t{rows} * cols);
    for (auto& v : values) {
      const std::size_t value_at = pos_;
      v = get<double>();
      if (!std::isfinite(v)) throw FormatError("non-finite value in '" + std::string(name) + "'", value_at);
    }
    return Matrix(rows, cols, std::move(values));
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint", bytes_.size());
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string moment_name(std::string_view tensor, char which) {
  return "adam." + std::string(tensor) + "." + which;
}

}  // namespace

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
  OptimizerState state;
  for (const Matrix* m : params.tensors()) state.tensors.push_back(AdamState::zeros_like(*m));
  return state;
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  const ModelParams& p = checkpoint.params;
  const auto& names = ModelParams::tensor_names();
  Writer w;
  for (char c : kCheckpointMagic) w.put(c);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(p.dims.vocab_size));
  w.put(static_cast<std::uint32_t>(p.dims.embed_dim));
  w.put(static_cast<std::uint32_t>(p.dims.hidden));
  w.put(static_cast<std::uint32_t>(p.dims.pooled_dim));
  w.put(checkpoint.epochs_completed);

  const auto tensors = p.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) w.tensor(names[k], *tensors[k]);

  if (checkpoint.optimizer) {
    const auto& opt = *checkpoint.optimizer;
    if (opt.tensors.size() != kTensorCount) {
      throw DimensionError("optimizer state covers " + std::to_string(opt.tensors.size()) +
                           " tensors, expected " + std::to_string(kTensorCount));
    }
    const std::uint64_t step = opt.tensors.front().step_count;
    w.tensor("adam.step", Matrix(1, 1, {static_cast<double>(step)}));
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      if (opt.tensors[k].step_count != step) {
        throw StateError("optimizer tensors disagree on step count");
      }
      w.tensor(moment_name(names[k], 'm'), opt.tensors[k].first_moment);
      w.tensor(moment_name(names[k], 'v'), opt.tensors[k].second_moment);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad magic bytes, expected DSCK", 0);
  }
  r.raw(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  ModelDims dims;
  dims.vocab_size = r.get<std::uint32_t>();
  dims.embed_dim = r.get<std::uint32_t>();
  dims.hidden = r.get<std::uint32_t>();
  dims.pooled_dim = r.get<std::uint32_t>();

  Checkpoint checkpoint;
  checkpoint.epochs_completed = r.get<std::uint32_t>();

  try {
    checkpoint.params = ModelParams::zeros(dims);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid dims block: ") + e.what(), 8);
  }
  const auto& names = ModelParams::tensor_names();
  auto tensors = checkpoint.params.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k) {
    const std::size_t at = r.pos();
    Matrix m = r.tensor(names[k]);
    if (!m.same_shape(*tensors[k])) {
      throw FormatError("tensor '" + std::string(names[k]) + "' has shape " + m.shape_string() +
                            ", dims imply " + tensors[k]->shape_string(),
                        at);
    }
    *tensors[k] = std::move(m);
  }

  if (!r.done()) {
    const std::size_t step_at = r.pos();
    const Matrix step = r.tensor("adam.step");
    if (step.size() != 1 || step[0] < 0 || step[0] != std::floor(step[0])) {
      throw FormatError("invalid adam.step", step_at);
    }
    OptimizerState opt;
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      const std::size_t at = r.pos();
      AdamState s{r.tensor(moment_name(names[k], 'm')), r.tensor(moment_name(names[k], 'v')),
                  static_cast<std::uint64_t>(step[0])};
      if (!s.first_moment.same_shape(*tensors[k]) || !s.second_moment.same_shape(*tensors[k])) {
        throw FormatError("optimizer moments for '" + std::string(names[k]) +
                              "' do not match the tensor shape",
                          at);
      }
      opt.tensors.push_back(std::move(s));
    }
    checkpoint.optimizer = std::move(opt);
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace dualcap
