#include "rsnn/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "rsnn/errors.hpp"

namespace rsnn {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 0; shift < 64; shift += 8)
    out.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xff));
}

class Cursor {
 public:
  Cursor(const std::uint8_t* data, std::size_t size, std::string path)
      : data_(data), size_(size), path_(std::move(path)) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  const std::uint8_t* bytes(std::size_t count, const char* what) {
    need(count, what);
    const std::uint8_t* p = data_ + pos_;
    pos_ += count;
    return p;
  }

  // Declared element counts are checked against what the file can still hold
  // before any allocation happens.
  void expect_remaining(std::size_t bytes_needed, const char* what) {
    if (size_ - pos_ < bytes_needed)
      throw TruncationError(path_ + ": header declares " + std::to_string(bytes_needed) +
                            " bytes of " + what + " but only " + std::to_string(size_ - pos_) +
                            " remain");
  }

  void expect_exhausted() {
    if (pos_ != size_)
      throw TruncationError(path_ + ": " + std::to_string(size_ - pos_) +
                            " trailing bytes after payload");
  }

 private:
  void need(std::size_t count, const char* what) {
    if (size_ - pos_ < count)
      throw TruncationError(path_ + ": file ends inside " + std::string(what));
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open for reading");
  in.seekg(0, std::ios::end);
  const std::streamoff len = in.tellg();
  if (len < 0) throw DataError(path + ": cannot determine size");
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(len));
  if (len > 0 && !in.read(reinterpret_cast<char*>(buf.data()), len))
    throw DataError(path + ": short read");
  return buf;
}

void spill(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(path + ": write failed");
}

void check_magic(Cursor& cur, const char expect[4], const std::string& path) {
  const std::uint8_t* m = cur.bytes(4, "magic");
  if (std::memcmp(m, expect, 4) != 0)
    throw FormatError(path + ": bad magic, expected " + std::string(expect, 4));
  const std::uint32_t version = cur.u32("version");
  if (version != kFormatVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError(std::string(what) + " too large for the file format");
  return static_cast<std::uint32_t>(v);
}

// Overflow-checked product of header dimensions. Any product that cannot fit
// in size_t certainly exceeds the file, so report it as truncation.
std::size_t checked_product(std::initializer_list<std::size_t> dims, const std::string& path) {
  std::size_t acc = 1;
  for (std::size_t d : dims) {
    if (d != 0 && acc > std::numeric_limits<std::size_t>::max() / d)
      throw TruncationError(path + ": declared dimensions overflow the payload size");
    acc *= d;
  }
  return acc;
}

}  // namespace

void write_spikes(const std::string& path, const SpikeTensor& spikes) {
  spikes.check_binary();
  std::vector<std::uint8_t> out;
  out.reserve(20 + spikes.size());
  out.insert(out.end(), {'R', 'S', 'N', 'Z'});
  put_u32(out, kFormatVersion);
  put_u32(out, checked_u32(spikes.trials(), "trial count"));
  put_u32(out, checked_u32(spikes.timesteps(), "timestep count"));
  put_u32(out, checked_u32(spikes.neurons(), "neuron count"));
  out.insert(out.end(), spikes.values().begin(), spikes.values().end());
  spill(path, out);
}

SpikeTensor read_spikes(const std::string& path) {
  const std::vector<std::uint8_t> buf = slurp(path);
  Cursor cur(buf.data(), buf.size(), path);
  check_magic(cur, "RSNZ", path);
  const std::uint32_t trials = cur.u32("trial count");
  const std::uint32_t timesteps = cur.u32("timestep count");
  const std::uint32_t neurons = cur.u32("neuron count");
  if (trials == 0 || timesteps == 0 || neurons == 0)
    throw ValidationError(path + ": zero-sized spike tensor");
  const std::size_t count = checked_product({trials, timesteps, neurons}, path);
  cur.expect_remaining(count, "spikes");
  const std::uint8_t* payload = cur.bytes(count, "spikes");
  cur.expect_exhausted();
  SpikeTensor spikes(trials, timesteps, neurons);
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (payload[idx] > 1)
      throw CorruptionError(path + ": spike byte at offset " + std::to_string(idx) +
                            " is " + std::to_string(payload[idx]) + ", expected 0 or 1");
    spikes.values()[idx] = payload[idx];
  }
  return spikes;
}

void write_params(const std::string& path, const NetworkParams& params) {
  params.validate();
  std::vector<std::uint8_t> out;
  out.reserve(20 + 8 * (params.weight_count() + params.n_total + 2));
  out.insert(out.end(), {'R', 'S', 'N', 'P'});
  put_u32(out, kFormatVersion);
  put_u32(out, checked_u32(params.n_total, "neuron count"));
  put_u32(out, checked_u32(params.n_visible, "visible count"));
  put_u32(out, checked_u32(params.history_depth, "history depth"));
  for (double w : params.weights) put_f64(out, w);
  for (double b : params.bias) put_f64(out, b);
  put_f64(out, params.threshold);
  put_f64(out, params.dampening);
  spill(path, out);
}

NetworkParams read_params(const std::string& path) {
  const std::vector<std::uint8_t> buf = slurp(path);
  Cursor cur(buf.data(), buf.size(), path);
  check_magic(cur, "RSNP", path);
  NetworkParams p;
  p.n_total = cur.u32("neuron count");
  p.n_visible = cur.u32("visible count");
  p.history_depth = cur.u32("history depth");
  if (p.n_total == 0) throw ValidationError(path + ": zero neurons");
  if (p.n_visible > p.n_total)
    throw ValidationError(path + ": visible count " + std::to_string(p.n_visible) +
                          " exceeds total " + std::to_string(p.n_total));
  if (p.history_depth == 0) throw ValidationError(path + ": zero history depth");
  const std::size_t n_weights =
      checked_product({p.n_total, p.n_total, p.history_depth}, path);
  cur.expect_remaining(checked_product({n_weights, 8}, path), "weights");
  cur.expect_remaining(checked_product({n_weights + p.n_total + 2, 8}, path), "parameters");
  p.weights.resize(n_weights);
  for (double& w : p.weights) w = cur.f64("weights");
  p.bias.resize(p.n_total);
  for (double& b : p.bias) b = cur.f64("biases");
  p.threshold = cur.f64("threshold");
  p.dampening = cur.f64("dampening");
  cur.expect_exhausted();
  if (!(p.threshold > 0.0))
    throw ValidationError(path + ": threshold must be positive (normalization divides by it)");
  p.validate();
  return p;
}

void write_input(const std::string& path, const InputCurrentTensor& drive) {
  drive.check_finite();
  std::vector<std::uint8_t> out;
  out.reserve(16 + 8 * drive.values().size());
  out.insert(out.end(), {'R', 'S', 'N', 'I'});
  put_u32(out, kFormatVersion);
  put_u32(out, checked_u32(drive.timesteps(), "timestep count"));
  put_u32(out, checked_u32(drive.neurons(), "neuron count"));
  for (double v : drive.values()) put_f64(out, v);
  spill(path, out);
}

InputCurrentTensor read_input(const std::string& path) {
  const std::vector<std::uint8_t> buf = slurp(path);
  Cursor cur(buf.data(), buf.size(), path);
  check_magic(cur, "RSNI", path);
  const std::uint32_t timesteps = cur.u32("timestep count");
  const std::uint32_t neurons = cur.u32("neuron count");
  if (timesteps == 0 || neurons == 0) throw ValidationError(path + ": zero-sized input tensor");
  const std::size_t count = checked_product({timesteps, neurons}, path);
  cur.expect_remaining(checked_product({count, 8}, path), "input currents");
  InputCurrentTensor drive(timesteps, neurons);
  for (double& v : drive.values()) v = cur.f64("input currents");
  cur.expect_exhausted();
  for (double v : drive.values())
    if (!std::isfinite(v)) throw CorruptionError(path + ": non-finite input current");
  return drive;
}

}  // namespace rsnn
