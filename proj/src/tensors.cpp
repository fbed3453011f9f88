#include "rsnn/tensors.hpp"

#include <cmath>
#include <cstring>

namespace rsnn {

SpikeTensor SpikeTensor::visible_columns(std::size_t count) const {
  if (count == 0 || count > neurons()) {
    throw ValidationError("visible column count out of range");
  }
  SpikeTensor out(trials(), timesteps(), count);
  for (std::size_t k = 0; k < trials(); ++k) {
    for (std::size_t t = 0; t < timesteps(); ++t) {
      std::memcpy(out.row(k, t), row(k, t), count);
    }
  }
  return out;
}

SpikeTensor SpikeTensor::trial_range(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > trials()) {
    throw ValidationError("trial range out of bounds");
  }
  SpikeTensor out(count, timesteps(), neurons());
  std::memcpy(out.values().data(), values().data() + first * timesteps() * neurons(),
              count * timesteps() * neurons());
  return out;
}

SpikeTensor SpikeTensor::gather_trials(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw ValidationError("empty trial selection");
  SpikeTensor out(indices.size(), timesteps(), neurons());
  const std::size_t stride = timesteps() * neurons();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= trials()) throw ValidationError("trial index out of bounds");
    std::memcpy(out.values().data() + k * stride, values().data() + indices[k] * stride, stride);
  }
  return out;
}

SpikeTensor SpikeTensor::time_window(std::size_t t0, std::size_t len) const {
  if (len == 0 || t0 + len > timesteps()) throw ValidationError("time window out of bounds");
  SpikeTensor out(trials(), len, neurons());
  for (std::size_t k = 0; k < trials(); ++k) {
    std::memcpy(out.row(k, 0), row(k, t0), len * neurons());
  }
  return out;
}

void InputCurrentTensor::check_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw ValidationError("input current contains a non-finite value");
  }
}

InputCurrentTensor InputCurrentTensor::widened(std::size_t n_total) const {
  if (n_total < neurons_) throw ValidationError("cannot widen stimulus to fewer neurons");
  if (n_total == neurons_) return *this;
  InputCurrentTensor out(timesteps_, n_total, 0.0);
  for (std::size_t t = 0; t < timesteps_; ++t) {
    std::memcpy(&out(t, 0), row(t), neurons_ * sizeof(double));
  }
  return out;
}

InputCurrentTensor InputCurrentTensor::time_window(std::size_t t0, std::size_t len) const {
  if (len == 0 || t0 + len > timesteps_) throw ValidationError("time window out of bounds");
  InputCurrentTensor out(len, neurons_);
  std::memcpy(out.values().data(), data_.data() + t0 * neurons_, len * neurons_ * sizeof(double));
  return out;
}

void DatasetSplit::validate() const {
  const std::size_t t = train.timesteps();
  const std::size_t n = train.neurons();
  if (validation.timesteps() != t || test.timesteps() != t) {
    throw ValidationError("dataset splits disagree on timesteps");
  }
  if (validation.neurons() != n || test.neurons() != n) {
    throw ValidationError("dataset splits disagree on neuron count");
  }
  if (stimulus.timesteps() != t) throw ValidationError("stimulus timesteps do not match spikes");
  if (stimulus.neurons() < n) throw ValidationError("stimulus has fewer neurons than spikes");
  train.check_binary();
  validation.check_binary();
  test.check_binary();
  stimulus.check_finite();
}

}  // namespace rsnn
