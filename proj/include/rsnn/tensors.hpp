#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rsnn/errors.hpp"

namespace rsnn {

// Flat [trial][time][neuron] grid, row-major. All tensor types below share
// this layout so rollouts, losses and I/O index identically.
template <typename T>
class TrialGrid {
 public:
  TrialGrid() = default;
  TrialGrid(std::size_t trials, std::size_t timesteps, std::size_t neurons, T fill = T{})
      : trials_(trials), timesteps_(timesteps), neurons_(neurons),
        data_(trials * timesteps * neurons, fill) {
    if (trials == 0 || timesteps == 0 || neurons == 0) {
      throw ValidationError("tensor dimensions must all be >= 1");
    }
  }

  std::size_t trials() const { return trials_; }
  std::size_t timesteps() const { return timesteps_; }
  std::size_t neurons() const { return neurons_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t k, std::size_t t, std::size_t i) {
    return data_[(k * timesteps_ + t) * neurons_ + i];
  }
  const T& operator()(std::size_t k, std::size_t t, std::size_t i) const {
    return data_[(k * timesteps_ + t) * neurons_ + i];
  }

  // Pointer to the neuron row at (trial, time).
  T* row(std::size_t k, std::size_t t) { return data_.data() + (k * timesteps_ + t) * neurons_; }
  const T* row(std::size_t k, std::size_t t) const {
    return data_.data() + (k * timesteps_ + t) * neurons_;
  }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool same_shape(const TrialGrid& o) const {
    return trials_ == o.trials_ && timesteps_ == o.timesteps_ && neurons_ == o.neurons_;
  }

 private:
  std::size_t trials_ = 0, timesteps_ = 0, neurons_ = 0;
  std::vector<T> data_;
};

// Binary spikes, one byte per bin. Values outside {0,1} are rejected, not clipped.
class SpikeTensor : public TrialGrid<std::uint8_t> {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t trials, std::size_t timesteps, std::size_t neurons)
      : TrialGrid(trials, timesteps, neurons, 0) {}

  void check_binary() const {
    for (std::uint8_t v : values()) {
      if (v > 1) throw ValidationError("spike tensor element outside {0,1}");
    }
  }

  // Copy of the first `count` neuron columns (the visible population).
  SpikeTensor visible_columns(std::size_t count) const;
  // Copy of the trials [first, first+count).
  SpikeTensor trial_range(std::size_t first, std::size_t count) const;
  // Copy of the given trials, in the given order.
  SpikeTensor gather_trials(const std::vector<std::size_t>& indices) const;
  // Copy of the time window [t0, t0+len) across all trials.
  SpikeTensor time_window(std::size_t t0, std::size_t len) const;
};

// Firing probabilities sigma(u), same shape as the spikes they generated.
class ProbTensor : public TrialGrid<double> {
 public:
  ProbTensor() = default;
  ProbTensor(std::size_t trials, std::size_t timesteps, std::size_t neurons)
      : TrialGrid(trials, timesteps, neurons, 0.0) {}
};

// Normalized membrane potentials u = (v - v_thr)/v_thr.
using PotentialTensor = TrialGrid<double>;

// Per-bin uniform noise on the open interval (0,1); drives the reparametrized
// sampler z = 1 iff xi < sigma(u). Kept open so the logistic inverse is finite.
class NoiseTensor : public TrialGrid<double> {
 public:
  NoiseTensor() = default;
  NoiseTensor(std::size_t trials, std::size_t timesteps, std::size_t neurons)
      : TrialGrid(trials, timesteps, neurons, 0.5) {}

  void check_open_interval() const {
    for (double v : values()) {
      if (!(v > 0.0 && v < 1.0)) {
        throw ValidationError("noise value outside the open interval (0,1)");
      }
    }
  }
};

// External drive, [time][neuron], shared by every trial of a dataset.
class InputCurrentTensor {
 public:
  InputCurrentTensor() = default;
  InputCurrentTensor(std::size_t timesteps, std::size_t neurons, double fill = 0.0)
      : timesteps_(timesteps), neurons_(neurons), data_(timesteps * neurons, fill) {
    if (timesteps == 0 || neurons == 0) {
      throw ValidationError("input current dimensions must be >= 1");
    }
  }

  std::size_t timesteps() const { return timesteps_; }
  std::size_t neurons() const { return neurons_; }

  double& operator()(std::size_t t, std::size_t i) { return data_[t * neurons_ + i]; }
  const double& operator()(std::size_t t, std::size_t i) const { return data_[t * neurons_ + i]; }
  const double* row(std::size_t t) const { return data_.data() + t * neurons_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void check_finite() const;

  // Widen to `n_total` columns; the added (hidden) columns are zero drive.
  InputCurrentTensor widened(std::size_t n_total) const;
  InputCurrentTensor time_window(std::size_t t0, std::size_t len) const;

 private:
  std::size_t timesteps_ = 0, neurons_ = 0;
  std::vector<double> data_;
};

// One experiment's worth of recordings plus the stimulus that drove them.
// The three splits share timesteps and neuron count; trial counts differ.
struct DatasetSplit {
  SpikeTensor train;
  SpikeTensor validation;
  SpikeTensor test;
  InputCurrentTensor stimulus;

  void validate() const;
};

}  // namespace rsnn
