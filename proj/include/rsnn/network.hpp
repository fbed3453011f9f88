#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rsnn/tensors.hpp"

namespace rsnn {

// Numerically stable logistic function.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Coupling tensor, biases and the two fixed constants of the neuron model.
// weights is [post][pre][delay] row-major; delay slot d (0-based) acts on
// spikes d+1 bins in the past. threshold enters as u = (v - threshold)/threshold,
// dampening scales the pseudo-derivative on the backward pass.
struct NetworkParams {
  std::size_t n_total = 0;
  std::size_t n_visible = 0;
  std::size_t history_depth = 0;  // number of delay slots
  std::vector<double> weights;    // n_total * n_total * history_depth
  std::vector<double> bias;       // n_total
  double threshold = 0.4;
  double dampening = 0.3;

  double& weight(std::size_t post, std::size_t pre, std::size_t delay) {
    return weights[(post * n_total + pre) * history_depth + delay];
  }
  double weight(std::size_t post, std::size_t pre, std::size_t delay) const {
    return weights[(post * n_total + pre) * history_depth + delay];
  }

  std::size_t n_hidden() const { return n_total - n_visible; }
  std::size_t weight_count() const { return n_total * n_total * history_depth; }

  // Sum over delays of weight(post, pre, .), restricted to the visible block.
  std::vector<double> summed_visible_coupling() const;

  void validate() const;
};

// Initialization scheme: coupling from a +-2 sigma truncated normal with
// std 1/sqrt(history_depth * n_total) (renormalized so the realized std matches),
// zero biases, threshold 0.4, dampening 0.3.
NetworkParams init_params(std::size_t n_total, std::size_t n_visible, std::size_t history_depth,
                          std::uint64_t seed);

// Deterministic noise tensor from a seed, filled in [trial][time][neuron] order.
NoiseTensor make_noise(std::size_t trials, std::size_t timesteps, std::size_t neurons,
                       std::uint64_t seed);

enum class ClampMode { kFree, kFullClamp, kClampUntil, kVisibleClamp, kVisibleUntil };

// Which bins copy reference spikes instead of sampling. FullClamp and
// ClampUntil need a reference of the full [K][T][n_total] shape; VisibleClamp
// and VisibleUntil a [K][T][n_visible] one. ClampUntil clamps every bin with
// t < clamp_until; VisibleUntil additionally restricts that to visible columns,
// so hidden units sample throughout.
struct ClampSpec {
  ClampMode mode = ClampMode::kFree;
  std::size_t clamp_until = 0;
  const SpikeTensor* reference = nullptr;

  static ClampSpec free_run() { return {}; }
  static ClampSpec full(const SpikeTensor& ref) {
    return {ClampMode::kFullClamp, 0, &ref};
  }
  static ClampSpec until(const SpikeTensor& ref, std::size_t t_clamp) {
    return {ClampMode::kClampUntil, t_clamp, &ref};
  }
  static ClampSpec visible(const SpikeTensor& ref) {
    return {ClampMode::kVisibleClamp, 0, &ref};
  }
  static ClampSpec visible_until(const SpikeTensor& ref, std::size_t t_clamp) {
    return {ClampMode::kVisibleUntil, t_clamp, &ref};
  }
};

// Everything one rollout produced. probs and potentials cover every bin, also
// the clamped ones (the likelihood losses need them). sampled marks bins whose
// spike came from the sampler; only those get a pseudo-derivative on backward.
struct RolloutRecord {
  SpikeTensor spikes;
  ProbTensor probs;
  PotentialTensor potentials;
  TrialGrid<std::uint8_t> sampled;

  std::size_t trials() const { return spikes.trials(); }
  std::size_t timesteps() const { return spikes.timesteps(); }
  std::size_t neurons() const { return spikes.neurons(); }
};

// One membrane update: v[j] = sum_i sum_d W[j][i][d] z[t-d][i] + b[j] + C[t][j]
// accumulated in [i then d] order, plus the normalized potential u.
// history holds the last `history_depth` spike rows in chronological order
// (history[history_depth-1] is t-1); rows before time zero are all-zero.
struct PotentialRow {
  std::vector<double> membrane;    // v
  std::vector<double> normalized;  // u = (v - threshold)/threshold
};
PotentialRow membrane_potential(const NetworkParams& params,
                                const std::vector<const std::uint8_t*>& history,
                                const double* drive_row);

// Accept a drive covering either the visible population (hidden columns get
// zero drive) or the full network; anything else is rejected.
InputCurrentTensor widen_stimulus(const NetworkParams& params, const InputCurrentTensor& stim);

// Sequential simulation of the network over stimulus.timesteps() bins.
// Bins governed by the clamp copy reference spikes; all other bins sample
// z = 1 iff noise < sigma(u). Trials evolve independently.
RolloutRecord rollout(const NetworkParams& params, const InputCurrentTensor& stimulus,
                      std::size_t trials, const ClampSpec& clamp, const NoiseTensor& noise);
RolloutRecord rollout(const NetworkParams& params, const InputCurrentTensor& stimulus,
                      std::size_t trials, const ClampSpec& clamp, std::uint64_t noise_seed);

}  // namespace rsnn
