#include "rsnn/network.hpp"

#include <cmath>
#include <cstring>

#include "rsnn/errors.hpp"
#include "rsnn/rng.hpp"

namespace rsnn {

std::vector<double> NetworkParams::summed_visible_coupling() const {
  std::vector<double> out(n_visible * n_visible, 0.0);
  for (std::size_t j = 0; j < n_visible; ++j)
    for (std::size_t i = 0; i < n_visible; ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < history_depth; ++d) s += weight(j, i, d);
      out[j * n_visible + i] = s;
    }
  return out;
}

void NetworkParams::validate() const {
  if (n_total == 0) throw ValidationError("network has no neurons");
  if (n_visible > n_total)
    throw ValidationError("visible count " + std::to_string(n_visible) + " exceeds total " +
                          std::to_string(n_total));
  if (history_depth == 0) throw ValidationError("history depth must be at least 1");
  if (weights.size() != weight_count())
    throw ValidationError("weight tensor has " + std::to_string(weights.size()) +
                          " entries, expected " + std::to_string(weight_count()));
  if (bias.size() != n_total)
    throw ValidationError("bias vector has " + std::to_string(bias.size()) +
                          " entries, expected " + std::to_string(n_total));
  if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");
  if (!std::isfinite(threshold) || !std::isfinite(dampening))
    throw ValidationError("threshold and dampening must be finite");
  for (double w : weights)
    if (!std::isfinite(w)) throw ValidationError("non-finite weight");
  for (double b : bias)
    if (!std::isfinite(b)) throw ValidationError("non-finite bias");
}

NetworkParams init_params(std::size_t n_total, std::size_t n_visible, std::size_t history_depth,
                          std::uint64_t seed) {
  NetworkParams p;
  p.n_total = n_total;
  p.n_visible = n_visible;
  p.history_depth = history_depth;
  p.weights.resize(p.weight_count());
  p.bias.assign(n_total, 0.0);
  p.threshold = 0.4;
  p.dampening = 0.3;
  p.validate();

  Rng rng(seed);
  const double target_std =
      1.0 / std::sqrt(static_cast<double>(history_depth) * static_cast<double>(n_total));
  // Raw +-2 sigma truncation shrinks the std to kTruncNormal2Std of the
  // nominal value; divide it back out so the realized std is target_std.
  const double scale = target_std / kTruncNormal2Std;
  for (double& w : p.weights) w = scale * rng.truncated_normal_unit(2.0);
  return p;
}

NoiseTensor make_noise(std::size_t trials, std::size_t timesteps, std::size_t neurons,
                       std::uint64_t seed) {
  NoiseTensor noise(trials, timesteps, neurons);
  Rng rng(seed);
  for (double& x : noise.values()) x = rng.uniform_open01();
  return noise;
}

namespace {

void accumulate_potentials(const NetworkParams& params,
                           const std::vector<const std::uint8_t*>& history,
                           const double* drive_row, PotentialRow& row) {
  const std::size_t n = params.n_total;
  const std::size_t depth = params.history_depth;
  row.membrane.resize(n);
  row.normalized.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    const double* wj = params.weights.data() + j * n * depth;
    // Fixed accumulation order [pre then delay]: term (i, d) reads the spike
    // d+1 bins back, which is history[depth - 1 - d]. Silent bins contribute
    // exactly 0.0 so skipping them leaves the sum bit-identical.
    for (std::size_t i = 0; i < n; ++i) {
      const double* wji = wj + i * depth;
      for (std::size_t d = 0; d < depth; ++d) {
        const std::uint8_t* past = history[depth - 1 - d];
        if (past && past[i]) v += wji[d];
      }
    }
    v += params.bias[j];
    if (drive_row) v += drive_row[j];
    row.membrane[j] = v;
    row.normalized[j] = (v - params.threshold) / params.threshold;
  }
}

}  // namespace

PotentialRow membrane_potential(const NetworkParams& params,
                                const std::vector<const std::uint8_t*>& history,
                                const double* drive_row) {
  if (history.size() != params.history_depth)
    throw ValidationError("history must supply exactly history_depth rows");
  PotentialRow row;
  accumulate_potentials(params, history, drive_row, row);
  return row;
}

namespace {

// Whether bin (t, i) copies the reference instead of sampling.
inline bool bin_clamped(const ClampSpec& clamp, std::size_t t, std::size_t i,
                        std::size_t n_visible) {
  switch (clamp.mode) {
    case ClampMode::kFree: return false;
    case ClampMode::kFullClamp: return true;
    case ClampMode::kClampUntil: return t < clamp.clamp_until;
    case ClampMode::kVisibleClamp: return i < n_visible;
    case ClampMode::kVisibleUntil: return t < clamp.clamp_until && i < n_visible;
  }
  return false;
}

void check_clamp(const ClampSpec& clamp, std::size_t trials, std::size_t timesteps,
                 std::size_t n_total, std::size_t n_visible) {
  if (clamp.mode == ClampMode::kFree) return;
  if (!clamp.reference) throw ValidationError("clamped rollout needs a reference spike tensor");
  const SpikeTensor& ref = *clamp.reference;
  const bool visible_ref =
      clamp.mode == ClampMode::kVisibleClamp || clamp.mode == ClampMode::kVisibleUntil;
  const std::size_t want_n = visible_ref ? n_visible : n_total;
  if (ref.trials() != trials || ref.timesteps() != timesteps || ref.neurons() != want_n)
    throw ValidationError("clamp reference shape [" + std::to_string(ref.trials()) + "][" +
                          std::to_string(ref.timesteps()) + "][" + std::to_string(ref.neurons()) +
                          "] does not match rollout [" + std::to_string(trials) + "][" +
                          std::to_string(timesteps) + "][" + std::to_string(want_n) + "]");
}

}  // namespace

InputCurrentTensor widen_stimulus(const NetworkParams& params, const InputCurrentTensor& stim) {
  if (stim.neurons() == params.n_total) return stim;
  if (stim.neurons() == params.n_visible) return stim.widened(params.n_total);
  throw ValidationError("stimulus covers " + std::to_string(stim.neurons()) +
                        " neurons, expected the visible population (" +
                        std::to_string(params.n_visible) + ") or all " +
                        std::to_string(params.n_total));
}

RolloutRecord rollout(const NetworkParams& params, const InputCurrentTensor& stimulus,
                      std::size_t trials, const ClampSpec& clamp, const NoiseTensor& noise) {
  params.validate();
  const std::size_t n = params.n_total;
  const std::size_t timesteps = stimulus.timesteps();
  if (trials == 0) throw ValidationError("rollout needs at least one trial");
  if (stimulus.neurons() != n)
    throw ValidationError("stimulus covers " + std::to_string(stimulus.neurons()) +
                          " neurons, network has " + std::to_string(n));
  stimulus.check_finite();
  if (noise.trials() != trials || noise.timesteps() != timesteps || noise.neurons() != n)
    throw ValidationError("noise tensor shape does not match rollout");
  noise.check_open_interval();
  check_clamp(clamp, trials, timesteps, n, params.n_visible);

  RolloutRecord rec{SpikeTensor(trials, timesteps, n), ProbTensor(trials, timesteps, n),
                    PotentialTensor(trials, timesteps, n),
                    TrialGrid<std::uint8_t>(trials, timesteps, n)};

  const std::size_t depth = params.history_depth;
  std::vector<const std::uint8_t*> history(depth, nullptr);
  PotentialRow pot;
  for (std::size_t k = 0; k < trials; ++k) {
    for (std::size_t t = 0; t < timesteps; ++t) {
      for (std::size_t d = 0; d < depth; ++d) {
        // history[depth-1] is the row at t-1; rows before time zero stay null
        // and contribute nothing (silent pre-history).
        const std::size_t back = depth - d;
        history[d] = t >= back ? rec.spikes.row(k, t - back) : nullptr;
      }
      accumulate_potentials(params, history, stimulus.row(t), pot);
      double* v_out = rec.potentials.row(k, t);
      double* p_out = rec.probs.row(k, t);
      std::uint8_t* z_out = rec.spikes.row(k, t);
      std::uint8_t* s_out = rec.sampled.row(k, t);
      for (std::size_t i = 0; i < n; ++i) {
        v_out[i] = pot.normalized[i];
        const double p = logistic(pot.normalized[i]);
        p_out[i] = p;
        if (bin_clamped(clamp, t, i, params.n_visible)) {
          z_out[i] = (*clamp.reference)(k, t, i);
          s_out[i] = 0;
        } else {
          z_out[i] = noise(k, t, i) < p ? 1 : 0;
          s_out[i] = 1;
        }
      }
    }
  }
  return rec;
}

RolloutRecord rollout(const NetworkParams& params, const InputCurrentTensor& stimulus,
                      std::size_t trials, const ClampSpec& clamp, std::uint64_t noise_seed) {
  return rollout(params, stimulus, trials, clamp,
                 make_noise(trials, stimulus.timesteps(), params.n_total, noise_seed));
}

}  // namespace rsnn
