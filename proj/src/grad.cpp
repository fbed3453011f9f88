#include "rsnn/grad.hpp"

#include <algorithm>
#include <cmath>

#include "rsnn/errors.hpp"

namespace rsnn {

void Gradients::add_scaled(const Gradients& g, double scale) {
  if (g.weights.size() != weights.size() || g.bias.size() != bias.size())
    throw ValidationError("gradient shapes do not match");
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += scale * g.weights[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += scale * g.bias[i];
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (double v : weights) s += v * v;
  for (double v : bias) s += v * v;
  return s;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (double v : weights) m = std::max(m, std::abs(v));
  for (double v : bias) m = std::max(m, std::abs(v));
  return m;
}

void Gradients::scale(double s) {
  for (double& v : weights) v *= s;
  for (double& v : bias) v *= s;
}

void Gradients::check_finite() const {
  for (double v : weights)
    if (!std::isfinite(v)) throw NumericalError("non-finite weight gradient");
  for (double v : bias)
    if (!std::isfinite(v)) throw NumericalError("non-finite bias gradient");
}

Tape::Tape(const NetworkParams& params, RolloutRecord record)
    : params_(params), record_(std::move(record)),
      seed_du_(record_.trials(), record_.timesteps(), record_.neurons(), 0.0),
      seed_dz_(record_.trials(), record_.timesteps(), record_.neurons(), 0.0) {
  params_.validate();
  if (record_.neurons() != params_.n_total)
    throw ValidationError("rollout record does not match the network");
}

void Tape::reset_seeds() {
  std::fill(seed_du_.values().begin(), seed_du_.values().end(), 0.0);
  std::fill(seed_dz_.values().begin(), seed_dz_.values().end(), 0.0);
}

Gradients backward(const Tape& tape) {
  const NetworkParams& p = tape.params();
  const RolloutRecord& rec = tape.record();
  const std::size_t n = p.n_total;
  const std::size_t depth = p.history_depth;
  const std::size_t trials = rec.trials();
  const std::size_t timesteps = rec.timesteps();
  const double inv_thr = 1.0 / p.threshold;

  Gradients grads = Gradients::zeros_like(p);
  std::vector<double> zadj(timesteps * n);

  for (std::size_t k = 0; k < trials; ++k) {
    // d loss / d z for this trial; future-time contributions land here as the
    // reverse sweep walks down.
    const double* dz_seed = tape.spike_seeds().row(k, 0);
    std::copy(dz_seed, dz_seed + timesteps * n, zadj.begin());

    for (std::size_t t = timesteps; t-- > 0;) {
      const double* du_seed = tape.potential_seeds().row(k, t);
      const double* u_row = rec.potentials.row(k, t);
      const std::uint8_t* sampled_row = rec.sampled.row(k, t);
      for (std::size_t j = 0; j < n; ++j) {
        double gu = du_seed[j];
        if (sampled_row[j])
          gu += zadj[t * n + j] * pseudo_derivative(u_row[j], p.dampening);
        if (gu == 0.0) continue;
        const double gv = gu * inv_thr;
        grads.bias[j] += gv;
        double* dwj = grads.weights.data() + j * n * depth;
        const double* wj = p.weights.data() + j * n * depth;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t d = 0; d < depth; ++d) {
            if (t < d + 1) break;
            const std::size_t past = t - d - 1;
            if (rec.spikes(k, past, i)) dwj[i * depth + d] += gv;
            zadj[past * n + i] += wj[i * depth + d] * gv;
          }
        }
      }
    }
  }
  grads.check_finite();
  return grads;
}

std::uint64_t spike_fingerprint(const SpikeTensor& spikes) {
  // FNV-1a over the raw bytes plus the shape.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(spikes.trials());
  mix(spikes.timesteps());
  mix(spikes.neurons());
  for (std::uint8_t b : spikes.values()) mix(b);
  return h;
}

FdReport finite_difference_check(const std::function<LossProbe(const NetworkParams&)>& probe,
                                 const NetworkParams& base, const Gradients& analytic,
                                 double step, std::vector<std::size_t> subset) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  if (analytic.weights.size() != base.weight_count() || analytic.bias.size() != base.n_total)
    throw ValidationError("analytic gradient does not match the network");

  const std::size_t n_weights = base.weight_count();
  if (subset.empty()) {
    subset.resize(n_weights + base.n_total);
    for (std::size_t i = 0; i < subset.size(); ++i) subset[i] = i;
  }

  FdReport report;
  report.entries.reserve(subset.size());
  double err_sum = 0.0;
  for (std::size_t idx : subset) {
    if (idx >= n_weights + base.n_total)
      throw ValidationError("finite-difference parameter index out of range");
    FdEntry entry;
    entry.is_weight = idx < n_weights;
    entry.index = entry.is_weight ? idx : idx - n_weights;
    entry.analytic =
        entry.is_weight ? analytic.weights[entry.index] : analytic.bias[entry.index];

    NetworkParams perturbed = base;
    double& slot =
        entry.is_weight ? perturbed.weights[entry.index] : perturbed.bias[entry.index];
    const double original = slot;
    slot = original + step;
    const LossProbe plus = probe(perturbed);
    slot = original - step;
    const LossProbe minus = probe(perturbed);

    entry.central = (plus.value - minus.value) / (2.0 * step);
    entry.crossed = plus.fingerprint != minus.fingerprint;
    const double mag = std::max(std::abs(entry.analytic), std::abs(entry.central));
    entry.rel_err = mag < 1e-10 ? 0.0 : std::abs(entry.analytic - entry.central) / mag;
    if (!entry.crossed) {
      report.max_rel_err = std::max(report.max_rel_err, entry.rel_err);
      err_sum += entry.rel_err;
      ++report.compared;
    } else {
      ++report.crossings;
    }
    report.entries.push_back(entry);
  }
  report.mean_rel_err = report.compared ? err_sum / static_cast<double>(report.compared) : 0.0;
  return report;
}

}  // namespace rsnn
