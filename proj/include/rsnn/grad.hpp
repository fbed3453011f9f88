#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

// Straight-through surrogate for d z / d u at a sampled spike.
inline double pseudo_derivative(double u, double gamma) {
  const double hat = 1.0 - std::abs(u);
  return hat > 0.0 ? gamma * hat : 0.0;
}

// d loss / d parameters. threshold and dampening are fixed constants.
struct Gradients {
  std::vector<double> weights;
  std::vector<double> bias;

  static Gradients zeros_like(const NetworkParams& p) {
    return {std::vector<double>(p.weight_count(), 0.0), std::vector<double>(p.n_total, 0.0)};
  }

  void add_scaled(const Gradients& g, double scale);
  double squared_norm() const;
  double max_abs() const;
  void scale(double s);
  void check_finite() const;  // NumericalError on NaN/inf
};

// Forward recording plus per-bin adjoint seeds. The rollout itself is the
// node list (one affine-accumulate + logistic + sample/copy per bin, in time
// order); loss reductions enter as analytic seeds on u and z rather than as
// elementwise nodes. backward() consumes the seeds in reverse time order.
class Tape {
 public:
  Tape(const NetworkParams& params, RolloutRecord record);

  const NetworkParams& params() const { return params_; }
  const RolloutRecord& record() const { return record_; }

  // Accumulate d loss / d u[k][t][i] (direct term).
  void add_potential_seed(std::size_t k, std::size_t t, std::size_t i, double g) {
    seed_du_(k, t, i) += g;
  }
  // Accumulate d loss / d z[k][t][i] (direct term; only sampled bins can
  // carry it backward, clamped spikes are data).
  void add_spike_seed(std::size_t k, std::size_t t, std::size_t i, double g) {
    seed_dz_(k, t, i) += g;
  }
  double* potential_seed_row(std::size_t k, std::size_t t) { return seed_du_.row(k, t); }

  const TrialGrid<double>& potential_seeds() const { return seed_du_; }
  const TrialGrid<double>& spike_seeds() const { return seed_dz_; }
  void reset_seeds();

 private:
  NetworkParams params_;
  RolloutRecord record_;
  TrialGrid<double> seed_du_;
  TrialGrid<double> seed_dz_;
};

// Reverse pass over the recorded rollout: full propagation through every
// time lag, pseudo-derivative at sampled bins, zero flow through clamped
// bins. Trials accumulate in index order, so results are deterministic.
Gradients backward(const Tape& tape);

// Order-independent digest of the spike tensor; used to detect sampled-spike
// flips between perturbed forward passes.
std::uint64_t spike_fingerprint(const SpikeTensor& spikes);

// One deterministic forward evaluation under perturbed parameters.
struct LossProbe {
  double value = 0.0;
  std::uint64_t fingerprint = 0;
};

struct FdEntry {
  bool is_weight = true;
  std::size_t index = 0;  // into weights or bias
  double analytic = 0.0;
  double central = 0.0;
  double rel_err = 0.0;
  bool crossed = false;  // spikes flipped between the +step and -step runs
};

struct FdReport {
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  std::size_t crossings = 0;
  std::size_t compared = 0;
  std::vector<FdEntry> entries;
};

// Central finite differences of `probe` against an analytic gradient over a
// parameter subset (indices < weight_count address weights, the rest biases;
// empty subset means every parameter). The probe must be deterministic given
// params (common random numbers). Entries whose spikes flipped between the
// two perturbed runs are flagged and left out of the aggregates: across a
// flip the loss is discontinuous and the comparison is meaningless. On free
// rollouts the straight-through gradient is biased by construction, so
// agreement is only expected for losses that are smooth in the parameters.
FdReport finite_difference_check(const std::function<LossProbe(const NetworkParams&)>& probe,
                                 const NetworkParams& base, const Gradients& analytic,
                                 double step, std::vector<std::size_t> subset = {});

}  // namespace rsnn
