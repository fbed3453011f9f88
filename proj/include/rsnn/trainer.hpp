#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rsnn/grad.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

// Optimization settings. Two batching schemes: the default draws trial
// subsets at full length; setting clip_length > 0 switches to window batching,
// where each step draws batch_size (trial, start) windows of clip_length bins
// and the likelihood terms see those windows as the data. With window batching
// the statistic losses compare against the statistics of the current window
// batch instead of the precomputed whole-split statistics, batch_size may
// exceed the trial count, and clip_prefix must equal the loss t_clamp when a
// prefix term is present.
struct TrainConfig {
  double learning_rate = 1.5e-3;
  std::size_t batch_size = 20;
  std::size_t max_epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t early_stop_patience = 10;  // consecutive stale validations; 0 disables
  std::size_t eval_cadence = 1;          // validate every this many epochs
  std::size_t free_rollout_trials = 0;   // trials per free rollout; 0: batch_size
  double grad_clip_norm = 10.0;          // global-norm ceiling; <= 0 disables
  std::size_t clip_length = 0;           // > 0 selects window batching
  std::size_t clip_prefix = 0;           // clamped bins at each window start
  std::uint64_t seed = 1;
  LossSpec loss;

  void validate(std::size_t train_trials, std::size_t timesteps, std::size_t n_hidden) const;
};

struct AdamState {
  std::vector<double> m_weights, v_weights;
  std::vector<double> m_bias, v_bias;
  std::size_t step = 0;
};

AdamState make_adam_state(const NetworkParams& params);

// First/second-moment update with bias correction on weights and biases only.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainLogEntry {
  std::size_t epoch = 0;
  // Unweighted per-term epoch means, in the order the loss spec lists them.
  std::vector<std::pair<LossKind, double>> terms;
  double train_total = 0.0;  // weighted objective, epoch mean
  bool has_validation = false;
  double validation = 0.0;
  bool has_psth = false;  // set when the training loss reached a new minimum
  double psth_corr = 0.0;
  std::size_t clip_events = 0;  // steps whose gradient hit the norm ceiling
  double wall_seconds = 0.0;    // in-memory diagnostics; never serialized
};

struct TrainResult {
  NetworkParams best;  // parameters at the lowest logged validation loss
  double best_validation = 0.0;
  std::size_t best_epoch = 0;
  std::vector<TrainLogEntry> log;
  NetworkParams last;  // parameters when training stopped; the diagnostic
                       // state when aborted
  bool aborted = false;
  std::string abort_reason;
};

// Minibatch Adam over the train split with per-epoch validation on the
// combined objective, early stopping, and best-checkpoint tracking. The
// validation loss is also computed on the final epoch regardless of cadence
// so the returned best is always defined. A non-finite loss or gradient
// aborts the run and reports the offending state instead of throwing.
TrainResult train(const NetworkParams& init, const DatasetSplit& data, const TrainConfig& cfg);

// Training curves, one row per epoch. Wall time is deliberately left out so
// reruns are byte-identical.
std::string curves_csv(const std::vector<TrainLogEntry>& log);

}  // namespace rsnn
