#include "rsnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <utility>

#include "rsnn/errors.hpp"
#include "rsnn/metrics.hpp"
#include "rsnn/rng.hpp"

namespace rsnn {

void TrainConfig::validate(std::size_t train_trials, std::size_t timesteps,
                           std::size_t n_hidden) const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0,1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (max_epochs == 0) throw ConfigError("max epochs must be at least 1");
  if (eval_cadence == 0) throw ConfigError("eval cadence must be at least 1");
  if (loss.terms.empty()) throw ConfigError("loss spec has no terms");
  loss.validate(n_hidden);
  if (clip_length == 0) {
    if (batch_size > train_trials) {
      throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds the " +
                        std::to_string(train_trials) + " training trials");
    }
    if (loss.needs_prefix() && loss.t_clamp >= timesteps) {
      throw ConfigError("prefix cut must fall inside the trial");
    }
  } else {
    if (clip_length > timesteps) throw ConfigError("window length exceeds the trial length");
    if (loss.needs_prefix()) {
      if (clip_prefix != loss.t_clamp) {
        throw ConfigError("window prefix must equal the loss t_clamp");
      }
      if (clip_prefix >= clip_length) {
        throw ConfigError("prefix cut must leave free bins in the window");
      }
    } else if (clip_prefix > clip_length) {
      throw ConfigError("window prefix exceeds the window length");
    }
  }
}

AdamState make_adam_state(const NetworkParams& params) {
  AdamState s;
  s.m_weights.assign(params.weight_count(), 0.0);
  s.v_weights.assign(params.weight_count(), 0.0);
  s.m_bias.assign(params.n_total, 0.0);
  s.v_bias.assign(params.n_total, 0.0);
  return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, double corr1, double corr2, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    p[i] -= cfg.learning_rate * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + cfg.epsilon);
  }
}

}  // namespace

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (grads.weights.size() != params.weights.size() || grads.bias.size() != params.bias.size() ||
      state.m_weights.size() != params.weights.size()) {
    throw ValidationError("gradient or moment shape does not match the parameters");
  }
  ++state.step;
  const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  adam_update(params.weights, grads.weights, state.m_weights, state.v_weights, corr1, corr2, cfg);
  adam_update(params.bias, grads.bias, state.m_bias, state.v_bias, corr1, corr2, cfg);
}

namespace {

// Owns the per-step rollouts; tapes only where a gradient is wanted.
struct RecordSet {
  std::optional<Tape> clamped_tape, free_tape, prefix_tape;
  std::optional<RolloutRecord> clamped_rec, free_rec, prefix_rec;

  TermRecords view() {
    TermRecords tr;
    if (clamped_tape) {
      tr.clamped = &clamped_tape->record();
      tr.clamped_tape = &*clamped_tape;
    } else if (clamped_rec) {
      tr.clamped = &*clamped_rec;
    }
    if (free_tape) {
      tr.free_run = &free_tape->record();
      tr.free_tape = &*free_tape;
    } else if (free_rec) {
      tr.free_run = &*free_rec;
    }
    if (prefix_tape) {
      tr.prefix = &prefix_tape->record();
      tr.prefix_tape = &*prefix_tape;
    } else if (prefix_rec) {
      tr.prefix = &*prefix_rec;
    }
    return tr;
  }
};

RolloutRecord stitch_trials(std::vector<RolloutRecord>& parts) {
  const std::size_t b_count = parts.size();
  const std::size_t t_len = parts.front().timesteps();
  const std::size_t n = parts.front().neurons();
  RolloutRecord out{SpikeTensor(b_count, t_len, n), ProbTensor(b_count, t_len, n),
                    PotentialTensor(b_count, t_len, n), TrialGrid<std::uint8_t>(b_count, t_len, n)};
  const std::size_t stride = t_len * n;
  for (std::size_t b = 0; b < b_count; ++b) {
    std::copy(parts[b].spikes.values().begin(), parts[b].spikes.values().end(),
              out.spikes.values().begin() + b * stride);
    std::copy(parts[b].probs.values().begin(), parts[b].probs.values().end(),
              out.probs.values().begin() + b * stride);
    std::copy(parts[b].potentials.values().begin(), parts[b].potentials.values().end(),
              out.potentials.values().begin() + b * stride);
    std::copy(parts[b].sampled.values().begin(), parts[b].sampled.values().end(),
              out.sampled.values().begin() + b * stride);
  }
  return out;
}

enum class StepClamp { kLikelihood, kPrefix, kFree };

// One batch element per window; each element rolls on its own stimulus slice
// so the stitched record behaves like an ordinary multi-trial rollout.
RolloutRecord windowed_rollout(const NetworkParams& params, const InputCurrentTensor& stim,
                               const SpikeTensor& batch_data,
                               const std::vector<std::pair<std::size_t, std::size_t>>& windows,
                               StepClamp kind, std::size_t prefix_cut, std::uint64_t seed) {
  std::vector<RolloutRecord> parts;
  parts.reserve(windows.size());
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const InputCurrentTensor slice = stim.time_window(windows[b].second, batch_data.timesteps());
    const SpikeTensor ref = batch_data.trial_range(b, 1);
    ClampSpec clamp = ClampSpec::free_run();
    switch (kind) {
      case StepClamp::kLikelihood:
        clamp = params.n_hidden() == 0 ? ClampSpec::full(ref) : ClampSpec::visible(ref);
        break;
      case StepClamp::kPrefix:
        clamp = ClampSpec::visible_until(ref, prefix_cut);
        break;
      case StepClamp::kFree:
        break;
    }
    parts.push_back(rollout(params, slice, 1, clamp, derive_seed(seed, b)));
  }
  return stitch_trials(parts);
}

struct StepSeeds {
  std::uint64_t likelihood = 0, free = 0, prefix = 0;
};

// Builds whichever rollouts the loss spec needs. windows == nullptr means the
// batch rows are whole trials aligned with the full stimulus.
RecordSet build_records(const NetworkParams& params, const InputCurrentTensor& stim,
                        const SpikeTensor& batch_data,
                        const std::vector<std::pair<std::size_t, std::size_t>>* windows,
                        const LossSpec& spec, std::size_t free_trials, const StepSeeds& seeds,
                        bool with_tapes) {
  RecordSet out;
  auto place = [&](std::optional<Tape>& tape_slot, std::optional<RolloutRecord>& rec_slot,
                   RolloutRecord&& rec) {
    if (with_tapes) {
      tape_slot.emplace(params, std::move(rec));
    } else {
      rec_slot = std::move(rec);
    }
  };
  if (spec.needs_clamped()) {
    RolloutRecord rec =
        windows ? windowed_rollout(params, stim, batch_data, *windows, StepClamp::kLikelihood, 0,
                                   seeds.likelihood)
                : rollout(params, stim, batch_data.trials(),
                          params.n_hidden() == 0 ? ClampSpec::full(batch_data)
                                                 : ClampSpec::visible(batch_data),
                          seeds.likelihood);
    place(out.clamped_tape, out.clamped_rec, std::move(rec));
  }
  if (spec.needs_free()) {
    RolloutRecord rec =
        windows ? windowed_rollout(params, stim, batch_data, *windows, StepClamp::kFree, 0,
                                   seeds.free)
                : rollout(params, stim, free_trials, ClampSpec::free_run(), seeds.free);
    place(out.free_tape, out.free_rec, std::move(rec));
  }
  if (spec.needs_prefix()) {
    RolloutRecord rec =
        windows ? windowed_rollout(params, stim, batch_data, *windows, StepClamp::kPrefix,
                                   spec.t_clamp, seeds.prefix)
                : rollout(params, stim, batch_data.trials(),
                          ClampSpec::visible_until(batch_data, spec.t_clamp), seeds.prefix);
    place(out.prefix_tape, out.prefix_rec, std::move(rec));
  }
  return out;
}

double validation_loss(const NetworkParams& params, const DatasetSplit& data,
                       const InputCurrentTensor& stim, const LossSpec& spec,
                       const DataStatistics& val_stats, const std::vector<std::size_t>& pairing,
                       std::size_t free_trials, std::uint64_t seed) {
  const StepSeeds seeds{derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2)};
  RecordSet recs =
      build_records(params, stim, data.validation, nullptr, spec, free_trials, seeds, false);
  TermRecords tr = recs.view();
  return loss_combined(spec, tr, data.validation, val_stats, pairing).total;
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

void check_params_finite(const NetworkParams& params) {
  for (double w : params.weights) {
    if (!std::isfinite(w)) throw NumericalError("non-finite weight after the update");
  }
  for (double b : params.bias) {
    if (!std::isfinite(b)) throw NumericalError("non-finite bias after the update");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainResult train(const NetworkParams& init, const DatasetSplit& data, const TrainConfig& cfg) {
  init.validate();
  data.validate();
  if (data.train.neurons() != init.n_visible) {
    throw ValidationError("dataset covers " + std::to_string(data.train.neurons()) +
                          " neurons, the model has " + std::to_string(init.n_visible) +
                          " visible");
  }
  cfg.validate(data.train.trials(), data.train.timesteps(), init.n_hidden());
  const InputCurrentTensor stim = widen_stimulus(init, data.stimulus);

  const bool windowed = cfg.clip_length > 0;
  const DataStatistics train_stats = DataStatistics::compute(data.train);
  const DataStatistics val_stats = DataStatistics::compute(data.validation);
  const std::size_t k_train = data.train.trials();
  const std::size_t t_len = data.train.timesteps();
  const std::size_t n_vis = init.n_visible;
  const std::size_t free_trials = cfg.free_rollout_trials ? cfg.free_rollout_trials
                                                          : cfg.batch_size;
  const std::size_t steps_per_epoch =
      windowed ? std::max<std::size_t>(1, (k_train * t_len) / (cfg.batch_size * cfg.clip_length))
               : (k_train + cfg.batch_size - 1) / cfg.batch_size;

  // Disjoint seed streams: per-step rollouts, validation rollouts, the PSTH
  // diagnostic rollout, the epoch shuffle, hidden-unit pairing, window draws.
  const std::uint64_t rollout_master = derive_seed(cfg.seed, 1);
  const std::uint64_t val_master = derive_seed(cfg.seed, 2);
  const std::uint64_t eval_master = derive_seed(cfg.seed, 3);
  Rng shuffle_rng(derive_seed(cfg.seed, 4));
  Rng pairing_rng(derive_seed(cfg.seed, 5));
  Rng window_rng(derive_seed(cfg.seed, 6));

  NetworkParams params = init;
  AdamState adam = make_adam_state(params);
  TrainResult result;
  result.best = init;

  std::vector<std::size_t> order(k_train);
  for (std::size_t i = 0; i < k_train; ++i) order[i] = i;
  std::vector<std::size_t> pairing(init.n_hidden(), 0);

  double best_train = std::numeric_limits<double>::infinity();
  double best_val = std::numeric_limits<double>::infinity();
  bool have_val = false;
  std::size_t stale = 0;
  std::uint64_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();
    TrainLogEntry entry;
    entry.epoch = epoch;
    for (std::size_t h = 0; h < pairing.size(); ++h) pairing[h] = pairing_rng.below(n_vis);
    if (!windowed) fisher_yates(order, shuffle_rng);

    std::vector<double> term_sums(cfg.loss.terms.size(), 0.0);
    double total_sum = 0.0;
    std::size_t steps_done = 0;

    for (std::size_t step = 0; step < steps_per_epoch && !result.aborted; ++step) {
      ++global_step;
      try {
        SpikeTensor batch_data;
        std::vector<std::pair<std::size_t, std::size_t>> windows;
        if (windowed) {
          windows.resize(cfg.batch_size);
          batch_data = SpikeTensor(cfg.batch_size, cfg.clip_length, n_vis);
          for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const std::size_t k = window_rng.below(k_train);
            const std::size_t s0 = window_rng.below(t_len - cfg.clip_length + 1);
            windows[b] = {k, s0};
            for (std::size_t t = 0; t < cfg.clip_length; ++t) {
              for (std::size_t i = 0; i < n_vis; ++i) {
                batch_data(b, t, i) = data.train(k, s0 + t, i);
              }
            }
          }
        } else {
          const std::size_t lo = step * cfg.batch_size;
          const std::size_t hi = std::min(k_train, lo + cfg.batch_size);
          batch_data = data.train.gather_trials(
              std::vector<std::size_t>(order.begin() + lo, order.begin() + hi));
        }
        // Window batching measures statistics on the window batch itself so
        // the model and data sides cover the same bins.
        const DataStatistics batch_stats =
            windowed ? DataStatistics::compute(batch_data) : DataStatistics{};
        const DataStatistics& stats = windowed ? batch_stats : train_stats;

        const StepSeeds seeds{derive_seed(rollout_master, 3 * global_step),
                              derive_seed(rollout_master, 3 * global_step + 1),
                              derive_seed(rollout_master, 3 * global_step + 2)};
        RecordSet recs = build_records(params, stim, batch_data, windowed ? &windows : nullptr,
                                       cfg.loss, free_trials, seeds, true);
        TermRecords tr = recs.view();
        const LossBreakdown bd = loss_combined(cfg.loss, tr, batch_data, stats, pairing);
        if (!std::isfinite(bd.total)) throw NumericalError("non-finite training loss");

        Gradients grads = Gradients::zeros_like(params);
        if (recs.clamped_tape) grads.add_scaled(backward(*recs.clamped_tape), 1.0);
        if (recs.free_tape) grads.add_scaled(backward(*recs.free_tape), 1.0);
        if (recs.prefix_tape) grads.add_scaled(backward(*recs.prefix_tape), 1.0);
        if (cfg.grad_clip_norm > 0.0) {
          const double norm = std::sqrt(grads.squared_norm());
          if (norm > cfg.grad_clip_norm) {
            grads.scale(cfg.grad_clip_norm / norm);
            ++entry.clip_events;
          }
        }
        adam_step(params, grads, adam, cfg);
        check_params_finite(params);

        for (std::size_t i = 0; i < bd.parts.size(); ++i) term_sums[i] += bd.parts[i].second;
        total_sum += bd.total;
        ++steps_done;
      } catch (const NumericalError& err) {
        result.aborted = true;
        result.abort_reason = "epoch " + std::to_string(epoch) + " step " +
                              std::to_string(step + 1) + ": " + err.what();
      }
    }
    if (steps_done == 0) break;

    entry.train_total = total_sum / static_cast<double>(steps_done);
    entry.terms.reserve(cfg.loss.terms.size());
    for (std::size_t i = 0; i < cfg.loss.terms.size(); ++i) {
      entry.terms.emplace_back(cfg.loss.terms[i].kind,
                               term_sums[i] / static_cast<double>(steps_done));
    }

    if (!result.aborted && entry.train_total < best_train) {
      best_train = entry.train_total;
      const RolloutRecord rec = rollout(params, stim, free_trials, ClampSpec::free_run(),
                                        derive_seed(eval_master, epoch));
      entry.psth_corr = psth_correlation(rec.probs, data.train).mean();
      entry.has_psth = true;
    }

    const bool due = epoch % cfg.eval_cadence == 0 || epoch == cfg.max_epochs;
    if (!result.aborted && due) {
      try {
        const double v = validation_loss(params, data, stim, cfg.loss, val_stats, pairing,
                                         free_trials, derive_seed(val_master, epoch));
        if (!std::isfinite(v)) throw NumericalError("non-finite validation loss");
        entry.has_validation = true;
        entry.validation = v;
        if (v < best_val) {
          best_val = v;
          result.best = params;
          result.best_epoch = epoch;
          have_val = true;
          stale = 0;
        } else {
          ++stale;
        }
      } catch (const NumericalError& err) {
        result.aborted = true;
        result.abort_reason = "epoch " + std::to_string(epoch) + " validation: " + err.what();
      }
    }

    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick)
                             .count();
    result.log.push_back(entry);
    if (result.aborted) break;
    if (cfg.early_stop_patience > 0 && stale >= cfg.early_stop_patience) break;
  }

  result.last = params;
  if (!have_val) {
    // Aborted before any validation completed; surface the last state.
    result.best = params;
    result.best_validation = std::numeric_limits<double>::quiet_NaN();
    result.best_epoch = 0;
  } else {
    result.best_validation = best_val;
  }
  return result;
}

std::string curves_csv(const std::vector<TrainLogEntry>& log) {
  std::string out = "epoch";
  if (!log.empty()) {
    for (const auto& [kind, value] : log.front().terms) {
      out += ',';
      out += loss_kind_name(kind);
    }
  }
  out += ",train_total,validation,psth_corr,clip_events\n";
  for (const TrainLogEntry& e : log) {
    out += std::to_string(e.epoch);
    for (const auto& [kind, value] : e.terms) {
      out += ',';
      out += format_double(value);
    }
    out += ',';
    out += format_double(e.train_total);
    out += ',';
    if (e.has_validation) out += format_double(e.validation);
    out += ',';
    if (e.has_psth && std::isfinite(e.psth_corr)) out += format_double(e.psth_corr);
    out += ',';
    out += std::to_string(e.clip_events);
    out += '\n';
  }
  return out;
}

}  // namespace rsnn
