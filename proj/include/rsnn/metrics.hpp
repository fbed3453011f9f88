#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

// Per-neuron Pearson correlation across time between the model PSTH and the
// data PSTH. Neurons where either series has zero variance carry no value;
// they are flagged undefined and excluded from the mean.
struct PsthCorrelation {
  std::vector<double> rho;
  std::vector<std::uint8_t> defined;

  std::size_t defined_count() const;
  std::size_t excluded_count() const { return rho.size() - defined_count(); }
  // Mean over defined entries; NaN when every entry is undefined.
  double mean() const;
};

// Model PSTH from firing probabilities (the low-variance estimator) or from
// sampled spikes (same estimator as the data side). Only the first
// data.neurons() model columns enter; trial counts may differ.
PsthCorrelation psth_correlation(const ProbTensor& model, const SpikeTensor& data);
PsthCorrelation psth_correlation(const SpikeTensor& model, const SpikeTensor& data);

// Normalized noise-correlation matrix. Covariances are accumulated per bin:
// the total one centers by each neuron's grand mean, the noise one by the
// per-bin trial mean, both divided by T*K; entry (i,j) is the noise covariance
// over the geometric mean of the two total variances. Entries touching a zero
// total variance are flagged undefined.
struct NoiseCorrelation {
  std::size_t neurons = 0;
  std::vector<double> matrix;          // [n][n], symmetric
  std::vector<std::uint8_t> defined;   // [n][n]

  double at(std::size_t i, std::size_t j) const { return matrix[i * neurons + j]; }
  bool is_defined(std::size_t i, std::size_t j) const { return defined[i * neurons + j] != 0; }
};

// Requires at least two trials; the per-bin trial mean is degenerate otherwise.
NoiseCorrelation noise_correlation(const SpikeTensor& trials);

// Coefficient of determination between two noise-correlation matrices over
// off-diagonal entries. Pairs flagged undefined on either side are excluded
// from both sums; a zero-dispersion reference leaves the result undefined.
struct R2Result {
  double value = 0.0;
  bool defined = false;
  std::size_t pairs = 0;     // off-diagonal pairs that entered the sums
  std::size_t excluded = 0;  // off-diagonal pairs skipped as undefined
};

R2Result nc_r2(const NoiseCorrelation& model, const NoiseCorrelation& data);

// Mean negative log-likelihood of `data` under the model with teacher forcing.
// Without hidden units this is exact (the rollout is deterministic and the
// seed is unused); with hidden units it is a single-sample bound estimate with
// hidden activity sampled from the seed. Stimulus may cover the visible
// population only; hidden columns get zero drive.
double test_nll(const NetworkParams& params, const InputCurrentTensor& stimulus,
                const SpikeTensor& data, std::uint64_t seed = 0);

// Monte-Carlo estimate of the model's log-probability of the data row at time
// t + lag given the data up to and including time t, averaged over data
// trials: per trial, `rollouts` trajectories are clamped to the data through
// time t (visible columns; hidden units always sample) and run free up to
// t + lag, and the probability of the observed row is averaged over them
// before the log. The probability estimate is unbiased; its log is biased
// downward. When lag <= 1 and there are no hidden units the target probability
// does not depend on the sampled trajectory, so one rollout serves for any
// requested count.
double multistep_loglik(const NetworkParams& params, const InputCurrentTensor& stimulus,
                        const SpikeTensor& data, std::size_t t, std::size_t lag,
                        std::size_t rollouts, std::uint64_t seed);

struct MultistepPoint {
  std::size_t lag = 0;
  double loglik = 0.0;
};

// Everything the evaluation command reports for one model against one dataset.
// nc_model/nc_data stay empty (neurons == 0) when the data has fewer than two
// trials; r2.defined is false in that case.
struct StatReport {
  PsthCorrelation psth;
  NoiseCorrelation nc_model;
  NoiseCorrelation nc_data;
  R2Result r2;
  double test_nll = 0.0;
  std::vector<MultistepPoint> multistep;
};

struct EvalConfig {
  std::size_t model_trials = 0;  // 0: match the data trial count
  std::uint64_t seed = 1;
  // Multistep curve settings; an empty lag list skips the curve.
  std::vector<std::size_t> multistep_lags;
  std::size_t multistep_t = 0;
  std::size_t multistep_rollouts = 100;
};

// Free-runs the model on the stimulus and assembles the report. The PSTH
// correlation uses firing probabilities; the model noise-correlation matrix
// uses the sampled spikes, treating the simulation like a recording.
StatReport evaluate_model(const NetworkParams& params, const InputCurrentTensor& stimulus,
                          const SpikeTensor& data, const EvalConfig& cfg);

// Deterministic serializations; undefined entries become nulls in JSON and
// defined=0 rows in CSV.
std::string report_json(const StatReport& report);
std::string report_csv(const StatReport& report);

}  // namespace rsnn
