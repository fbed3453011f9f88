#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsnn/grad.hpp"
#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

inline constexpr double kLogClampEps = 1e-12;

// Binary cross entropy with log arguments floored at kLogClampEps.
inline double cross_entropy(double target, double estimate) {
  const double lq = std::log(std::max(estimate, kLogClampEps));
  const double lq1 = std::log(std::max(1.0 - estimate, kLogClampEps));
  return -(target * lq + (1.0 - target) * lq1);
}
// d cross_entropy / d estimate away from the clamp region.
inline double cross_entropy_dq(double target, double estimate) {
  return (estimate - target) / (estimate * (1.0 - estimate));
}

// Trial-population statistics of a spike tensor, computed once per dataset
// and shared across epochs. All matrices are [n][n] row-major.
struct DataStatistics {
  std::size_t trials = 0;
  std::size_t timesteps = 0;
  std::size_t neurons = 0;
  std::vector<double> psth;          // [t][i] trial-mean spikes
  std::vector<double> rate;          // [i] grand mean
  std::vector<double> centered_cov;  // (1/(KT)) sum (z - psth_i)(z - psth_j)
  std::vector<double> coincidence;   // (1/(KT)) sum z_i z_j

  static DataStatistics compute(const SpikeTensor& data);
};

// Likelihood losses. Each returns the scalar loss; when `tape` is non-null
// the analytic adjoint seeds (scaled by `scale`) are accumulated onto it.
// The record's first data-columns are the visible population throughout.

// Mean CE between reference spikes and the model's clamped one-step probs.
// The record must come from a FullClamp rollout on `data`.
double loss_mle(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape = nullptr,
                double scale = 1.0);

// Same CE restricted to the visible bins of a VisibleClamp rollout; the
// sampled hidden spikes shape the visible potentials, giving one Monte-Carlo
// sample of the likelihood bound per trial.
double loss_elbo(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape = nullptr,
                 double scale = 1.0);

// CE between data and visible probs over the unclamped window t >= t_clamp
// of a ClampUntil rollout.
double loss_single_trial(const RolloutRecord& rec, const SpikeTensor& data,
                         std::size_t t_clamp, Tape* tape = nullptr, double scale = 1.0);

// Sample-and-measure losses on a free rollout. Data enters through its
// precomputed statistics; visible population = first stats.neurons columns.
double loss_psth(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape = nullptr,
                 double scale = 1.0);
double loss_nc_mse(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape = nullptr,
                   double scale = 1.0);
double loss_nc_ce(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape = nullptr,
                  double scale = 1.0);

// Rate regularizer for hidden units: each hidden unit h is paired with a
// visible neuron pairing[h]; CE between that neuron's data rate and the
// hidden unit's mean firing probability. Zero when there are no hidden units.
double loss_smh(const RolloutRecord& rec, const DataStatistics& stats,
                const std::vector<std::size_t>& pairing, Tape* tape = nullptr,
                double scale = 1.0);

// Convenience overloads computing the statistics on the fly.
double loss_psth(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape = nullptr,
                 double scale = 1.0);
double loss_nc_mse(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape = nullptr,
                   double scale = 1.0);
double loss_nc_ce(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape = nullptr,
                  double scale = 1.0);

enum class LossKind { kMle, kPsth, kNcMse, kNcCe, kElbo, kSingleTrial, kSmh };

const char* loss_kind_name(LossKind kind);

struct LossTerm {
  LossKind kind;
  double weight = 0.0;
};

// Weighted objective. Terms group by the rollout they consume:
//   clamped record: MLE or ELBO; free record: PSTH, NC_MSE, NC_CE, SMh;
//   prefix-clamped record: SingleTrial (t_clamp bins copied).
struct LossSpec {
  std::vector<LossTerm> terms;
  std::size_t t_clamp = 0;

  void validate(std::size_t n_hidden) const;
  bool has(LossKind kind) const;
  double weight_of(LossKind kind) const;
  bool needs_clamped() const;
  bool needs_free() const;
  bool needs_prefix() const;
};

struct TermRecords {
  const RolloutRecord* clamped = nullptr;
  Tape* clamped_tape = nullptr;
  const RolloutRecord* free_run = nullptr;
  Tape* free_tape = nullptr;
  const RolloutRecord* prefix = nullptr;
  Tape* prefix_tape = nullptr;
};

struct LossBreakdown {
  double total = 0.0;
  std::vector<std::pair<LossKind, double>> parts;  // unweighted term values
};

// Comma list of name:weight entries, e.g. "mle:0.2,psth:0.1,nc_mse:0.7".
// A bare name means weight 1. Unknown names raise a ConfigError listing the
// valid kinds. t_clamp is carried through unparsed.
LossSpec parse_loss_spec(const std::string& text, std::size_t t_clamp = 0);
// Inverse of the above (round-trips through parse_loss_spec).
std::string loss_spec_string(const LossSpec& spec);

// Sum of weight * term over the spec. Seeds land on each record's tape when
// present. `data` backs the likelihood terms; `stats` the statistic terms.
LossBreakdown loss_combined(const LossSpec& spec, const TermRecords& recs,
                            const SpikeTensor& data, const DataStatistics& stats,
                            const std::vector<std::size_t>& smh_pairing);

}  // namespace rsnn
