#include "rsnn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "rsnn/errors.hpp"

namespace rsnn {

DataStatistics DataStatistics::compute(const SpikeTensor& data) {
  data.check_binary();
  DataStatistics s;
  s.trials = data.trials();
  s.timesteps = data.timesteps();
  s.neurons = data.neurons();
  const std::size_t K = s.trials, T = s.timesteps, n = s.neurons;
  const double inv_k = 1.0 / static_cast<double>(K);
  const double inv_kt = 1.0 / static_cast<double>(K * T);

  s.psth.assign(T * n, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* row = data.row(k, t);
      for (std::size_t i = 0; i < n; ++i) s.psth[t * n + i] += row[i];
    }
  for (double& v : s.psth) v *= inv_k;

  s.rate.assign(n, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) s.rate[i] += s.psth[t * n + i];
  for (double& v : s.rate) v /= static_cast<double>(T);

  s.centered_cov.assign(n * n, 0.0);
  s.coincidence.assign(n * n, 0.0);
  std::vector<double> c(n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* row = data.row(k, t);
      const double* m = s.psth.data() + t * n;
      for (std::size_t i = 0; i < n; ++i) c[i] = row[i] - m[i];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) s.centered_cov[i * n + j] += c[i] * c[j];
        if (row[i])
          for (std::size_t j = 0; j < n; ++j) s.coincidence[i * n + j] += row[j];
      }
    }
  for (double& v : s.centered_cov) v *= inv_kt;
  for (double& v : s.coincidence) v *= inv_kt;
  return s;
}

namespace {

void check_likelihood_inputs(const RolloutRecord& rec, const SpikeTensor& data,
                             const char* what) {
  if (data.trials() != rec.trials() || data.timesteps() != rec.timesteps())
    throw ValidationError(std::string(what) + ": data and rollout disagree on trials or time");
  if (data.neurons() > rec.neurons())
    throw ValidationError(std::string(what) + ": data has more neurons than the rollout");
  data.check_binary();
}

void check_statistic_inputs(const RolloutRecord& rec, const DataStatistics& stats,
                            const char* what) {
  if (stats.timesteps != rec.timesteps())
    throw ValidationError(std::string(what) + ": data statistics cover a different horizon");
  if (stats.neurons > rec.neurons())
    throw ValidationError(std::string(what) + ": statistics have more neurons than the rollout");
  if (stats.trials == 0) throw ValidationError(std::string(what) + ": empty data statistics");
}

}  // namespace

double loss_mle(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape, double scale) {
  check_likelihood_inputs(rec, data, "loss_mle");
  if (data.neurons() != rec.neurons())
    throw ValidationError("loss_mle: record must be fully clamped on the data");
  if (data.values() != rec.spikes.values())
    throw ValidationError("loss_mle: record spikes differ from the data (not a clamped rollout)");

  const std::size_t K = rec.trials(), T = rec.timesteps(), n = rec.neurons();
  const double inv_count = 1.0 / static_cast<double>(K * T * n);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* z = data.row(k, t);
      const double* p = rec.probs.row(k, t);
      double* seed = tape ? tape->potential_seed_row(k, t) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        total += cross_entropy(z[i], p[i]);
        // d CE(z, sigma(u)) / d u = sigma(u) - z
        if (seed) seed[i] += scale * inv_count * (p[i] - z[i]);
      }
    }
  return total * inv_count;
}

double loss_elbo(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape, double scale) {
  check_likelihood_inputs(rec, data, "loss_elbo");
  const std::size_t K = rec.trials(), T = rec.timesteps(), n_vis = data.neurons();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* z = data.row(k, t);
      const std::uint8_t* zr = rec.spikes.row(k, t);
      for (std::size_t i = 0; i < n_vis; ++i)
        if (z[i] != zr[i])
          throw ValidationError("loss_elbo: visible spikes of the rollout differ from the data");
    }

  const double inv_count = 1.0 / static_cast<double>(K * T * n_vis);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* z = data.row(k, t);
      const double* p = rec.probs.row(k, t);
      double* seed = tape ? tape->potential_seed_row(k, t) : nullptr;
      for (std::size_t i = 0; i < n_vis; ++i) {
        total += cross_entropy(z[i], p[i]);
        if (seed) seed[i] += scale * inv_count * (p[i] - z[i]);
      }
    }
  return total * inv_count;
}

double loss_single_trial(const RolloutRecord& rec, const SpikeTensor& data,
                         std::size_t t_clamp, Tape* tape, double scale) {
  check_likelihood_inputs(rec, data, "loss_single_trial");
  const std::size_t K = rec.trials(), T = rec.timesteps(), n_vis = data.neurons();
  if (t_clamp >= T) throw ValidationError("loss_single_trial: clamp time beyond the horizon");
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < t_clamp; ++t)
      for (std::size_t i = 0; i < n_vis; ++i)
        if (data(k, t, i) != rec.spikes(k, t, i))
          throw ValidationError("loss_single_trial: clamped prefix differs from the data");

  const double inv_count = 1.0 / static_cast<double>(K * (T - t_clamp) * n_vis);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = t_clamp; t < T; ++t) {
      const std::uint8_t* z = data.row(k, t);
      const double* p = rec.probs.row(k, t);
      double* seed = tape ? tape->potential_seed_row(k, t) : nullptr;
      for (std::size_t i = 0; i < n_vis; ++i) {
        total += cross_entropy(z[i], p[i]);
        if (seed) seed[i] += scale * inv_count * (p[i] - z[i]);
      }
    }
  return total * inv_count;
}

double loss_psth(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape,
                 double scale) {
  check_statistic_inputs(rec, stats, "loss_psth");
  const std::size_t K = rec.trials(), T = rec.timesteps(), n = stats.neurons;
  const double inv_k = 1.0 / static_cast<double>(K);
  const double inv_count = 1.0 / static_cast<double>(T * n);

  std::vector<double> sigma_bar(T * n, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const double* p = rec.probs.row(k, t);
      for (std::size_t i = 0; i < n; ++i) sigma_bar[t * n + i] += p[i];
    }
  for (double& v : sigma_bar) v *= inv_k;

  double total = 0.0;
  std::vector<double> dq(T * n, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      const double target = stats.psth[t * n + i];
      const double est = sigma_bar[t * n + i];
      total += cross_entropy(target, est);
      if (tape) dq[t * n + i] = cross_entropy_dq(target, est);
    }
  if (tape) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t t = 0; t < T; ++t) {
        const double* p = rec.probs.row(k, t);
        double* seed = tape->potential_seed_row(k, t);
        for (std::size_t i = 0; i < n; ++i)
          seed[i] += scale * inv_count * dq[t * n + i] * inv_k * p[i] * (1.0 - p[i]);
      }
  }
  return total * inv_count;
}

namespace {

// Shared core of the two coincidence-flavored losses: builds the model-side
// [n][n] statistic from per-bin vectors v (centered probs for the MSE loss,
// raw probs for the CE loss), then seeds (2/(KT)) G v back per bin.
template <typename RowFn>
std::vector<double> pairwise_statistic(const RolloutRecord& rec, std::size_t n, RowFn row_v) {
  const std::size_t K = rec.trials(), T = rec.timesteps();
  std::vector<double> acc(n * n, 0.0);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      row_v(k, t, v.data());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) acc[i * n + j] += v[i] * v[j];
    }
  const double inv_kt = 1.0 / static_cast<double>(K * T);
  for (double& x : acc) x *= inv_kt;
  return acc;
}

template <typename RowFn>
void seed_pairwise(const RolloutRecord& rec, std::size_t n, const std::vector<double>& gmat,
                   RowFn row_v, Tape* tape, double scale) {
  const std::size_t K = rec.trials(), T = rec.timesteps();
  const double factor = 2.0 * scale / static_cast<double>(K * T);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      row_v(k, t, v.data());
      const double* p = rec.probs.row(k, t);
      double* seed = tape->potential_seed_row(k, t);
      for (std::size_t l = 0; l < n; ++l) {
        double s = 0.0;
        const double* grow = gmat.data() + l * n;
        for (std::size_t j = 0; j < n; ++j) s += grow[j] * v[j];
        seed[l] += factor * s * p[l] * (1.0 - p[l]);
      }
    }
}

}  // namespace

double loss_nc_mse(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape,
                   double scale) {
  check_statistic_inputs(rec, stats, "loss_nc_mse");
  const std::size_t K = rec.trials(), T = rec.timesteps(), n = stats.neurons;
  if (n < 2) throw ValidationError("loss_nc_mse needs at least two visible neurons");
  const double inv_k = 1.0 / static_cast<double>(K);

  std::vector<double> sigma_bar(T * n, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const double* p = rec.probs.row(k, t);
      for (std::size_t i = 0; i < n; ++i) sigma_bar[t * n + i] += p[i];
    }
  for (double& v : sigma_bar) v *= inv_k;

  auto centered_row = [&](std::size_t k, std::size_t t, double* out) {
    const double* p = rec.probs.row(k, t);
    const double* m = sigma_bar.data() + t * n;
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i] - m[i];
  };
  std::vector<double> model = pairwise_statistic(rec, n, centered_row);

  const std::size_t pairs = n * (n - 1);
  const double inv_pairs = 1.0 / static_cast<double>(pairs);
  double total = 0.0;
  std::vector<double> gmat(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double diff = model[i * n + j] - stats.centered_cov[i * n + j];
      total += diff * diff;
      // Centering makes the batch-mean term of d model / d p vanish, so the
      // seed is the plain (2/(KT)) G c contraction.
      gmat[i * n + j] = 2.0 * inv_pairs * diff;
    }
  if (tape) seed_pairwise(rec, n, gmat, centered_row, tape, scale);
  return total * inv_pairs;
}

double loss_nc_ce(const RolloutRecord& rec, const DataStatistics& stats, Tape* tape,
                  double scale) {
  check_statistic_inputs(rec, stats, "loss_nc_ce");
  const std::size_t n = stats.neurons;
  if (n < 2) throw ValidationError("loss_nc_ce needs at least two visible neurons");

  auto prob_row = [&](std::size_t k, std::size_t t, double* out) {
    const double* p = rec.probs.row(k, t);
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i];
  };
  std::vector<double> model = pairwise_statistic(rec, n, prob_row);

  const std::size_t pairs = n * (n - 1);
  const double inv_pairs = 1.0 / static_cast<double>(pairs);
  double total = 0.0;
  std::vector<double> gmat(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double target = stats.coincidence[i * n + j];
      const double est = model[i * n + j];
      total += cross_entropy(target, est);
      gmat[i * n + j] = inv_pairs * cross_entropy_dq(target, est);
    }
  if (tape) seed_pairwise(rec, n, gmat, prob_row, tape, scale);
  return total * inv_pairs;
}

double loss_smh(const RolloutRecord& rec, const DataStatistics& stats,
                const std::vector<std::size_t>& pairing, Tape* tape, double scale) {
  check_statistic_inputs(rec, stats, "loss_smh");
  const std::size_t n_vis = stats.neurons;
  const std::size_t n_hidden = rec.neurons() - n_vis;
  if (pairing.size() != n_hidden)
    throw ValidationError("loss_smh: pairing must map every hidden unit");
  if (n_hidden == 0) return 0.0;
  for (std::size_t v : pairing)
    if (v >= n_vis) throw ValidationError("loss_smh: pairing index outside the visible range");

  const std::size_t K = rec.trials(), T = rec.timesteps();
  const double inv_kt = 1.0 / static_cast<double>(K * T);
  const double inv_h = 1.0 / static_cast<double>(n_hidden);

  std::vector<double> estimate(n_hidden, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const double* p = rec.probs.row(k, t);
      for (std::size_t h = 0; h < n_hidden; ++h) estimate[h] += p[n_vis + h];
    }
  for (double& v : estimate) v *= inv_kt;

  double total = 0.0;
  std::vector<double> dq(n_hidden, 0.0);
  for (std::size_t h = 0; h < n_hidden; ++h) {
    const double target = stats.rate[pairing[h]];
    total += cross_entropy(target, estimate[h]);
    dq[h] = cross_entropy_dq(target, estimate[h]);
  }
  if (tape) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t t = 0; t < T; ++t) {
        const double* p = rec.probs.row(k, t);
        double* seed = tape->potential_seed_row(k, t);
        for (std::size_t h = 0; h < n_hidden; ++h) {
          const double ph = p[n_vis + h];
          seed[n_vis + h] += scale * inv_h * dq[h] * inv_kt * ph * (1.0 - ph);
        }
      }
  }
  return total * inv_h;
}

double loss_psth(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape, double scale) {
  return loss_psth(rec, DataStatistics::compute(data), tape, scale);
}
double loss_nc_mse(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape,
                   double scale) {
  return loss_nc_mse(rec, DataStatistics::compute(data), tape, scale);
}
double loss_nc_ce(const RolloutRecord& rec, const SpikeTensor& data, Tape* tape, double scale) {
  return loss_nc_ce(rec, DataStatistics::compute(data), tape, scale);
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kMle: return "mle";
    case LossKind::kPsth: return "psth";
    case LossKind::kNcMse: return "nc_mse";
    case LossKind::kNcCe: return "nc_ce";
    case LossKind::kElbo: return "elbo";
    case LossKind::kSingleTrial: return "single_trial";
    case LossKind::kSmh: return "smh";
  }
  return "unknown";
}

namespace {

constexpr LossKind kAllKinds[] = {LossKind::kMle,  LossKind::kPsth, LossKind::kNcMse,
                                  LossKind::kNcCe, LossKind::kElbo, LossKind::kSingleTrial,
                                  LossKind::kSmh};

std::string valid_kind_list() {
  std::string out;
  for (LossKind k : kAllKinds) {
    if (!out.empty()) out += ", ";
    out += loss_kind_name(k);
  }
  return out;
}

}  // namespace

LossSpec parse_loss_spec(const std::string& text, std::size_t t_clamp) {
  if (text.empty()) throw ConfigError("loss spec is empty");
  LossSpec spec;
  spec.t_clamp = t_clamp;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string entry = text.substr(pos, end - pos);
    const std::size_t colon = entry.find(':');
    const std::string name = entry.substr(0, colon);
    double weight = 1.0;
    if (colon != std::string::npos) {
      const std::string wtext = entry.substr(colon + 1);
      char* tail = nullptr;
      weight = std::strtod(wtext.c_str(), &tail);
      if (wtext.empty() || tail != wtext.c_str() + wtext.size() || !std::isfinite(weight)) {
        throw ConfigError("bad loss weight '" + wtext + "' in '" + entry + "'");
      }
    }
    bool known = false;
    for (LossKind k : kAllKinds) {
      if (name == loss_kind_name(k)) {
        spec.terms.push_back({k, weight});
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown loss '" + name + "'; valid kinds: " + valid_kind_list());
    }
    pos = end + 1;
  }
  return spec;
}

std::string loss_spec_string(const LossSpec& spec) {
  std::string out;
  char buf[40];
  for (const LossTerm& term : spec.terms) {
    if (!out.empty()) out += ',';
    std::snprintf(buf, sizeof(buf), "%s:%g", loss_kind_name(term.kind), term.weight);
    out += buf;
  }
  return out;
}

void LossSpec::validate(std::size_t n_hidden) const {
  if (terms.empty()) throw ConfigError("loss spec has no terms");
  bool any_positive = false;
  bool seen[8] = {};
  for (const LossTerm& term : terms) {
    if (term.weight < 0.0) throw ConfigError("loss weights must be non-negative");
    if (term.weight > 0.0) any_positive = true;
    const std::size_t slot = static_cast<std::size_t>(term.kind);
    if (seen[slot])
      throw ConfigError(std::string("duplicate loss term ") + loss_kind_name(term.kind));
    seen[slot] = true;
  }
  if (!any_positive) throw ConfigError("loss spec needs at least one positive weight");
  if (has(LossKind::kMle) && has(LossKind::kElbo))
    throw ConfigError("mle and elbo are mutually exclusive; elbo replaces mle with hidden units");
  if (has(LossKind::kMle) && n_hidden > 0)
    throw ConfigError("mle requires a fully visible network; use elbo with hidden units");
  if (has(LossKind::kSmh) && n_hidden == 0)
    throw ConfigError("smh regularizes hidden units, none are present");
}

bool LossSpec::has(LossKind kind) const {
  for (const LossTerm& t : terms)
    if (t.kind == kind) return true;
  return false;
}

double LossSpec::weight_of(LossKind kind) const {
  for (const LossTerm& t : terms)
    if (t.kind == kind) return t.weight;
  return 0.0;
}

bool LossSpec::needs_clamped() const { return has(LossKind::kMle) || has(LossKind::kElbo); }
bool LossSpec::needs_free() const {
  return has(LossKind::kPsth) || has(LossKind::kNcMse) || has(LossKind::kNcCe) ||
         has(LossKind::kSmh);
}
bool LossSpec::needs_prefix() const { return has(LossKind::kSingleTrial); }

LossBreakdown loss_combined(const LossSpec& spec, const TermRecords& recs,
                            const SpikeTensor& data, const DataStatistics& stats,
                            const std::vector<std::size_t>& smh_pairing) {
  if (spec.terms.empty()) throw ConfigError("loss spec has no terms");
  LossBreakdown out;
  for (const LossTerm& term : spec.terms) {
    double value = 0.0;
    switch (term.kind) {
      case LossKind::kMle:
        if (!recs.clamped) throw ValidationError("mle term needs a clamped rollout");
        value = loss_mle(*recs.clamped, data, recs.clamped_tape, term.weight);
        break;
      case LossKind::kElbo:
        if (!recs.clamped) throw ValidationError("elbo term needs a visible-clamped rollout");
        value = loss_elbo(*recs.clamped, data, recs.clamped_tape, term.weight);
        break;
      case LossKind::kSingleTrial:
        if (!recs.prefix) throw ValidationError("single_trial term needs a prefix rollout");
        value =
            loss_single_trial(*recs.prefix, data, spec.t_clamp, recs.prefix_tape, term.weight);
        break;
      case LossKind::kPsth:
        if (!recs.free_run) throw ValidationError("psth term needs a free rollout");
        value = loss_psth(*recs.free_run, stats, recs.free_tape, term.weight);
        break;
      case LossKind::kNcMse:
        if (!recs.free_run) throw ValidationError("nc_mse term needs a free rollout");
        value = loss_nc_mse(*recs.free_run, stats, recs.free_tape, term.weight);
        break;
      case LossKind::kNcCe:
        if (!recs.free_run) throw ValidationError("nc_ce term needs a free rollout");
        value = loss_nc_ce(*recs.free_run, stats, recs.free_tape, term.weight);
        break;
      case LossKind::kSmh:
        if (!recs.free_run) throw ValidationError("smh term needs a free rollout");
        value = loss_smh(*recs.free_run, stats, smh_pairing, recs.free_tape, term.weight);
        break;
    }
    out.total += term.weight * value;
    out.parts.emplace_back(term.kind, value);
  }
  return out;
}

}  // namespace rsnn
