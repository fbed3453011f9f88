#include "rsnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <json.hpp>

#include "rsnn/errors.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/rng.hpp"

namespace rsnn {

namespace {

// Trial-mean series over the first n_keep columns, [time][neuron] flat.
template <typename Grid>
std::vector<double> trial_mean_series(const Grid& g, std::size_t n_keep) {
  const std::size_t K = g.trials(), T = g.timesteps();
  std::vector<double> mean(T * n_keep, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const auto* row = g.row(k, t);
      double* out = mean.data() + t * n_keep;
      for (std::size_t i = 0; i < n_keep; ++i) out[i] += static_cast<double>(row[i]);
    }
  const double inv = 1.0 / static_cast<double>(K);
  for (double& v : mean) v *= inv;
  return mean;
}

template <typename Grid>
PsthCorrelation psth_correlation_impl(const Grid& model, const SpikeTensor& data) {
  if (model.timesteps() != data.timesteps())
    throw ValidationError("psth correlation needs matching time axes, model has " +
                          std::to_string(model.timesteps()) + " bins, data " +
                          std::to_string(data.timesteps()));
  if (model.neurons() < data.neurons())
    throw ValidationError("model covers " + std::to_string(model.neurons()) +
                          " neurons, data needs " + std::to_string(data.neurons()));
  data.check_binary();
  const std::size_t T = data.timesteps(), n = data.neurons();
  const std::vector<double> a = trial_mean_series(model, n);
  const std::vector<double> b = trial_mean_series(data, n);

  PsthCorrelation out;
  out.rho.assign(n, 0.0);
  out.defined.assign(n, 0);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t i = 0; i < n; ++i) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      ma += a[t * n + i];
      mb += b[t * n + i];
    }
    ma *= inv_t;
    mb *= inv_t;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double da = a[t * n + i] - ma;
      const double db = b[t * n + i] - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
    if (va > 0.0 && vb > 0.0) {
      out.rho[i] = cov / std::sqrt(va * vb);
      out.defined[i] = 1;
    }
  }
  return out;
}

}  // namespace

std::size_t PsthCorrelation::defined_count() const {
  std::size_t c = 0;
  for (std::uint8_t d : defined) c += d;
  return c;
}

double PsthCorrelation::mean() const {
  double sum = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (defined[i]) {
      sum += rho[i];
      ++c;
    }
  }
  if (c == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(c);
}

PsthCorrelation psth_correlation(const ProbTensor& model, const SpikeTensor& data) {
  return psth_correlation_impl(model, data);
}

PsthCorrelation psth_correlation(const SpikeTensor& model, const SpikeTensor& data) {
  model.check_binary();
  return psth_correlation_impl(model, data);
}

NoiseCorrelation noise_correlation(const SpikeTensor& trials) {
  trials.check_binary();
  const std::size_t K = trials.trials(), T = trials.timesteps(), n = trials.neurons();
  if (K < 2)
    throw ValidationError("noise correlation needs at least two trials, got " +
                          std::to_string(K));

  std::vector<double> psth = trial_mean_series(trials, n);
  std::vector<double> grand(n, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) grand[i] += psth[t * n + i];
  for (double& g : grand) g /= static_cast<double>(T);

  // Upper triangle accumulated once, mirrored at the end so the matrix is
  // symmetric by construction.
  std::vector<double> m_total(n * n, 0.0), m_noise(n * n, 0.0);
  std::vector<double> dev_tot(n), dev_noi(n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* row = trials.row(k, t);
      const double* bar = psth.data() + t * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double z = static_cast<double>(row[i]);
        dev_tot[i] = z - grand[i];
        dev_noi[i] = z - bar[i];
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          m_total[i * n + j] += dev_tot[i] * dev_tot[j];
          m_noise[i * n + j] += dev_noi[i] * dev_noi[j];
        }
    }
  const double inv = 1.0 / (static_cast<double>(T) * static_cast<double>(K));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      m_total[i * n + j] *= inv;
      m_noise[i * n + j] *= inv;
      m_total[j * n + i] = m_total[i * n + j];
      m_noise[j * n + i] = m_noise[i * n + j];
    }

  NoiseCorrelation out;
  out.neurons = n;
  out.matrix.assign(n * n, 0.0);
  out.defined.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double vi = m_total[i * n + i], vj = m_total[j * n + j];
      if (vi > 0.0 && vj > 0.0) {
        out.matrix[i * n + j] = m_noise[i * n + j] / std::sqrt(vi * vj);
        out.defined[i * n + j] = 1;
      }
    }
  return out;
}

R2Result nc_r2(const NoiseCorrelation& model, const NoiseCorrelation& data) {
  if (model.neurons != data.neurons)
    throw ValidationError("noise correlation matrices cover different populations");
  const std::size_t n = data.neurons;

  R2Result out;
  double mean_d = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (model.is_defined(i, j) && data.is_defined(i, j)) {
        mean_d += data.at(i, j);
        ++out.pairs;
      } else {
        ++out.excluded;
      }
    }
  if (out.pairs == 0) return out;
  mean_d /= static_cast<double>(out.pairs);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !model.is_defined(i, j) || !data.is_defined(i, j)) continue;
      const double rd = data.at(i, j) - model.at(i, j);
      const double rm = data.at(i, j) - mean_d;
      num += rd * rd;
      den += rm * rm;
    }
  if (den > 0.0) {
    out.value = 1.0 - num / den;
    out.defined = true;
  }
  return out;
}

namespace {

// log((1/M) sum exp(x_m)), exact passthrough for a single element.
double log_mean_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(xs.size()));
}

double row_logprob(const RolloutRecord& rec, const SpikeTensor& data, std::size_t data_trial,
                   std::size_t model_trial, std::size_t t, std::size_t n_vis) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_vis; ++i) {
    const double p = rec.probs(model_trial, t, i);
    const double q = data(data_trial, t, i) ? p : 1.0 - p;
    sum += std::log(std::max(q, kLogClampEps));
  }
  return sum;
}

}  // namespace

double test_nll(const NetworkParams& params, const InputCurrentTensor& stimulus,
                const SpikeTensor& data, std::uint64_t seed) {
  params.validate();
  data.check_binary();
  if (data.neurons() != params.n_visible)
    throw ValidationError("data covers " + std::to_string(data.neurons()) +
                          " neurons, the model has " + std::to_string(params.n_visible) +
                          " visible");
  const InputCurrentTensor stim = widen_stimulus(params, stimulus);
  if (stim.timesteps() != data.timesteps())
    throw ValidationError("stimulus and data disagree on the number of time bins");
  if (params.n_hidden() == 0) {
    const RolloutRecord rec = rollout(params, stim, data.trials(), ClampSpec::full(data), seed);
    return loss_mle(rec, data);
  }
  const RolloutRecord rec = rollout(params, stim, data.trials(), ClampSpec::visible(data), seed);
  return loss_elbo(rec, data);
}

double multistep_loglik(const NetworkParams& params, const InputCurrentTensor& stimulus,
                        const SpikeTensor& data, std::size_t t, std::size_t lag,
                        std::size_t rollouts, std::uint64_t seed) {
  params.validate();
  data.check_binary();
  if (data.neurons() != params.n_visible)
    throw ValidationError("data covers " + std::to_string(data.neurons()) +
                          " neurons, the model has " + std::to_string(params.n_visible) +
                          " visible");
  const InputCurrentTensor stim = widen_stimulus(params, stimulus);
  if (stim.timesteps() != data.timesteps())
    throw ValidationError("stimulus and data disagree on the number of time bins");
  if (rollouts == 0) throw ValidationError("multistep estimate needs at least one rollout");
  const std::size_t T = data.timesteps();
  if (t >= T || lag >= T - t)
    throw ValidationError("multistep target time " + std::to_string(t) + "+" +
                          std::to_string(lag) + " is outside the " + std::to_string(T) +
                          " recorded bins");

  const std::size_t t_eval = t + lag;
  const std::size_t window = t_eval + 1;
  const InputCurrentTensor stim_w = stim.time_window(0, window);
  const std::size_t n_vis = params.n_visible;
  // The target row's probabilities depend on sampled bins only through free
  // visible bins before t_eval or hidden activity; with neither present every
  // trajectory yields the same value, so one rollout stands in for all.
  const bool deterministic = lag <= 1 && params.n_hidden() == 0;
  const std::size_t m_count = deterministic ? 1 : rollouts;

  double acc = 0.0;
  std::vector<double> lw(m_count);
  for (std::size_t k = 0; k < data.trials(); ++k) {
    SpikeTensor ref(m_count, window, n_vis);
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t tt = 0; tt < window; ++tt)
        for (std::size_t i = 0; i < n_vis; ++i) ref(m, tt, i) = data(k, tt, i);
    const RolloutRecord rec = rollout(params, stim_w, m_count,
                                      ClampSpec::visible_until(ref, t + 1), derive_seed(seed, k));
    for (std::size_t m = 0; m < m_count; ++m)
      lw[m] = row_logprob(rec, data, k, m, t_eval, n_vis);
    acc += log_mean_exp(lw);
  }
  return acc / static_cast<double>(data.trials());
}

StatReport evaluate_model(const NetworkParams& params, const InputCurrentTensor& stimulus,
                          const SpikeTensor& data, const EvalConfig& cfg) {
  params.validate();
  data.check_binary();
  if (data.neurons() != params.n_visible)
    throw ValidationError("data covers " + std::to_string(data.neurons()) +
                          " neurons, the model has " + std::to_string(params.n_visible) +
                          " visible");
  const InputCurrentTensor stim = widen_stimulus(params, stimulus);
  if (stim.timesteps() != data.timesteps())
    throw ValidationError("stimulus and data disagree on the number of time bins");

  const std::size_t k_model = cfg.model_trials ? cfg.model_trials : data.trials();
  const RolloutRecord rec =
      rollout(params, stim, k_model, ClampSpec::free_run(), derive_seed(cfg.seed, 1));

  StatReport report;
  report.psth = psth_correlation(rec.probs, data);
  if (data.trials() >= 2 && k_model >= 2) {
    report.nc_data = noise_correlation(data);
    report.nc_model = noise_correlation(rec.spikes.visible_columns(params.n_visible));
    report.r2 = nc_r2(report.nc_model, report.nc_data);
  }
  report.test_nll = test_nll(params, stim, data, derive_seed(cfg.seed, 2));
  for (std::size_t lag : cfg.multistep_lags) {
    const double v = multistep_loglik(params, stim, data, cfg.multistep_t, lag,
                                      cfg.multistep_rollouts,
                                      derive_seed(derive_seed(cfg.seed, 3), lag));
    report.multistep.push_back({lag, v});
  }
  return report;
}

namespace {

using json = nlohmann::ordered_json;

json masked_value(double v, bool defined) {
  if (!defined || !std::isfinite(v)) return nullptr;
  return v;
}

json nc_json(const NoiseCorrelation& nc) {
  if (nc.neurons == 0) return nullptr;
  json rows = json::array();
  for (std::size_t i = 0; i < nc.neurons; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < nc.neurons; ++j)
      row.push_back(masked_value(nc.at(i, j), nc.is_defined(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void csv_row(std::string& out, const std::string& metric, const std::string& i,
             const std::string& j, double value, bool defined) {
  out += metric;
  out += ',';
  out += i;
  out += ',';
  out += j;
  out += ',';
  if (defined && std::isfinite(value)) out += format_double(value);
  out += ',';
  out += defined ? '1' : '0';
  out += '\n';
}

}  // namespace

std::string report_json(const StatReport& report) {
  json root;
  json psth;
  json rho = json::array();
  for (std::size_t i = 0; i < report.psth.rho.size(); ++i)
    rho.push_back(masked_value(report.psth.rho[i], report.psth.defined[i] != 0));
  psth["rho"] = std::move(rho);
  const double m = report.psth.mean();
  psth["mean"] = masked_value(m, report.psth.defined_count() > 0);
  psth["excluded"] = report.psth.excluded_count();
  root["psth_corr"] = std::move(psth);

  json nc;
  nc["model"] = nc_json(report.nc_model);
  nc["data"] = nc_json(report.nc_data);
  json r2;
  r2["value"] = masked_value(report.r2.value, report.r2.defined);
  r2["pairs"] = report.r2.pairs;
  r2["excluded"] = report.r2.excluded;
  nc["r2"] = std::move(r2);
  root["noise_correlation"] = std::move(nc);

  root["test_nll"] = report.test_nll;

  json steps = json::array();
  for (const MultistepPoint& p : report.multistep)
    steps.push_back(json{{"lag", p.lag}, {"loglik", p.loglik}});
  root["multistep"] = std::move(steps);

  return root.dump(2) + "\n";
}

std::string report_csv(const StatReport& report) {
  std::string out = "metric,i,j,value,defined\n";
  for (std::size_t i = 0; i < report.psth.rho.size(); ++i)
    csv_row(out, "psth_corr", std::to_string(i), "", report.psth.rho[i],
            report.psth.defined[i] != 0);
  const auto pair_rows = [&out](const char* name, const NoiseCorrelation& nc) {
    for (std::size_t i = 0; i < nc.neurons; ++i)
      for (std::size_t j = i + 1; j < nc.neurons; ++j)
        csv_row(out, name, std::to_string(i), std::to_string(j), nc.at(i, j),
                nc.is_defined(i, j));
  };
  pair_rows("nc_model", report.nc_model);
  pair_rows("nc_data", report.nc_data);
  csv_row(out, "nc_r2", "", "", report.r2.value, report.r2.defined);
  csv_row(out, "test_nll", "", "", report.test_nll, true);
  for (const MultistepPoint& p : report.multistep)
    csv_row(out, "multistep", std::to_string(p.lag), "", p.loglik, true);
  return out;
}

}  // namespace rsnn
