#include "rsnn/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "rsnn/errors.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/network.hpp"
#include "rsnn/oracle.hpp"
#include "rsnn/rng.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

namespace {

std::string format_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

InputCurrentTensor mild_drive(std::size_t timesteps, std::size_t n) {
  InputCurrentTensor stim(timesteps, n);
  for (std::size_t t = 0; t < timesteps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      stim(t, i) = 0.25 * std::sin(1.3 * static_cast<double>(t) + 0.7 * static_cast<double>(i));
    }
  }
  return stim;
}

NetworkParams suite_params(std::size_t n_total, std::size_t n_visible, std::size_t depth,
                           std::uint64_t seed, double bias) {
  NetworkParams p = init_params(n_total, n_visible, depth, seed);
  for (double& w : p.weights) w *= 1.5;  // visible coupling structure
  for (double& b : p.bias) b = bias;
  return p;
}

// Empirical outcome distribution vs the enumerated one, in total variation.
PropertyResult check_sampler_tv(const OracleSuiteConfig& cfg) {
  PropertyResult res;
  res.name = "sampler_tv";
  res.tolerance = cfg.tv_tolerance;

  const std::size_t n = cfg.n_visible;
  const std::size_t t_len = cfg.timesteps;
  const NetworkParams params = suite_params(n, n, cfg.history_depth, derive_seed(cfg.seed, 1),
                                            -0.1);
  const InputCurrentTensor stim = mild_drive(t_len, n);
  const ExactDistribution exact = enumerate_distribution(params, stim, t_len);

  NetworkParams sampler = params;
  if (cfg.corrupt_sampler) sampler.bias[0] += 0.25;

  std::vector<double> counts(exact.table.size(), 0.0);
  const std::size_t batch = 100000;
  std::size_t done = 0;
  std::size_t batch_index = 0;
  while (done < cfg.tv_samples) {
    const std::size_t k = std::min(batch, cfg.tv_samples - done);
    const RolloutRecord rec = rollout(sampler, stim, k, ClampSpec::free_run(),
                                      derive_seed(derive_seed(cfg.seed, 2), batch_index));
    for (std::size_t r = 0; r < k; ++r) {
      std::size_t idx = 0;
      for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          idx |= static_cast<std::size_t>(rec.spikes(r, t, i)) << (t * n + i);
        }
      }
      counts[idx] += 1.0;
    }
    done += k;
    ++batch_index;
  }

  double tv = 0.0;
  for (std::size_t o = 0; o < counts.size(); ++o) {
    tv += std::abs(counts[o] / static_cast<double>(cfg.tv_samples) - exact.table[o]);
  }
  tv *= 0.5;
  res.observed = tv;
  res.pass = tv < res.tolerance;
  res.detail = std::to_string(cfg.tv_samples) + " samples over " +
               std::to_string(counts.size()) + " outcomes" +
               (cfg.corrupt_sampler ? ", sampler deliberately corrupted" : "");
  return res;
}

// Monte-Carlo likelihood estimate with sampled hidden units must stay at or
// below the exact visible marginal (within 3 standard errors of the mean).
PropertyResult check_elbo_bound(const OracleSuiteConfig& cfg) {
  PropertyResult res;
  res.name = "elbo_bound";
  res.tolerance = 0.0;

  const std::size_t nv = cfg.n_visible;
  const std::size_t nt = cfg.n_visible + cfg.n_hidden;
  const std::size_t t_len = cfg.timesteps;
  const InputCurrentTensor stim = mild_drive(t_len, nt);

  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_pair = 0;
  for (std::size_t p = 0; p < cfg.elbo_pairs; ++p) {
    const NetworkParams params = suite_params(nt, nv, cfg.history_depth,
                                              derive_seed(cfg.seed, 100 + p), -0.15);
    // One visible pattern drawn from the model itself keeps it in-support.
    const RolloutRecord draw =
        rollout(params, stim, 1, ClampSpec::free_run(), derive_seed(cfg.seed, 200 + p));
    const SpikeTensor pattern = draw.spikes.visible_columns(nv);

    const ExactDistribution dist = enumerate_distribution(params, stim, t_len);
    const double exact_loglik = exact_marginal_loglik(dist, pattern);

    const std::vector<std::size_t> zeros(cfg.elbo_samples, 0);
    const SpikeTensor tiled = pattern.gather_trials(zeros);
    const RolloutRecord rec = rollout(params, stim, cfg.elbo_samples, ClampSpec::visible(tiled),
                                      derive_seed(cfg.seed, 300 + p));

    double sum = 0.0, sumsq = 0.0;
    for (std::size_t k = 0; k < cfg.elbo_samples; ++k) {
      double ll = 0.0;
      for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t i = 0; i < nv; ++i) {
          const double prob = rec.probs(k, t, i);
          ll += std::log(std::max(rec.spikes(k, t, i) ? prob : 1.0 - prob, kLogClampEps));
        }
      }
      sum += ll;
      sumsq += ll * ll;
    }
    const double m = static_cast<double>(cfg.elbo_samples);
    const double mean = sum / m;
    const double var = std::max(0.0, sumsq / m - mean * mean);
    const double se = std::sqrt(var / m);
    const double violation = mean - (exact_loglik + 3.0 * se);
    if (violation > worst) {
      worst = violation;
      worst_pair = p;
    }
  }
  res.observed = worst;
  res.pass = worst <= res.tolerance;
  res.detail = std::to_string(cfg.elbo_pairs) + " random (params, pattern) pairs, " +
               std::to_string(cfg.elbo_samples) + " hidden samples each; worst margin " +
               format_g(worst) + " at pair " + std::to_string(worst_pair);
  return res;
}

// Sample means of the probability and coincidence estimators vs exact
// expectations, each entry within 3 standard errors (observed in SE units).
PropertyResult check_estimator_bias(const OracleSuiteConfig& cfg) {
  PropertyResult res;
  res.name = "estimator_bias";
  res.tolerance = 1.0;

  const std::size_t n = cfg.n_visible;
  const std::size_t t_len = cfg.timesteps;
  const NetworkParams params = suite_params(n, n, cfg.history_depth, derive_seed(cfg.seed, 3),
                                            -0.2);
  const InputCurrentTensor stim = mild_drive(t_len, n);
  const ExactDistribution dist = enumerate_distribution(params, stim, t_len);
  const std::vector<double> exact_psth = exact_expected_statistic(dist, ExactStatistic::kPsth);
  const std::vector<double> exact_coin =
      exact_expected_statistic(dist, ExactStatistic::kCoincidence);

  const RolloutRecord rec =
      rollout(params, stim, cfg.stat_rollouts, ClampSpec::free_run(), derive_seed(cfg.seed, 4));
  const double kd = static_cast<double>(cfg.stat_rollouts);

  double worst = 0.0;
  std::string worst_what;
  const auto consider = [&](const std::string& what, double sum, double sumsq, double exact) {
    const double mean = sum / kd;
    const double var = std::max(0.0, sumsq / kd - mean * mean);
    const double se = std::sqrt(var / kd);
    const double ratio = std::abs(mean - exact) / (3.0 * se + 1e-12);
    if (ratio > worst) {
      worst = ratio;
      worst_what = what + " (mean " + format_g(mean) + ", exact " + format_g(exact) + ")";
    }
  };

  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0, sumsq = 0.0;
      for (std::size_t k = 0; k < cfg.stat_rollouts; ++k) {
        const double v = rec.probs(k, t, i);
        sum += v;
        sumsq += v * v;
      }
      consider("sigma[" + std::to_string(t) + "][" + std::to_string(i) + "]", sum, sumsq,
               exact_psth[t * n + i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0.0, sumsq = 0.0;
      for (std::size_t k = 0; k < cfg.stat_rollouts; ++k) {
        double v = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) v += rec.probs(k, t, i) * rec.probs(k, t, j);
        v /= static_cast<double>(t_len);
        sum += v;
        sumsq += v * v;
      }
      consider("pi[" + std::to_string(i) + "][" + std::to_string(j) + "]", sum, sumsq,
               exact_coin[i * n + j]);
    }
  }
  res.observed = worst;
  res.pass = worst <= res.tolerance;
  res.detail = "max |mean - exact| in units of 3 standard errors over " +
               std::to_string(cfg.stat_rollouts) + " rollouts; worst " + worst_what;
  return res;
}

}  // namespace

std::vector<PropertyResult> run_oracle_suite(const OracleSuiteConfig& cfg) {
  if (cfg.n_visible == 0 || cfg.timesteps == 0 || cfg.history_depth == 0) {
    throw ConfigError("oracle suite sizes must be >= 1");
  }
  if ((cfg.n_visible + cfg.n_hidden) * cfg.timesteps > kMaxOracleBins) {
    throw ConfigError("oracle suite instance exceeds the enumeration cap of " +
                      std::to_string(kMaxOracleBins) + " bits");
  }
  if (cfg.tv_samples == 0 || cfg.elbo_pairs == 0 || cfg.elbo_samples == 0 ||
      cfg.stat_rollouts == 0) {
    throw ConfigError("oracle suite sample counts must be >= 1");
  }
  std::vector<PropertyResult> results;
  results.push_back(check_sampler_tv(cfg));
  results.push_back(check_elbo_bound(cfg));
  results.push_back(check_estimator_bias(cfg));
  return results;
}

std::string suite_text(const std::vector<PropertyResult>& results) {
  std::string out = "property         tolerance    observed     status\n";
  for (const PropertyResult& r : results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %-12.4g %-12.4g %s\n", r.name.c_str(), r.tolerance,
                  r.observed, r.pass ? "PASS" : "FAIL");
    out += line;
    out += "  " + r.detail + "\n";
  }
  return out;
}

}  // namespace rsnn
