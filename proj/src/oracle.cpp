#include "rsnn/oracle.hpp"

#include <cmath>

#include "rsnn/errors.hpp"

namespace rsnn {

ExactDistribution enumerate_distribution(const NetworkParams& params,
                                         const InputCurrentTensor& stimulus,
                                         std::size_t timesteps) {
  params.validate();
  if (timesteps == 0) throw ValidationError("enumeration needs at least one timestep");
  if (stimulus.neurons() != params.n_total)
    throw ValidationError("stimulus width does not match the network");
  if (stimulus.timesteps() < timesteps)
    throw ValidationError("stimulus shorter than the requested horizon");
  const std::size_t n = params.n_total;
  const std::size_t bins = n * timesteps;
  if (bins > kMaxOracleBins)
    throw ValidationError("instance has " + std::to_string(bins) +
                          " bins, enumeration is capped at " + std::to_string(kMaxOracleBins));

  ExactDistribution dist{params, stimulus, timesteps, {}};
  const std::size_t outcomes = std::size_t{1} << bins;
  dist.table.resize(outcomes);

  const std::size_t depth = params.history_depth;
  std::vector<std::uint8_t> z(bins);
  std::vector<const std::uint8_t*> history(depth);
  for (std::size_t outcome = 0; outcome < outcomes; ++outcome) {
    for (std::size_t b = 0; b < bins; ++b) z[b] = (outcome >> b) & 1u;
    double prob = 1.0;
    for (std::size_t t = 0; t < timesteps; ++t) {
      for (std::size_t d = 0; d < depth; ++d) {
        const std::size_t back = depth - d;
        history[d] = t >= back ? z.data() + (t - back) * n : nullptr;
      }
      const PotentialRow row = membrane_potential(params, history, stimulus.row(t));
      for (std::size_t i = 0; i < n; ++i) {
        const double p = logistic(row.normalized[i]);
        prob *= z[t * n + i] ? p : 1.0 - p;
      }
    }
    dist.table[outcome] = prob;
  }
  return dist;
}

double exact_marginal_loglik(const ExactDistribution& dist, const SpikeTensor& pattern) {
  const std::size_t n = dist.params.n_total;
  const std::size_t n_vis = dist.params.n_visible;
  if (pattern.trials() != 1 || pattern.timesteps() != dist.timesteps ||
      pattern.neurons() != n_vis)
    throw ValidationError("visible pattern shape does not match the instance");
  pattern.check_binary();

  double total = 0.0;
  for (std::size_t outcome = 0; outcome < dist.table.size(); ++outcome) {
    bool match = true;
    for (std::size_t t = 0; t < dist.timesteps && match; ++t)
      for (std::size_t i = 0; i < n_vis; ++i)
        if (ExactDistribution::bit(static_cast<std::uint32_t>(outcome), t, n, i) !=
            (pattern(0, t, i) != 0)) {
          match = false;
          break;
        }
    if (match) total += dist.table[outcome];
  }
  return std::log(total);
}

std::vector<double> exact_expected_statistic(const ExactDistribution& dist,
                                             ExactStatistic which) {
  const std::size_t n = dist.params.n_total;
  const std::size_t timesteps = dist.timesteps;

  // Bin-wise and within-bin pairwise marginals cover all three statistics.
  std::vector<double> p_one(timesteps * n, 0.0);
  std::vector<double> p_pair(timesteps * n * n, 0.0);
  for (std::size_t outcome = 0; outcome < dist.table.size(); ++outcome) {
    const double p = dist.table[outcome];
    for (std::size_t t = 0; t < timesteps; ++t) {
      const std::uint32_t row = (static_cast<std::uint32_t>(outcome) >> (t * n)) &
                                ((1u << n) - 1u);
      if (!row) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (!((row >> i) & 1u)) continue;
        p_one[t * n + i] += p;
        for (std::size_t j = 0; j < n; ++j)
          if ((row >> j) & 1u) p_pair[(t * n + i) * n + j] += p;
      }
    }
  }

  switch (which) {
    case ExactStatistic::kPsth:
      return p_one;
    case ExactStatistic::kCoincidence: {
      std::vector<double> out(n * n, 0.0);
      for (std::size_t t = 0; t < timesteps; ++t)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] += p_pair[(t * n + i) * n + j];
      for (double& v : out) v /= static_cast<double>(timesteps);
      return out;
    }
    case ExactStatistic::kCenteredCovariance: {
      std::vector<double> out(n * n, 0.0);
      for (std::size_t t = 0; t < timesteps; ++t)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] +=
                p_pair[(t * n + i) * n + j] - p_one[t * n + i] * p_one[t * n + j];
      for (double& v : out) v /= static_cast<double>(timesteps);
      return out;
    }
  }
  throw ValidationError("unsupported statistic");
}

}  // namespace rsnn
