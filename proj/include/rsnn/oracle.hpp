#pragma once

#include <cstdint>
#include <vector>

#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

// Exhaustive distribution over every binary spike tensor of an instance small
// enough to enumerate. Outcome index bit (t*n + i) holds z[t][i]: t major,
// i minor, so independently coded enumerations can compare tables entry-wise.
struct ExactDistribution {
  NetworkParams params;
  InputCurrentTensor stimulus;
  std::size_t timesteps = 0;
  std::vector<double> table;  // size 2^(n_total*timesteps)

  std::size_t bin_count() const { return params.n_total * timesteps; }
  static bool bit(std::uint32_t outcome, std::size_t t, std::size_t n, std::size_t i) {
    return (outcome >> (t * n + i)) & 1u;
  }
};

inline constexpr std::size_t kMaxOracleBins = 20;

// Probability of each outcome via the chain rule, each bin's logistic rate
// computed from that outcome's own history.
ExactDistribution enumerate_distribution(const NetworkParams& params,
                                         const InputCurrentTensor& stimulus,
                                         std::size_t timesteps);

// log P(visible pattern) = log of the summed probability of all outcomes
// whose first n_visible columns match. pattern is [1][T][n_visible].
double exact_marginal_loglik(const ExactDistribution& dist, const SpikeTensor& pattern);

enum class ExactStatistic { kPsth, kCoincidence, kCenteredCovariance };

// Exact expectation of a spike-train statistic under the distribution.
//   kPsth:               [T][n] bin-wise spike probability
//   kCoincidence:        [n][n] (1/T) sum_t P(z_{t,i}=1, z_{t,j}=1)
//   kCenteredCovariance: [n][n] (1/T) sum_t Cov(z_{t,i}, z_{t,j})
std::vector<double> exact_expected_statistic(const ExactDistribution& dist,
                                             ExactStatistic which);

}  // namespace rsnn
