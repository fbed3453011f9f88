#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsnn {

// One oracle-backed property check: observed must stay at or below tolerance.
struct PropertyResult {
  std::string name;
  double tolerance = 0.0;
  double observed = 0.0;
  bool pass = false;
  std::string detail;
};

// Sizes for the enumeration-backed checks. Instances must stay under the
// oracle bin cap (n * timesteps <= 20 bits).
struct OracleSuiteConfig {
  std::size_t n_visible = 2;
  std::size_t n_hidden = 2;  // hidden units of the bound-check instances
  std::size_t timesteps = 3;
  std::size_t history_depth = 1;
  std::size_t tv_samples = 1000000;
  std::size_t elbo_pairs = 20;
  std::size_t elbo_samples = 100000;
  std::size_t stat_rollouts = 100000;
  std::uint64_t seed = 1;
  double tv_tolerance = 0.01;
  // Test hook: biases the sampler's parameters (exact side untouched) so the
  // total-variation check must fail; proves the check can see a broken sampler.
  bool corrupt_sampler = false;
};

// Three checks: empirical-vs-exact total variation of the sampler, the
// likelihood bound of the hidden-unit estimate against the exact visible
// marginal, and unbiasedness of the mean-probability and coincidence
// estimators against exact expectations.
std::vector<PropertyResult> run_oracle_suite(const OracleSuiteConfig& cfg);

// Aligned text table, one row per property.
std::string suite_text(const std::vector<PropertyResult>& results);

}  // namespace rsnn
