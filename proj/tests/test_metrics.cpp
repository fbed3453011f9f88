#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rsnn/errors.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/metrics.hpp"
#include "rsnn/network.hpp"
#include "rsnn/oracle.hpp"
#include "rsnn/rng.hpp"

using namespace rsnn;

namespace {

// Bias giving a free-running unit the firing rate `r`.
double bias_for_rate(double r) { return 0.4 * (1.0 + std::log(r / (1.0 - r))); }

NetworkParams flat_net(std::size_t n, double rate, std::size_t depth = 1,
                       std::size_t n_visible = static_cast<std::size_t>(-1)) {
  NetworkParams p;
  p.n_total = n;
  p.n_visible = n_visible == static_cast<std::size_t>(-1) ? n : n_visible;
  p.history_depth = depth;
  p.weights.assign(p.weight_count(), 0.0);
  p.bias.assign(n, bias_for_rate(rate));
  return p;
}

SpikeTensor spikes_from_rows(const std::vector<std::vector<std::vector<int>>>& rows) {
  const std::size_t K = rows.size(), T = rows[0].size(), n = rows[0][0].size();
  SpikeTensor z(K, T, n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < n; ++i) z(k, t, i) = static_cast<std::uint8_t>(rows[k][t][i]);
  return z;
}

}  // namespace

TEST_CASE("identical psth gives correlation one") {
  // Data: 4 trials over 3 bins, one neuron, psth (0.25, 0.5, 0.75).
  SpikeTensor data = spikes_from_rows({{{1}, {1}, {1}},
                                       {{0}, {1}, {1}},
                                       {{0}, {0}, {1}},
                                       {{0}, {0}, {0}}});
  ProbTensor model(1, 3, 1);
  model(0, 0, 0) = 0.25;
  model(0, 1, 0) = 0.5;
  model(0, 2, 0) = 0.75;
  PsthCorrelation c = psth_correlation(model, data);
  REQUIRE(c.rho.size() == 1);
  CHECK(c.defined[0] == 1);
  CHECK(c.rho[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.mean() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.defined_count() == 1);
}

TEST_CASE("decreasing affine transform gives correlation minus one") {
  SpikeTensor data = spikes_from_rows({{{1}, {1}, {1}},
                                       {{0}, {1}, {1}},
                                       {{0}, {0}, {1}},
                                       {{0}, {0}, {0}}});
  ProbTensor model(1, 3, 1);
  for (std::size_t t = 0; t < 3; ++t) {
    const double psth = 0.25 * static_cast<double>(t + 1);
    model(0, t, 0) = 0.9 - 0.5 * psth;
  }
  PsthCorrelation c = psth_correlation(model, data);
  CHECK(c.rho[0] == doctest::Approx(-1.0).epsilon(1e-14));

  // And a positive affine transform leaves it at one.
  for (std::size_t t = 0; t < 3; ++t) {
    const double psth = 0.25 * static_cast<double>(t + 1);
    model(0, t, 0) = 0.1 + 0.3 * psth;
  }
  CHECK(psth_correlation(model, data).rho[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("hand psth series matches the direct covariance value") {
  // Data psth (0.1, 0.2, 0.3) from 10 trials; model series (0.2, 0.2, 0.35).
  std::vector<std::vector<std::vector<int>>> rows(10);
  for (std::size_t k = 0; k < 10; ++k)
    rows[k] = {{k < 1 ? 1 : 0}, {k < 2 ? 1 : 0}, {k < 3 ? 1 : 0}};
  SpikeTensor data = spikes_from_rows(rows);
  ProbTensor model(1, 3, 1);
  model(0, 0, 0) = 0.2;
  model(0, 1, 0) = 0.2;
  model(0, 2, 0) = 0.35;

  // cov = 0.015, var_model = 0.015, var_data = 0.02, rho = sqrt(3)/2.
  PsthCorrelation c = psth_correlation(model, data);
  CHECK(c.rho[0] == doctest::Approx(0.8660254037844387).epsilon(1e-12));

  // Independent one-pass moment formula on the same two series.
  const double a[3] = {0.2, 0.2, 0.35}, b[3] = {0.1, 0.2, 0.3};
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int t = 0; t < 3; ++t) {
    sa += a[t];
    sb += b[t];
    saa += a[t] * a[t];
    sbb += b[t] * b[t];
    sab += a[t] * b[t];
  }
  const double cov = sab / 3 - (sa / 3) * (sb / 3);
  const double va = saa / 3 - (sa / 3) * (sa / 3);
  const double vb = sbb / 3 - (sb / 3) * (sb / 3);
  CHECK(c.rho[0] == doctest::Approx(cov / std::sqrt(va * vb)).epsilon(1e-10));
}

TEST_CASE("zero variance flags the neuron undefined and drops it from the mean") {
  // Neuron 0 varies over time, neuron 1 is silent in every trial.
  SpikeTensor data = spikes_from_rows({{{1, 0}, {0, 0}, {1, 0}},
                                       {{1, 0}, {0, 0}, {0, 0}}});
  ProbTensor model(1, 3, 2);
  model(0, 0, 0) = 0.9;
  model(0, 1, 0) = 0.1;
  model(0, 2, 0) = 0.6;
  for (std::size_t t = 0; t < 3; ++t) model(0, t, 1) = 0.4;
  PsthCorrelation c = psth_correlation(model, data);
  CHECK(c.defined[0] == 1);
  CHECK(c.defined[1] == 0);
  CHECK(c.defined_count() == 1);
  CHECK(c.excluded_count() == 1);
  CHECK(c.mean() == doctest::Approx(c.rho[0]));

  // All neurons undefined: the mean is NaN.
  SpikeTensor silent(2, 3, 1);
  ProbTensor flat(1, 3, 1);
  for (std::size_t t = 0; t < 3; ++t) flat(0, t, 0) = 0.25;
  PsthCorrelation none = psth_correlation(flat, silent);
  CHECK(none.defined_count() == 0);
  CHECK(std::isnan(none.mean()));
}

TEST_CASE("spike overload and shape checks") {
  SpikeTensor data = spikes_from_rows({{{1}, {0}, {1}}, {{1}, {0}, {0}}});
  SpikeTensor model = spikes_from_rows({{{1}, {0}, {1}}, {{1}, {0}, {1}}});
  PsthCorrelation c = psth_correlation(model, data);
  CHECK(c.defined[0] == 1);
  CHECK(c.rho[0] > 0.0);

  SpikeTensor wrong_t(2, 4, 1);
  CHECK_THROWS_AS(psth_correlation(wrong_t, data), ValidationError);
  SpikeTensor narrow(2, 3, 1);
  SpikeTensor wide_data(2, 3, 2);
  CHECK_THROWS_AS(psth_correlation(narrow, wide_data), ValidationError);
}

TEST_CASE("duplicated neuron makes the cross entry match the diagonal") {
  std::vector<std::vector<std::vector<int>>> rows(3);
  const int col[3][4] = {{1, 0, 1, 0}, {0, 0, 1, 1}, {1, 1, 0, 0}};
  for (std::size_t k = 0; k < 3; ++k) {
    rows[k].resize(4);
    for (std::size_t t = 0; t < 4; ++t) rows[k][t] = {col[k][t], col[k][t]};
  }
  NoiseCorrelation nc = noise_correlation(spikes_from_rows(rows));
  REQUIRE(nc.neurons == 2);
  CHECK(nc.is_defined(0, 1));
  CHECK(nc.at(0, 1) == nc.at(1, 0));
  CHECK(nc.at(0, 1) == doctest::Approx(nc.at(0, 0)).epsilon(1e-15));
}

TEST_CASE("identical trials mean zero noise covariance") {
  std::vector<std::vector<std::vector<int>>> rows(
      4, {{1, 0}, {0, 1}, {1, 1}, {0, 0}, {1, 0}});
  NoiseCorrelation nc = noise_correlation(spikes_from_rows(rows));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(nc.is_defined(i, j));
      CHECK(nc.at(i, j) == 0.0);
    }
}

TEST_CASE("hand dataset matches a brute-force double loop") {
  SpikeTensor z = spikes_from_rows({{{1, 0}, {0, 1}},
                                    {{1, 1}, {0, 0}},
                                    {{0, 0}, {1, 1}}});
  NoiseCorrelation nc = noise_correlation(z);

  // Direct summation from the definitions, separate loop structure.
  const double K = 3, T = 2;
  double psth[2][2] = {};
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < 2; ++i) psth[t][i] += z(k, t, i) / K;
  double grand[2] = {};
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 2; ++i) grand[i] += psth[t][i] / T;
  double m_tot[2][2] = {}, m_noi[2][2] = {};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 3; ++k)
        for (int t = 0; t < 2; ++t) {
          m_tot[i][j] += (z(k, t, i) - grand[i]) * (z(k, t, j) - grand[j]) / (T * K);
          m_noi[i][j] += (z(k, t, i) - psth[t][i]) * (z(k, t, j) - psth[t][j]) / (T * K);
        }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double want = m_noi[i][j] / std::sqrt(m_tot[i][i] * m_tot[j][j]);
      CHECK(nc.at(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("noise correlation rejects single-trial data and flags silent neurons") {
  SpikeTensor one(1, 5, 2);
  CHECK_THROWS_AS(noise_correlation(one), ValidationError);

  // Neuron 1 silent everywhere: zero total variance poisons its row and column.
  SpikeTensor z = spikes_from_rows({{{1, 0}, {0, 0}}, {{0, 0}, {1, 0}}});
  NoiseCorrelation nc = noise_correlation(z);
  CHECK(nc.is_defined(0, 0));
  CHECK_FALSE(nc.is_defined(0, 1));
  CHECK_FALSE(nc.is_defined(1, 0));
  CHECK_FALSE(nc.is_defined(1, 1));
}

TEST_CASE("noise correlation invariances on sampled data") {
  NetworkParams teacher = init_params(3, 3, 2, 11);
  for (std::size_t j = 0; j < 3; ++j) teacher.bias[j] = bias_for_rate(0.2 + 0.1 * j);
  InputCurrentTensor drive(30, 3);
  SpikeTensor data = rollout(teacher, drive, 5, ClampSpec::free_run(), 21u).spikes;
  NoiseCorrelation base = noise_correlation(data);

  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(base.at(i, j) == base.at(j, i));
      if (base.is_defined(i, j)) CHECK(std::abs(base.at(i, j)) <= 1.0 + 1e-12);
    }

  NoiseCorrelation permuted = noise_correlation(data.gather_trials({4, 2, 0, 1, 3}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(permuted.at(i, j) == doctest::Approx(base.at(i, j)).epsilon(1e-12));

  // Swapping neurons 0 and 2 conjugates the matrix by the swap.
  SpikeTensor swapped(5, 30, 3);
  const std::size_t map[3] = {2, 1, 0};
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t t = 0; t < 30; ++t)
      for (std::size_t i = 0; i < 3; ++i) swapped(k, t, i) = data(k, t, map[i]);
  NoiseCorrelation conj = noise_correlation(swapped);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(conj.at(i, j) == base.at(map[i], map[j]));
}

namespace {

NoiseCorrelation hand_matrix(const std::vector<double>& off_diag) {
  // off_diag holds (0,1), (0,2), (1,2) for a 3-neuron population.
  NoiseCorrelation nc;
  nc.neurons = 3;
  nc.matrix.assign(9, 0.0);
  nc.defined.assign(9, 1);
  nc.matrix[0 * 3 + 1] = nc.matrix[1 * 3 + 0] = off_diag[0];
  nc.matrix[0 * 3 + 2] = nc.matrix[2 * 3 + 0] = off_diag[1];
  nc.matrix[1 * 3 + 2] = nc.matrix[2 * 3 + 1] = off_diag[2];
  for (std::size_t i = 0; i < 3; ++i) nc.matrix[i * 3 + i] = 1.0;
  return nc;
}

}  // namespace

TEST_CASE("nc r2 endpoints and a hand-computed negative value") {
  NoiseCorrelation data = hand_matrix({0.125, 0.375, 0.25});

  R2Result perfect = nc_r2(data, data);
  CHECK(perfect.defined);
  CHECK(perfect.value == 1.0);
  CHECK(perfect.pairs == 6);
  CHECK(perfect.excluded == 0);

  // Model pinned at the data mean scores exactly zero.
  NoiseCorrelation at_mean = hand_matrix({0.25, 0.25, 0.25});
  CHECK(nc_r2(at_mean, data).value == 0.0);

  // All-zero model: num = 0.4375, den = 0.0625, r2 = -6 exactly.
  NoiseCorrelation zeros = hand_matrix({0.0, 0.0, 0.0});
  R2Result bad = nc_r2(zeros, data);
  CHECK(bad.defined);
  CHECK(bad.value == -6.0);
}

TEST_CASE("nc r2 exclusion, degeneracy, and shape checks") {
  NoiseCorrelation data = hand_matrix({0.125, 0.375, 0.25});
  NoiseCorrelation zeros = hand_matrix({0.0, 0.0, 0.0});
  zeros.defined[0 * 3 + 1] = 0;
  zeros.defined[1 * 3 + 0] = 0;
  R2Result r = nc_r2(zeros, data);
  CHECK(r.pairs == 4);
  CHECK(r.excluded == 2);
  // Included entries 0.375 and 0.25 twice each: mean 0.3125, den 0.015625,
  // num 0.40625, r2 = 1 - 26.
  CHECK(r.value == -25.0);

  // Two neurons: the symmetric pair has zero dispersion around its own mean.
  NoiseCorrelation two;
  two.neurons = 2;
  two.matrix = {1.0, 0.3, 0.3, 1.0};
  two.defined.assign(4, 1);
  NoiseCorrelation two_model = two;
  two_model.matrix[1] = two_model.matrix[2] = 0.1;
  R2Result flat = nc_r2(two_model, two);
  CHECK_FALSE(flat.defined);

  CHECK_THROWS_AS(nc_r2(two, data), ValidationError);
}

TEST_CASE("test nll equals the clamped likelihood loss") {
  NetworkParams params = init_params(3, 3, 2, 5);
  InputCurrentTensor drive(20, 3);
  SpikeTensor data = rollout(params, drive, 4, ClampSpec::free_run(), 31u).spikes;

  const double nll = test_nll(params, drive, data, 17u);
  RolloutRecord rec = rollout(params, drive, 4, ClampSpec::full(data), 17u);
  CHECK(nll == loss_mle(rec, data));
  // Deterministic without hidden units: the seed is irrelevant.
  CHECK(nll == test_nll(params, drive, data, 99u));
}

TEST_CASE("test nll with hidden units is the sampled bound") {
  NetworkParams params = init_params(4, 2, 1, 8);
  InputCurrentTensor vis_drive(15, 2);
  SpikeTensor data =
      rollout(params, vis_drive.widened(4), 3, ClampSpec::free_run(), 41u)
          .spikes.visible_columns(2);

  const double bound = test_nll(params, vis_drive, data, 7u);
  RolloutRecord rec =
      rollout(params, vis_drive.widened(4), 3, ClampSpec::visible(data), 7u);
  CHECK(bound == loss_elbo(rec, data));

  SpikeTensor wrong(3, 15, 3);
  CHECK_THROWS_AS(test_nll(params, vis_drive, wrong, 7u), ValidationError);
}

TEST_CASE("multistep at lag zero is the clamped one-step value, bitwise") {
  NetworkParams params = init_params(3, 3, 2, 13);
  for (std::size_t j = 0; j < 3; ++j) params.bias[j] = bias_for_rate(0.25);
  InputCurrentTensor drive(8, 3);
  SpikeTensor data = rollout(params, drive, 2, ClampSpec::free_run(), 77u).spikes;
  const std::size_t t = 5;

  const double ms = multistep_loglik(params, drive, data, t, 0, 13, 99u);

  RolloutRecord forced = rollout(params, drive, 2, ClampSpec::full(data), 1u);
  double acc = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double p = forced.probs(k, t, i);
      const double q = data(k, t, i) ? p : 1.0 - p;
      sum += std::log(std::max(q, kLogClampEps));
    }
    acc += sum;
  }
  CHECK(ms == acc / 2.0);

  // Lag one still has no free bins on the path: any rollout count agrees.
  CHECK(multistep_loglik(params, drive, data, t, 1, 1, 3u) ==
        multistep_loglik(params, drive, data, t, 1, 50, 4u));
}

TEST_CASE("decoupled network makes the multistep value lag and count free") {
  NetworkParams params = flat_net(2, 0.3);
  params.bias[1] = bias_for_rate(0.45);
  InputCurrentTensor drive(6, 2);
  // Rows constant in time so the target row is the same at any lag.
  SpikeTensor data = spikes_from_rows({{{1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}},
                                       {{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}}});
  const double base = multistep_loglik(params, drive, data, 1, 1, 1, 5u);
  CHECK(multistep_loglik(params, drive, data, 1, 2, 7, 6u) == base);
  CHECK(multistep_loglik(params, drive, data, 1, 4, 3, 7u) == base);
  CHECK(multistep_loglik(params, drive, data, 0, 3, 11, 8u) == base);

  // A decoupled hidden unit changes nothing either.
  NetworkParams with_hidden = flat_net(2, 0.3, 1, 1);
  with_hidden.bias[1] = bias_for_rate(0.37);
  NetworkParams alone = flat_net(1, 0.3);
  SpikeTensor narrow = data.visible_columns(1);
  InputCurrentTensor drive1(6, 1);
  CHECK(multistep_loglik(with_hidden, drive1, narrow, 1, 2, 5, 9u) ==
        multistep_loglik(alone, drive1, narrow, 1, 2, 5, 10u));
}

TEST_CASE("multistep estimate converges to the oracle conditional") {
  NetworkParams params = init_params(2, 2, 1, 19);
  params.weight(0, 1, 0) = 0.5;
  params.weight(1, 0, 0) = -0.4;
  for (std::size_t j = 0; j < 2; ++j) params.bias[j] = bias_for_rate(0.35);
  InputCurrentTensor drive(3, 2);
  SpikeTensor data = spikes_from_rows({{{1, 0}, {0, 1}, {1, 1}}});

  // Exact conditional of the final row given the first: sum the distribution
  // over the free middle row.
  ExactDistribution dist = enumerate_distribution(params, drive, 3);
  double joint = 0.0, prefix = 0.0;
  for (std::size_t o = 0; o < dist.table.size(); ++o) {
    bool match_prefix = true, match_target = true;
    for (std::size_t i = 0; i < 2; ++i) {
      if (ExactDistribution::bit(o, 0, 2, i) != data(0, 0, i)) match_prefix = false;
      if (ExactDistribution::bit(o, 2, 2, i) != data(0, 2, i)) match_target = false;
    }
    if (match_prefix) {
      prefix += dist.table[o];
      if (match_target) joint += dist.table[o];
    }
  }
  const double exact = joint / prefix;

  // Replicated estimates: the mean probability should cover the exact value.
  const int reps = 16;
  std::vector<double> w(reps);
  for (int r = 0; r < reps; ++r)
    w[r] = std::exp(multistep_loglik(params, drive, data, 0, 2, 3000, 1000u + r));
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  var /= (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean - exact) < 3.0 * se + 1e-12);
}

TEST_CASE("multistep validates its ranges") {
  NetworkParams params = flat_net(2, 0.3);
  InputCurrentTensor drive(5, 2);
  SpikeTensor data(2, 5, 2);
  CHECK_THROWS_AS(multistep_loglik(params, drive, data, 3, 2, 5, 1u), ValidationError);
  CHECK_THROWS_AS(multistep_loglik(params, drive, data, 5, 0, 5, 1u), ValidationError);
  CHECK_THROWS_AS(multistep_loglik(params, drive, data, 1, 1, 0, 1u), ValidationError);
  SpikeTensor wrong(2, 5, 3);
  CHECK_THROWS_AS(multistep_loglik(params, drive, wrong, 1, 1, 5, 1u), ValidationError);
}

TEST_CASE("evaluate model reproduces its own sample exactly") {
  NetworkParams teacher = init_params(3, 3, 1, 23);
  for (std::size_t j = 0; j < 3; ++j) teacher.bias[j] = bias_for_rate(0.2);
  InputCurrentTensor drive(100, 3);
  for (std::size_t t = 0; t < 100; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      drive(t, i) = 0.9 * std::sin(2.0 * 3.141592653589793 * t / 25.0 + i);

  EvalConfig cfg;
  cfg.seed = 7;
  cfg.multistep_lags = {0, 1, 2};
  cfg.multistep_t = 50;
  cfg.multistep_rollouts = 40;

  // Data generated on the exact noise stream the evaluation will redraw.
  SpikeTensor data = rollout(teacher, drive, 30, ClampSpec::free_run(),
                             derive_seed(7, 1)).spikes;
  StatReport report = evaluate_model(teacher, drive, data, cfg);

  REQUIRE(report.nc_model.neurons == 3);
  for (std::size_t e = 0; e < 9; ++e) {
    CHECK(report.nc_model.matrix[e] == report.nc_data.matrix[e]);
    CHECK(report.nc_model.defined[e] == report.nc_data.defined[e]);
  }
  CHECK(report.r2.defined);
  CHECK(report.r2.value == 1.0);

  CHECK(report.psth.defined_count() == 3);
  CHECK(report.psth.mean() > 0.7);
  CHECK(report.test_nll > 0.0);
  REQUIRE(report.multistep.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(report.multistep[s].lag == cfg.multistep_lags[s]);
    CHECK(report.multistep[s].loglik < 0.0);
    CHECK(std::isfinite(report.multistep[s].loglik));
  }

  // The whole report is a pure function of (params, stimulus, data, config).
  StatReport again = evaluate_model(teacher, drive, data, cfg);
  CHECK(report_json(again) == report_json(report));
  CHECK(report_csv(again) == report_csv(report));
}

TEST_CASE("report serialization carries undefined entries as nulls") {
  // Hand data with a silent third neuron.
  std::vector<std::vector<std::vector<int>>> rows(3);
  const int pat[3][10] = {{1, 0, 1, 1, 0, 0, 1, 0, 1, 0},
                          {0, 1, 1, 0, 0, 1, 0, 1, 0, 0},
                          {1, 1, 0, 0, 1, 0, 0, 0, 1, 1}};
  for (std::size_t k = 0; k < 3; ++k) {
    rows[k].resize(10);
    for (std::size_t t = 0; t < 10; ++t)
      rows[k][t] = {pat[k][t], pat[(k + 1) % 3][t], 0};
  }
  SpikeTensor data = spikes_from_rows(rows);

  NetworkParams model = flat_net(3, 0.3, 1);
  InputCurrentTensor drive(10, 3);
  EvalConfig cfg;
  cfg.seed = 3;
  cfg.model_trials = 4;
  StatReport report = evaluate_model(model, drive, data, cfg);

  CHECK(report.psth.defined[2] == 0);
  CHECK_FALSE(report.nc_data.is_defined(2, 0));
  CHECK(report.r2.excluded >= 4);

  const nlohmann::json parsed = nlohmann::json::parse(report_json(report));
  REQUIRE(parsed.contains("psth_corr"));
  CHECK(parsed["psth_corr"]["rho"].size() == 3);
  CHECK(parsed["psth_corr"]["rho"][2].is_null());
  CHECK(parsed["psth_corr"]["excluded"].get<int>() >= 1);
  CHECK(parsed["noise_correlation"]["data"][2][0].is_null());
  CHECK(parsed["multistep"].empty());

  const std::string csv = report_csv(report);
  // Header, 3 psth rows, 3 model pairs, 3 data pairs, r2, nll; no multistep.
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 1 + 3 + 3 + 3 + 1 + 1);
  CHECK(csv.rfind("metric,i,j,value,defined\n", 0) == 0);
  CHECK(csv.find("psth_corr,2,,,0\n") != std::string::npos);
  CHECK(csv.find("nc_r2,,,") != std::string::npos);
}
