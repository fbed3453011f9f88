#include <doctest.h>

#include <cmath>
#include <limits>

#include "rsnn/errors.hpp"
#include "rsnn/grad.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/network.hpp"
#include "rsnn/rng.hpp"

using namespace rsnn;

namespace {

NetworkParams small_net(std::size_t n, std::size_t depth, std::uint64_t seed, double spread,
                        double bias_center) {
  NetworkParams p = init_params(n, n, depth, seed);
  Rng rng(seed * 31 + 7);
  for (auto& w : p.weights) w = spread * rng.normal();
  for (auto& b : p.bias) b = bias_center + 0.1 * rng.normal();
  return p;
}

SpikeTensor sample_data(const NetworkParams& p, const InputCurrentTensor& stim,
                        std::size_t trials, std::uint64_t seed) {
  return rollout(p, stim, trials, ClampSpec::free_run(), seed).spikes;
}

}  // namespace

TEST_CASE("pseudo-derivative triangle") {
  CHECK(pseudo_derivative(0.0, 0.3) == 0.3);
  CHECK(pseudo_derivative(1.0, 0.3) == 0.0);
  CHECK(pseudo_derivative(-1.0, 0.3) == 0.0);
  CHECK(pseudo_derivative(0.5, 0.3) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(pseudo_derivative(-0.5, 0.3) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(pseudo_derivative(2.7, 0.3) == 0.0);
  CHECK(pseudo_derivative(0.25, 0.0) == 0.0);
}

TEST_CASE("clamped likelihood gradient matches central differences") {
  const std::size_t n = 4, timesteps = 20, depth = 3, trials = 3;
  NetworkParams p = small_net(n, depth, 11, 0.4, 0.35);
  InputCurrentTensor stim(timesteps, n);
  Rng rng(2);
  for (auto& v : stim.values()) v = 0.2 * rng.normal();
  SpikeTensor data = sample_data(p, stim, trials, 555);

  Tape tape(p, rollout(p, stim, trials, ClampSpec::full(data), 1u));
  const double value = loss_mle(tape.record(), data, &tape);
  CHECK(value > 0.0);
  Gradients grads = backward(tape);

  auto probe = [&](const NetworkParams& q) {
    RolloutRecord rec = rollout(q, stim, trials, ClampSpec::full(data), 1u);
    return LossProbe{loss_mle(rec, data), spike_fingerprint(rec.spikes)};
  };
  FdReport report = finite_difference_check(probe, p, grads, 1e-5);
  CHECK(report.crossings == 0);  // nothing is sampled under full clamp
  CHECK(report.compared == p.weight_count() + p.n_total);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("zero dampening cuts every spike-mediated path") {
  const std::size_t n = 3, timesteps = 12, trials = 4;
  NetworkParams p = small_net(n, 2, 21, 0.5, 0.4);
  p.dampening = 0.0;
  InputCurrentTensor stim(timesteps, n);
  RolloutRecord rec = rollout(p, stim, trials, ClampSpec::free_run(), 77u);

  // Seed only spike adjoints: with gamma = 0 nothing may reach the parameters.
  Tape tape(p, std::move(rec));
  for (std::size_t k = 0; k < trials; ++k)
    for (std::size_t t = 0; t < timesteps; ++t)
      for (std::size_t i = 0; i < n; ++i) tape.add_spike_seed(k, t, i, 0.3 + 0.1 * i);
  Gradients cut = backward(tape);
  for (double g : cut.weights) CHECK(g == 0.0);
  for (double g : cut.bias) CHECK(g == 0.0);

  // Same seeds with a positive dampening must reach them.
  NetworkParams q = p;
  q.dampening = 0.3;
  Tape tape2(q, rollout(q, stim, trials, ClampSpec::free_run(), 77u));
  for (std::size_t k = 0; k < trials; ++k)
    for (std::size_t t = 0; t < timesteps; ++t)
      for (std::size_t i = 0; i < n; ++i) tape2.add_spike_seed(k, t, i, 0.3 + 0.1 * i);
  Gradients flow = backward(tape2);
  CHECK(flow.max_abs() > 0.0);
}

TEST_CASE("two-step scalar network matches the hand-applied chain rule") {
  NetworkParams p;
  p.n_total = p.n_visible = 1;
  p.history_depth = 1;
  p.weights = {0.6};
  p.bias = {0.45};
  InputCurrentTensor stim(2, 1);
  stim(0, 0) = 0.0;
  stim(1, 0) = -0.05;

  NoiseTensor noise(1, 2, 1);
  noise(0, 0, 0) = 0.3;  // below sigma(u0): z0 = 1
  noise(0, 1, 0) = 0.9;
  RolloutRecord rec = rollout(p, stim, 1, ClampSpec::free_run(), noise);
  REQUIRE(rec.spikes(0, 0, 0) == 1);

  const double thr = p.threshold;
  const double u0 = rec.potentials(0, 0, 0);
  CHECK(u0 == doctest::Approx((0.45 - 0.4) / 0.4).epsilon(1e-15));

  const double s0 = 0.7, s1 = -0.3, q0 = 0.25;
  Tape tape(p, std::move(rec));
  tape.add_potential_seed(0, 0, 0, s0);
  tape.add_potential_seed(0, 1, 0, s1);
  tape.add_spike_seed(0, 0, 0, q0);
  Gradients g = backward(tape);

  // Reverse pass by hand: gv1 = s1/thr feeds b and w (z0 = 1) and sends
  // w*gv1 into z0; z0's total adjoint picks up the pseudo-derivative at u0.
  const double gv1 = s1 / thr;
  const double zadj0 = q0 + p.weights[0] * gv1;
  const double gu0 = s0 + zadj0 * pseudo_derivative(u0, p.dampening);
  const double want_db = gv1 + gu0 / thr;
  const double want_dw = gv1 * 1.0;
  CHECK(std::abs(g.bias[0] - want_db) < 1e-12);
  CHECK(std::abs(g.weights[0] - want_dw) < 1e-12);
}

TEST_CASE("backward is linear in the seeds") {
  const std::size_t n = 3, timesteps = 10, trials = 5;
  NetworkParams p = small_net(n, 2, 33, 0.4, 0.38);
  InputCurrentTensor stim(timesteps, n);
  SpikeTensor data = sample_data(p, stim, trials, 99);
  DataStatistics stats = DataStatistics::compute(data);

  NoiseTensor noise = make_noise(trials, timesteps, n, 7);
  auto fresh_tape = [&]() { return Tape(p, rollout(p, stim, trials, ClampSpec::free_run(), noise)); };

  Tape t1 = fresh_tape();
  loss_psth(t1.record(), stats, &t1);
  Gradients g1 = backward(t1);

  Tape t2 = fresh_tape();
  loss_nc_ce(t2.record(), stats, &t2);
  Gradients g2 = backward(t2);

  const double a = 0.3, b = 1.7;
  Tape t3 = fresh_tape();
  loss_psth(t3.record(), stats, &t3, a);
  loss_nc_ce(t3.record(), stats, &t3, b);
  Gradients g3 = backward(t3);

  Gradients combo = Gradients::zeros_like(p);
  combo.add_scaled(g1, a);
  combo.add_scaled(g2, b);
  for (std::size_t i = 0; i < combo.weights.size(); ++i)
    CHECK(std::abs(g3.weights[i] - combo.weights[i]) < 1e-12);
  for (std::size_t i = 0; i < combo.bias.size(); ++i)
    CHECK(std::abs(g3.bias[i] - combo.bias[i]) < 1e-12);
}

TEST_CASE("gradients are bitwise deterministic") {
  const std::size_t n = 4, timesteps = 15, trials = 6;
  NetworkParams p = small_net(n, 3, 51, 0.3, 0.36);
  InputCurrentTensor stim(timesteps, n);
  SpikeTensor data = sample_data(p, stim, trials, 13);
  DataStatistics stats = DataStatistics::compute(data);

  auto run = [&]() {
    Tape tape(p, rollout(p, stim, trials, ClampSpec::free_run(), 400u));
    loss_psth(tape.record(), stats, &tape);
    loss_nc_mse(tape.record(), stats, &tape, 0.7);
    return backward(tape);
  };
  Gradients g1 = run();
  Gradients g2 = run();
  CHECK(g1.weights == g2.weights);
  CHECK(g1.bias == g2.bias);
}

TEST_CASE("free-rollout statistic gradient matches differences when uncoupled") {
  // With zero coupling no gradient path crosses a sampled spike, so the
  // straight-through estimator coincides with the true fixed-noise gradient.
  const std::size_t n = 3, timesteps = 8, trials = 20;
  NetworkParams p;
  p.n_total = p.n_visible = n;
  p.history_depth = 1;
  p.weights.assign(n * n, 0.0);
  p.bias = {0.33, 0.41, 0.38};
  InputCurrentTensor stim(timesteps, n);
  Rng rng(6);
  for (auto& v : stim.values()) v = 0.1 * rng.normal();

  SpikeTensor data = sample_data(p, stim, 50, 21);
  DataStatistics stats = DataStatistics::compute(data);
  NoiseTensor noise = make_noise(trials, timesteps, n, 12);

  Tape tape(p, rollout(p, stim, trials, ClampSpec::free_run(), noise));
  loss_psth(tape.record(), stats, &tape);
  Gradients grads = backward(tape);

  auto probe = [&](const NetworkParams& q) {
    RolloutRecord rec = rollout(q, stim, trials, ClampSpec::free_run(), noise);
    const std::uint64_t fp = spike_fingerprint(rec.spikes);
    return LossProbe{loss_psth(rec, stats), fp};
  };
  // Check the bias block only: weight entries sit exactly at w = 0 where the
  // loss is flat by construction and relative error is meaningless.
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < n; ++i) subset.push_back(p.weight_count() + i);
  FdReport report = finite_difference_check(probe, p, grads, 1e-6, subset);
  CHECK(report.compared > 0);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("finite differences flag sampled-spike flips at coarse steps") {
  const std::size_t n = 2, timesteps = 10, trials = 8;
  NetworkParams p = small_net(n, 1, 61, 0.6, 0.4);
  InputCurrentTensor stim(timesteps, n);
  SpikeTensor data = sample_data(p, stim, 30, 3);
  DataStatistics stats = DataStatistics::compute(data);
  NoiseTensor noise = make_noise(trials, timesteps, n, 8);

  Tape tape(p, rollout(p, stim, trials, ClampSpec::free_run(), noise));
  loss_psth(tape.record(), stats, &tape);
  Gradients grads = backward(tape);

  auto probe = [&](const NetworkParams& q) {
    RolloutRecord rec = rollout(q, stim, trials, ClampSpec::free_run(), noise);
    return LossProbe{loss_psth(rec, stats), spike_fingerprint(rec.spikes)};
  };
  FdReport coarse = finite_difference_check(probe, p, grads, 0.5);
  CHECK(coarse.crossings > 0);
}

TEST_CASE("finite-difference checker rejects a non-positive step") {
  NetworkParams p = small_net(2, 1, 5, 0.2, 0.4);
  Gradients g = Gradients::zeros_like(p);
  auto probe = [](const NetworkParams&) { return LossProbe{0.0, 0}; };
  CHECK_THROWS_AS(finite_difference_check(probe, p, g, 0.0), ValidationError);
  CHECK_THROWS_AS(finite_difference_check(probe, p, g, -1e-5), ValidationError);
}

TEST_CASE("backward rejects non-finite adjoints") {
  NetworkParams p = small_net(2, 1, 9, 0.3, 0.4);
  InputCurrentTensor stim(4, 2);
  Tape tape(p, rollout(p, stim, 1, ClampSpec::free_run(), 2u));
  tape.add_potential_seed(0, 1, 0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(backward(tape), NumericalError);
}
