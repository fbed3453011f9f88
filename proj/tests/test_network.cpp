#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rsnn/errors.hpp"
#include "rsnn/network.hpp"
#include "rsnn/rng.hpp"

using namespace rsnn;

namespace {

NetworkParams zero_net(std::size_t n, std::size_t depth) {
  NetworkParams p;
  p.n_total = n;
  p.n_visible = n;
  p.history_depth = depth;
  p.weights.assign(p.weight_count(), 0.0);
  p.bias.assign(n, 0.0);
  return p;
}

SpikeTensor random_reference(std::size_t k, std::size_t t, std::size_t n, std::uint64_t seed) {
  SpikeTensor s(k, t, n);
  Rng rng(seed);
  for (auto& z : s.values()) z = rng.uniform_open01() < 0.4 ? 1 : 0;
  return s;
}

}  // namespace

TEST_CASE("threshold-centered bias gives p = 1/2") {
  NetworkParams p = zero_net(3, 1);
  p.bias.assign(3, 0.4);
  std::vector<const std::uint8_t*> history{nullptr};
  PotentialRow row = membrane_potential(p, history, nullptr);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(row.membrane[j] == doctest::Approx(0.4));
    CHECK(row.normalized[j] == doctest::Approx(0.0));
    CHECK(logistic(row.normalized[j]) == doctest::Approx(0.5));
  }
}

TEST_CASE("silent zero-bias network sits at u = -1") {
  NetworkParams p = zero_net(2, 2);
  std::vector<const std::uint8_t*> history{nullptr, nullptr};
  PotentialRow row = membrane_potential(p, history, nullptr);
  CHECK(row.normalized[0] == doctest::Approx(-1.0));
  CHECK(logistic(-1.0) == doctest::Approx(0.26894142136999512));
}

TEST_CASE("single synapse cancels at threshold") {
  NetworkParams p = zero_net(2, 1);
  p.weight(1, 0, 0) = 0.4;  // delay slot 0 acts on the t-1 row
  std::uint8_t prev[2] = {1, 0};
  std::vector<const std::uint8_t*> history{prev};
  PotentialRow row = membrane_potential(p, history, nullptr);
  CHECK(row.membrane[1] == doctest::Approx(0.4));
  CHECK(row.normalized[1] == doctest::Approx(0.0));
  CHECK(row.normalized[0] == doctest::Approx(-1.0));
}

TEST_CASE("full clamp reproduces the reference bitwise") {
  NetworkParams p = init_params(4, 4, 2, 5);
  SpikeTensor ref = random_reference(3, 12, 4, 17);
  InputCurrentTensor drive(12, 4);
  RolloutRecord rec = rollout(p, drive, 3, ClampSpec::full(ref), 99u);
  CHECK(rec.spikes.values() == ref.values());
  for (std::uint8_t s : rec.sampled.values()) CHECK(s == 0);
}

TEST_CASE("probs equal the logistic of recorded potentials") {
  NetworkParams p = init_params(5, 5, 3, 8);
  InputCurrentTensor drive(20, 5);
  Rng rng(3);
  for (auto& v : drive.values()) v = 0.3 * rng.normal();
  RolloutRecord rec = rollout(p, drive, 4, ClampSpec::free_run(), 100u);
  for (std::size_t idx = 0; idx < rec.probs.values().size(); ++idx)
    CHECK(rec.probs.values()[idx] == logistic(rec.potentials.values()[idx]));
}

TEST_CASE("free sampling matches its Bernoulli rate") {
  const double target = 0.3;
  NetworkParams p = zero_net(1, 1);
  const double u = std::log(target / (1.0 - target));
  p.bias[0] = p.threshold * (1.0 + u);
  InputCurrentTensor drive(1, 1);
  const std::size_t trials = 100000;
  RolloutRecord rec = rollout(p, drive, trials, ClampSpec::free_run(), 1234u);
  CHECK(rec.probs(0, 0, 0) == doctest::Approx(target).epsilon(1e-12));
  const double freq =
      std::accumulate(rec.spikes.values().begin(), rec.spikes.values().end(), 0.0) /
      static_cast<double>(trials);
  const double band = 4.0 * std::sqrt(target * (1.0 - target) / static_cast<double>(trials));
  CHECK(std::abs(freq - target) < band);
}

TEST_CASE("clamp-until copies the prefix and samples the tail") {
  NetworkParams p = init_params(3, 3, 1, 2);
  p.bias.assign(3, 0.4);  // p = 1/2 keeps both branches exercised
  SpikeTensor ref = random_reference(2, 10, 3, 77);
  InputCurrentTensor drive(10, 3);
  RolloutRecord rec = rollout(p, drive, 2, ClampSpec::until(ref, 6), 5u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t t = 0; t < 10; ++t)
      for (std::size_t i = 0; i < 3; ++i) {
        if (t < 6) {
          CHECK(rec.spikes(k, t, i) == ref(k, t, i));
          CHECK(rec.sampled(k, t, i) == 0);
        } else {
          CHECK(rec.sampled(k, t, i) == 1);
        }
      }
}

TEST_CASE("visible clamp pins visible columns and samples hidden ones") {
  NetworkParams p = init_params(5, 3, 2, 4);
  SpikeTensor ref = random_reference(2, 8, 3, 21);
  InputCurrentTensor drive(8, 5);
  RolloutRecord rec = rollout(p, drive, 2, ClampSpec::visible(ref), 6u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t t = 0; t < 8; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rec.spikes(k, t, i) == ref(k, t, i));
        CHECK(rec.sampled(k, t, i) == 0);
      }
      for (std::size_t i = 3; i < 5; ++i) CHECK(rec.sampled(k, t, i) == 1);
    }
}

TEST_CASE("visible-until clamp pins the visible prefix only") {
  NetworkParams p = init_params(5, 3, 2, 4);
  SpikeTensor ref = random_reference(2, 8, 3, 22);
  InputCurrentTensor drive(8, 5);
  RolloutRecord rec = rollout(p, drive, 2, ClampSpec::visible_until(ref, 5), 6u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t t = 0; t < 8; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        if (t < 5) {
          CHECK(rec.spikes(k, t, i) == ref(k, t, i));
          CHECK(rec.sampled(k, t, i) == 0);
        } else {
          CHECK(rec.sampled(k, t, i) == 1);
        }
      }
      for (std::size_t i = 3; i < 5; ++i) CHECK(rec.sampled(k, t, i) == 1);
    }
}

TEST_CASE("dynamics are Markov in the recorded window") {
  NetworkParams p = init_params(3, 3, 2, 11);
  p.bias.assign(3, 0.35);
  const std::size_t t_short = 14;
  InputCurrentTensor drive_long(t_short + 10, 3);
  Rng rng(9);
  for (auto& v : drive_long.values()) v = 0.2 * rng.normal();
  InputCurrentTensor drive_short = drive_long.time_window(0, t_short);

  NoiseTensor noise_long = make_noise(1, t_short + 10, 3, 41);
  NoiseTensor noise_short(1, t_short, 3);
  for (std::size_t t = 0; t < t_short; ++t)
    for (std::size_t i = 0; i < 3; ++i) noise_short(0, t, i) = noise_long(0, t, i);

  RolloutRecord a = rollout(p, drive_short, 1, ClampSpec::free_run(), noise_short);
  RolloutRecord b = rollout(p, drive_long, 1, ClampSpec::free_run(), noise_long);
  for (std::size_t t = 0; t < t_short; ++t)
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.spikes(0, t, i) == b.spikes(0, t, i));
      CHECK(a.potentials(0, t, i) == b.potentials(0, t, i));
      CHECK(a.probs(0, t, i) == b.probs(0, t, i));
    }
}

TEST_CASE("init zeroes biases and hits the requested weight spread") {
  NetworkParams p = init_params(50, 50, 9, 123);
  for (double b : p.bias) CHECK(b == 0.0);
  CHECK(p.threshold == 0.4);
  CHECK(p.dampening == 0.3);

  const double target = 1.0 / std::sqrt(9.0 * 50.0);
  double sum = 0.0, sq = 0.0;
  for (double w : p.weights) {
    sum += w;
    sq += w * w;
  }
  const double count = static_cast<double>(p.weights.size());
  const double mean = sum / count;
  const double stddev = std::sqrt(sq / count - mean * mean);
  CHECK(std::abs(stddev - target) < 0.1 * target);

  // Rejection bound in units of the realized std.
  const double cut = 2.0 * target / kTruncNormal2Std;
  for (double w : p.weights) CHECK(std::abs(w) <= cut);

  NetworkParams q = init_params(50, 50, 9, 123);
  CHECK(q.weights == p.weights);
  NetworkParams r = init_params(50, 50, 9, 124);
  CHECK(r.weights != p.weights);
}

TEST_CASE("rollout validates its inputs") {
  NetworkParams p = init_params(3, 2, 1, 1);
  InputCurrentTensor drive(5, 3);
  SpikeTensor ref(2, 5, 3);

  CHECK_THROWS_AS(rollout(p, InputCurrentTensor(5, 2), 2, ClampSpec::free_run(), 1u),
                  ValidationError);
  CHECK_THROWS_AS(rollout(p, drive, 0, ClampSpec::free_run(), 1u), ValidationError);

  ClampSpec missing{ClampMode::kFullClamp, 0, nullptr};
  CHECK_THROWS_AS(rollout(p, drive, 2, missing, 1u), ValidationError);

  SpikeTensor wrong(2, 5, 2);
  CHECK_THROWS_AS(rollout(p, drive, 2, ClampSpec::full(wrong), 1u), ValidationError);
  // VisibleClamp wants n_visible columns, not n_total
  CHECK_THROWS_AS(rollout(p, drive, 2, ClampSpec::visible(ref), 1u), ValidationError);

  NoiseTensor noise(2, 5, 3);
  noise(0, 0, 0) = 1.0;
  CHECK_THROWS_AS(rollout(p, drive, 2, ClampSpec::free_run(), noise), ValidationError);

  NetworkParams bad = p;
  bad.threshold = 0.0;
  CHECK_THROWS_AS(rollout(bad, drive, 2, ClampSpec::free_run(), 1u), ValidationError);
}

TEST_CASE("summed visible coupling adds delay slots") {
  NetworkParams p = zero_net(3, 2);
  p.n_visible = 2;
  p.weight(0, 1, 0) = 0.25;
  p.weight(0, 1, 1) = -0.75;
  p.weight(1, 0, 1) = 0.5;
  p.weight(2, 0, 0) = 9.0;  // hidden row must not appear
  auto s = p.summed_visible_coupling();
  REQUIRE(s.size() == 4);
  CHECK(s[0 * 2 + 1] == doctest::Approx(-0.5));
  CHECK(s[1 * 2 + 0] == doctest::Approx(0.5));
  CHECK(s[0 * 2 + 0] == 0.0);
  CHECK(s[1 * 2 + 1] == 0.0);
}
