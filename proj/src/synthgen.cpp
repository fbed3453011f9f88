#include "rsnn/synthgen.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <thread>

#include "rsnn/errors.hpp"
#include "rsnn/rng.hpp"

namespace rsnn {

namespace {

// AR(1) form of the exponential convolution: y_t = a y_{t-1} + x_t with
// a = exp(-1/tau) has stationary std 1/sqrt(1-a^2), so the output is
// rescaled to make the marginal std equal the requested amplitude.
InputCurrentTensor make_stimulus(const StimulusRecipe& recipe, std::size_t n_visible,
                                 std::uint64_t seed) {
  InputCurrentTensor stim(recipe.timesteps, n_visible);
  const double a = std::exp(-1.0 / recipe.time_constant);
  const double gain = recipe.amplitude * std::sqrt(1.0 - a * a);
  Rng rng(seed);
  std::vector<double> state(n_visible, 0.0);
  for (std::size_t t = 0; t < recipe.timesteps; ++t) {
    for (std::size_t i = 0; i < n_visible; ++i) {
      state[i] = a * state[i] + rng.normal();
      stim(t, i) = gain * state[i];
    }
  }
  return stim;
}

double mean_visible_prob(const RolloutRecord& rec, std::size_t n_visible) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rec.trials(); ++k) {
    for (std::size_t t = 0; t < rec.timesteps(); ++t) {
      for (std::size_t i = 0; i < n_visible; ++i) acc += rec.probs(k, t, i);
    }
  }
  return acc / (static_cast<double>(rec.trials()) * static_cast<double>(rec.timesteps()) *
                static_cast<double>(n_visible));
}

void check_teacher_config(const TeacherConfig& cfg) {
  if (cfg.n_visible == 0 || cfg.n_visible > cfg.n_total) {
    throw ConfigError("teacher needs 1 <= n_visible <= n_total");
  }
  if (cfg.history_depth == 0) throw ConfigError("teacher history depth must be >= 1");
  if (!(cfg.rate_lo > 0.0 && cfg.rate_lo < cfg.rate_hi && cfg.rate_hi < 1.0)) {
    throw ConfigError("teacher rate band must satisfy 0 < lo < hi < 1");
  }
  if (!std::isfinite(cfg.coupling_scale)) throw ConfigError("coupling scale must be finite");
  if (cfg.probe_trials == 0) throw ConfigError("teacher probe trials must be >= 1");
  if (cfg.max_search_iters == 0) throw ConfigError("teacher search iterations must be >= 1");
  if (cfg.stimulus.timesteps == 0) throw ConfigError("stimulus needs at least one timestep");
  if (!(cfg.stimulus.time_constant > 0.0)) {
    throw ConfigError("stimulus time constant must be positive");
  }
  if (!(cfg.stimulus.amplitude >= 0.0) || !std::isfinite(cfg.stimulus.amplitude)) {
    throw ConfigError("stimulus amplitude must be finite and non-negative");
  }
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

Teacher make_teacher(const TeacherConfig& cfg, std::uint64_t seed) {
  check_teacher_config(cfg);

  Teacher teacher;
  teacher.params = init_params(cfg.n_total, cfg.n_visible, cfg.history_depth, derive_seed(seed, 1));
  for (double& w : teacher.params.weights) w *= cfg.coupling_scale;
  teacher.stimulus = make_stimulus(cfg.stimulus, cfg.n_visible, derive_seed(seed, 2));

  const InputCurrentTensor wide = widen_stimulus(teacher.params, teacher.stimulus);
  const std::uint64_t probe_seed = derive_seed(seed, 3);
  const auto rate_at = [&](double offset) {
    for (double& b : teacher.params.bias) b = offset;
    const RolloutRecord rec =
        rollout(teacher.params, wide, cfg.probe_trials, ClampSpec::free_run(), probe_seed);
    return mean_visible_prob(rec, cfg.n_visible);
  };

  // Bisection on a shared bias offset. The same probe noise is reused for
  // every evaluation so the measured rate is a fixed function of the offset.
  double lo = -8.0, hi = 8.0;
  const double target = 0.5 * (cfg.rate_lo + cfg.rate_hi);
  const double rate_at_lo = rate_at(lo);
  const double rate_at_hi = rate_at(hi);
  if (!(rate_at_lo <= target && target <= rate_at_hi)) {
    throw ConfigError("teacher rate search cannot bracket the target " + format_g(target) +
                      ": rate(" + format_g(lo) + ") = " + format_g(rate_at_lo) + ", rate(" +
                      format_g(hi) + ") = " + format_g(rate_at_hi));
  }
  double offset = 0.0, rate = 0.0;
  bool placed = false;
  for (std::size_t iter = 0; iter < cfg.max_search_iters; ++iter) {
    offset = 0.5 * (lo + hi);
    rate = rate_at(offset);
    if (rate >= cfg.rate_lo && rate <= cfg.rate_hi) {
      placed = true;
      break;
    }
    if (rate < target) {
      lo = offset;
    } else {
      hi = offset;
    }
  }
  if (!placed) {
    throw ConfigError("teacher rate search failed after " +
                      std::to_string(cfg.max_search_iters) + " iterations: offset " +
                      format_g(offset) + " gives rate " + format_g(rate) + ", band [" +
                      format_g(cfg.rate_lo) + ", " + format_g(cfg.rate_hi) + "]");
  }
  // rate_at already wrote the accepted offset into the biases.
  teacher.bias_offset = offset;
  teacher.mean_rate = rate;
  teacher.params.validate();
  return teacher;
}

DatasetSplit generate_dataset(const NetworkParams& teacher, const InputCurrentTensor& stimulus,
                              std::size_t k_train, std::size_t k_val, std::size_t k_test,
                              std::uint64_t seed) {
  teacher.validate();
  if (k_train == 0 || k_val == 0 || k_test == 0) {
    throw ValidationError("dataset split trial counts must all be >= 1");
  }
  const InputCurrentTensor wide = widen_stimulus(teacher, stimulus);
  const auto draw = [&](std::size_t trials, std::uint64_t s) {
    return rollout(teacher, wide, trials, ClampSpec::free_run(), s)
        .spikes.visible_columns(teacher.n_visible);
  };
  DatasetSplit out;
  out.train = draw(k_train, derive_seed(seed, 1));
  out.validation = draw(k_val, derive_seed(seed, 2));
  out.test = draw(k_test, derive_seed(seed, 3));
  out.stimulus = stimulus;
  out.validate();
  return out;
}

ConnectivityReport connectivity_r2(const NetworkParams& teacher, const NetworkParams& student) {
  if (teacher.n_visible != student.n_visible) {
    throw ValidationError("connectivity comparison needs matching visible populations");
  }
  ConnectivityReport rep;
  rep.neurons = teacher.n_visible;
  rep.teacher = teacher.summed_visible_coupling();
  rep.student = student.summed_visible_coupling();
  rep.residual.resize(rep.teacher.size());

  double mean = 0.0;
  for (double v : rep.teacher) mean += v;
  mean /= static_cast<double>(rep.teacher.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t e = 0; e < rep.teacher.size(); ++e) {
    rep.residual[e] = rep.student[e] - rep.teacher[e];
    ss_tot += (rep.teacher[e] - mean) * (rep.teacher[e] - mean);
    ss_res += rep.residual[e] * rep.residual[e];
  }
  if (ss_tot > 0.0) {
    rep.defined = true;
    rep.r2 = 1.0 - ss_res / ss_tot;
  }
  return rep;
}

void ExperimentPlan::validate() const {
  check_teacher_config(teacher);
  if (k_train == 0 || k_val == 0 || k_test == 0) {
    throw ConfigError("plan trial counts must all be >= 1");
  }
  if (threads == 0) throw ConfigError("plan thread cap must be >= 1");
  std::set<std::string> names;
  for (const StudentPlan& s : students) {
    if (s.name.empty()) throw ConfigError("every student needs a name");
    if (!names.insert(s.name).second) throw ConfigError("duplicate student name " + s.name);
    if (s.n_total != 0 && s.n_total < teacher.n_visible) {
      throw ConfigError("student " + s.name + " has fewer units than the visible population");
    }
  }
}

IdentificationReport run_identification(const ExperimentPlan& plan) {
  plan.validate();
  IdentificationReport rep;
  rep.teacher = make_teacher(plan.teacher, derive_seed(plan.seed, 1));
  const DatasetSplit data =
      generate_dataset(rep.teacher.params, rep.teacher.stimulus, plan.k_train, plan.k_val,
                       plan.k_test, derive_seed(plan.seed, 2));

  rep.students.resize(plan.students.size());
  const auto run_one = [&](std::size_t j) {
    const StudentPlan& sp = plan.students[j];
    StudentOutcome& out = rep.students[j];
    out.name = sp.name;
    out.losses = loss_spec_string(sp.train.loss);
    try {
      const std::size_t n_total = sp.n_total ? sp.n_total : plan.teacher.n_visible;
      const std::size_t depth = sp.history_depth ? sp.history_depth : plan.teacher.history_depth;
      NetworkParams init;
      if (sp.init_from_teacher) {
        if (n_total != plan.teacher.n_total || depth != plan.teacher.history_depth) {
          throw ConfigError("student " + sp.name +
                            " starts from the teacher but has a different architecture");
        }
        init = rep.teacher.params;
      } else {
        const std::uint64_t init_seed =
            sp.init_seed ? sp.init_seed : derive_seed(plan.seed, 100 + j);
        init = init_params(n_total, plan.teacher.n_visible, depth, init_seed);
      }
      out.result = train(init, data, sp.train);
      out.params = out.result.best;
      if (out.result.aborted) {
        out.error = out.result.abort_reason;
      } else {
        out.trained = true;
        out.stats = evaluate_model(out.params, data.stimulus, data.test, plan.eval);
      }
      out.connectivity = connectivity_r2(rep.teacher.params, out.params);
    } catch (const std::exception& err) {
      out.trained = false;
      out.error = err.what();
    }
  };

  const std::size_t workers = std::min(plan.threads, plan.students.size());
  if (workers <= 1) {
    for (std::size_t j = 0; j < plan.students.size(); ++j) run_one(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < plan.students.size();) run_one(j);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return rep;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string comparison_csv(const IdentificationReport& report) {
  std::string out = "student,losses,psth_corr_mean,psth_corr_sd,nc_r2,conn_r2,test_nll,error\n";
  for (const StudentOutcome& s : report.students) {
    out += csv_quote(s.name);
    out += ',';
    out += csv_quote(s.losses);
    out += ',';
    if (s.trained) {
      double mean = 0.0, sd = 0.0;
      std::size_t n_def = s.stats.psth.defined_count();
      if (n_def > 0) {
        for (std::size_t i = 0; i < s.stats.psth.rho.size(); ++i) {
          if (s.stats.psth.defined[i]) mean += s.stats.psth.rho[i];
        }
        mean /= static_cast<double>(n_def);
        for (std::size_t i = 0; i < s.stats.psth.rho.size(); ++i) {
          if (s.stats.psth.defined[i]) {
            sd += (s.stats.psth.rho[i] - mean) * (s.stats.psth.rho[i] - mean);
          }
        }
        sd = std::sqrt(sd / static_cast<double>(n_def));
        out += format_g(mean);
        out += ',';
        out += format_g(sd);
      } else {
        out += ',';
      }
      out += ',';
      if (s.stats.r2.defined) out += format_g(s.stats.r2.value);
    } else {
      out += ",,";
    }
    out += ',';
    if (s.connectivity.defined) out += format_g(s.connectivity.r2);
    out += ',';
    if (s.trained) out += format_g(s.stats.test_nll);
    out += ',';
    out += csv_quote(s.error);
    out += '\n';
  }
  return out;
}

}  // namespace rsnn
