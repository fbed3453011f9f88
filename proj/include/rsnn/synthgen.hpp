#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsnn/metrics.hpp"
#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"
#include "rsnn/trainer.hpp"

namespace rsnn {

// Shared frozen drive: per-neuron independent standard normal convolved with
// an exponential kernel exp(-s/time_constant), rescaled so the stationary
// marginal std equals amplitude. Covers the visible population only; hidden
// units are driven by recurrence alone.
struct StimulusRecipe {
  std::size_t timesteps = 500;
  double amplitude = 0.5;
  double time_constant = 5.0;  // bins; must be positive
};

// Teacher construction: couplings from the standard init scaled by
// coupling_scale, then a bisection on a shared bias offset places the mean
// visible rate inside [rate_lo, rate_hi] (measured on probe_trials rollouts).
struct TeacherConfig {
  std::size_t n_total = 10;
  std::size_t n_visible = 10;
  std::size_t history_depth = 2;
  double coupling_scale = 1.0;
  double rate_lo = 0.05;
  double rate_hi = 0.3;
  std::size_t probe_trials = 100;
  std::size_t max_search_iters = 50;
  StimulusRecipe stimulus;
};

struct Teacher {
  NetworkParams params;
  InputCurrentTensor stimulus;  // [timesteps][n_visible]
  double mean_rate = 0.0;       // measured visible rate after calibration
  double bias_offset = 0.0;     // the calibrated shared bias
};

Teacher make_teacher(const TeacherConfig& cfg, std::uint64_t seed);

// Free rollouts of the teacher; only visible columns are exported, so hidden
// activity never reaches a student. The three splits use disjoint seed
// streams derived from `seed`.
DatasetSplit generate_dataset(const NetworkParams& teacher, const InputCurrentTensor& stimulus,
                              std::size_t k_train, std::size_t k_val, std::size_t k_test,
                              std::uint64_t seed);

// Delay-summed coupling restricted to the shared visible block, compared
// entry by entry. r2 = 1 - SS_res/SS_tot about the teacher-matrix mean; at
// most 1, undefined when the teacher block is constant.
struct ConnectivityReport {
  std::size_t neurons = 0;
  std::vector<double> teacher;   // [n][n] summed visible coupling
  std::vector<double> student;   // same shape
  std::vector<double> residual;  // student - teacher
  double r2 = 0.0;
  bool defined = false;
};

ConnectivityReport connectivity_r2(const NetworkParams& teacher, const NetworkParams& student);

// One student configuration. n_total = 0 means no hidden units (match the
// visible count); history_depth = 0 inherits the teacher's. init_seed = 0
// derives a per-student seed from the plan seed. init_from_teacher starts the
// student at the teacher parameters (architecture must match the teacher's).
struct StudentPlan {
  std::string name;
  std::size_t n_total = 0;
  std::size_t history_depth = 0;
  std::uint64_t init_seed = 0;
  bool init_from_teacher = false;
  TrainConfig train;
};

struct StudentOutcome {
  std::string name;
  std::string losses;    // the student's loss spec, parse_loss_spec format
  bool trained = false;  // false: training aborted or threw; see error
  std::string error;
  NetworkParams params;  // best checkpoint (or last state on abort)
  TrainResult result;
  ConnectivityReport connectivity;
  StatReport stats;  // test-split statistics; only valid when trained
};

struct ExperimentPlan {
  TeacherConfig teacher;
  std::size_t k_train = 200;
  std::size_t k_val = 40;
  std::size_t k_test = 200;
  std::vector<StudentPlan> students;
  EvalConfig eval;
  std::size_t threads = 1;  // students train concurrently up to this cap
  std::uint64_t seed = 1;

  void validate() const;
};

struct IdentificationReport {
  Teacher teacher;
  std::vector<StudentOutcome> students;
};

// Builds the teacher and dataset, then trains and evaluates every student.
// A student that fails records its error and leaves the others untouched.
IdentificationReport run_identification(const ExperimentPlan& plan);

// One row per student: name, loss spec, psth corr mean/sd over neurons,
// nc_r2, conn_r2, test_nll, error. Plot-ready summary of the report.
std::string comparison_csv(const IdentificationReport& report);

}  // namespace rsnn
