#include "rsnn/cli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsnn/config.hpp"
#include "rsnn/errors.hpp"
#include "rsnn/io.hpp"
#include "rsnn/losses.hpp"
#include "rsnn/metrics.hpp"
#include "rsnn/network.hpp"
#include "rsnn/oracle_suite.hpp"
#include "rsnn/rng.hpp"
#include "rsnn/synthgen.hpp"
#include "rsnn/tensors.hpp"
#include "rsnn/trainer.hpp"

namespace rsnn {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& out_dir) {
  const fs::path dir = fs::absolute(fs::path(out_dir)).lexically_normal();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  return dir;
}

// Input paths are pinned to absolute form before being echoed into the
// manifest, so a rerun works from any working directory.
std::string need_path(Config& cfg, const std::string& key) {
  const std::string raw = cfg.need_str(key);
  const fs::path abs = fs::absolute(fs::path(raw)).lexically_normal();
  cfg.override_value(key, abs.string());
  return cfg.need_str(key);
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const Config& cfg, const std::vector<std::string>& artifacts,
                    const ordered_json& notes) {
  ordered_json j;
  j["version"] = "1";
  j["command"] = command;
  j["seed"] = seed;
  ordered_json conf = ordered_json::object();
  for (const auto& [key, value] : cfg.resolved()) conf[key] = value;
  j["config"] = conf;
  j["artifacts"] = artifacts;
  if (!notes.is_null()) j["notes"] = notes;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

// The teacher and stimulus sections are shared between synth and identify.
TeacherConfig read_teacher_config(Config& cfg) {
  TeacherConfig tc;
  tc.n_visible = cfg.need_size("teacher.n_visible");
  tc.n_total = tc.n_visible + cfg.get_size("teacher.n_hidden", 0);
  tc.history_depth = cfg.get_size("teacher.d_max", 2);
  tc.coupling_scale = cfg.get_double("teacher.coupling_scale", 1.0);
  tc.rate_lo = cfg.get_double("teacher.rate_lo", 0.05);
  tc.rate_hi = cfg.get_double("teacher.rate_hi", 0.3);
  tc.probe_trials = cfg.get_size("teacher.probe_trials", 100);
  tc.max_search_iters = cfg.get_size("teacher.search_iters", 50);
  tc.stimulus.timesteps = cfg.need_size("stimulus.timesteps");
  tc.stimulus.amplitude = cfg.get_double("stimulus.amplitude", 0.5);
  tc.stimulus.time_constant = cfg.get_double("stimulus.time_constant", 5.0);
  return tc;
}

TrainConfig read_train_config(Config& cfg, const std::string& prefix, const std::string& loss_key,
                              const std::string& t_clamp_key, std::uint64_t default_seed) {
  TrainConfig tc;
  tc.learning_rate = cfg.get_double(prefix + "learning_rate", tc.learning_rate);
  tc.batch_size = cfg.get_size(prefix + "batch_size", tc.batch_size);
  tc.max_epochs = cfg.get_size(prefix + "epochs", tc.max_epochs);
  tc.beta1 = cfg.get_double(prefix + "beta1", tc.beta1);
  tc.beta2 = cfg.get_double(prefix + "beta2", tc.beta2);
  tc.epsilon = cfg.get_double(prefix + "epsilon", tc.epsilon);
  tc.early_stop_patience = cfg.get_size(prefix + "patience", tc.early_stop_patience);
  tc.eval_cadence = cfg.get_size(prefix + "eval_cadence", tc.eval_cadence);
  tc.free_rollout_trials = cfg.get_size(prefix + "free_rollout_trials", tc.free_rollout_trials);
  tc.grad_clip_norm = cfg.get_double(prefix + "grad_clip", tc.grad_clip_norm);
  tc.clip_length = cfg.get_size(prefix + "clip_length", tc.clip_length);
  tc.clip_prefix = cfg.get_size(prefix + "clip_prefix", tc.clip_prefix);
  tc.seed = cfg.get_u64(prefix + "seed", default_seed);
  const std::size_t t_clamp = cfg.get_size(t_clamp_key, 0);
  tc.loss = parse_loss_spec(cfg.get_str(loss_key, "mle:1"), t_clamp);
  return tc;
}

bool swap_mle_for_elbo(LossSpec& spec) {
  bool swapped = false;
  for (LossTerm& term : spec.terms) {
    if (term.kind == LossKind::kMle) {
      term.kind = LossKind::kElbo;
      swapped = true;
    }
  }
  return swapped;
}

void apply_multistep(const std::string& text, EvalConfig& ec) {
  std::size_t t = 0, max_lag = 0, rollouts = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%zu,%zu,%zu%c", &t, &max_lag, &rollouts, &extra) != 3 ||
      rollouts == 0) {
    throw ConfigError("bad multistep spec '" + text + "'; expected t,max_lag,rollouts");
  }
  ec.multistep_t = t;
  ec.multistep_rollouts = rollouts;
  ec.multistep_lags.clear();
  for (std::size_t lag = 0; lag <= max_lag; ++lag) ec.multistep_lags.push_back(lag);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    if (end > pos) parts.push_back(text.substr(pos, end - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return parts;
}

int cmd_synth(Config& cfg, const fs::path& dir, std::ostream& out) {
  const TeacherConfig tc = read_teacher_config(cfg);
  const std::size_t k_train = cfg.need_size("data.k_train");
  const std::size_t k_val = cfg.get_size("data.k_val", 10);
  const std::size_t k_test = cfg.get_size("data.k_test", 10);
  const std::uint64_t seed = cfg.get_u64("run.seed", 1);
  cfg.check_all_used();

  const Teacher teacher = make_teacher(tc, derive_seed(seed, 1));
  const DatasetSplit data = generate_dataset(teacher.params, teacher.stimulus, k_train, k_val,
                                             k_test, derive_seed(seed, 2));

  write_params((dir / "teacher.rsnp").string(), teacher.params);
  write_input((dir / "stimulus.rsni").string(), teacher.stimulus);
  write_spikes((dir / "train.rsnz").string(), data.train);
  write_spikes((dir / "validation.rsnz").string(), data.validation);
  write_spikes((dir / "test.rsnz").string(), data.test);

  ordered_json notes;
  notes["teacher_mean_rate"] = teacher.mean_rate;
  notes["teacher_bias_offset"] = teacher.bias_offset;
  write_manifest(dir, "synth", seed, cfg,
                 {"teacher.rsnp", "stimulus.rsni", "train.rsnz", "validation.rsnz", "test.rsnz"},
                 notes);

  out << "teacher: " << tc.n_visible << " visible + " << (tc.n_total - tc.n_visible)
      << " hidden, mean rate " << fmt(teacher.mean_rate) << " (bias offset "
      << fmt(teacher.bias_offset) << ")\n";
  out << "wrote " << k_train << "/" << k_val << "/" << k_test
      << " train/validation/test trials to " << dir.string() << "\n";
  return 0;
}

int cmd_fit(Config& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
  const std::string train_path = need_path(cfg, "data.train");
  const std::string val_path = need_path(cfg, "data.validation");
  const std::string stim_path = need_path(cfg, "data.stimulus");
  const bool have_test = cfg.has("data.test");
  const std::string test_path = have_test ? need_path(cfg, "data.test") : std::string();

  const std::size_t n_hidden = cfg.get_size("model.n_hidden", 0);
  const std::size_t d_max = cfg.get_size("model.d_max", 2);
  const std::uint64_t init_seed = cfg.get_u64("model.init_seed", 0);
  TrainConfig tc = read_train_config(cfg, "train.", "loss.spec", "loss.t_clamp", 1);
  cfg.check_all_used();

  DatasetSplit data;
  data.train = read_spikes(train_path);
  data.validation = read_spikes(val_path);
  // Training never reads the test split; the validation tensor stands in
  // when no test file is configured.
  data.test = have_test ? read_spikes(test_path) : data.validation;
  data.stimulus = read_input(stim_path);
  data.validate();

  if (n_hidden > 0 && swap_mle_for_elbo(tc.loss)) {
    err << "note: mle term replaced by elbo (" << n_hidden << " hidden units)\n";
  }

  const std::size_t n_visible = data.train.neurons();
  const NetworkParams init = init_params(n_visible + n_hidden, n_visible, d_max,
                                         init_seed != 0 ? init_seed : derive_seed(tc.seed, 900));
  const TrainResult result = train(init, data, tc);

  write_params((dir / "best.rsnp").string(), result.best);
  write_params((dir / "last.rsnp").string(), result.last);
  write_text(dir / "curves.csv", curves_csv(result.log));

  ordered_json summary;
  summary["loss"] = loss_spec_string(tc.loss);
  summary["epochs_run"] = result.log.size();
  summary["best_epoch"] = result.best_epoch;
  if (std::isfinite(result.best_validation)) summary["best_validation"] = result.best_validation;
  summary["aborted"] = result.aborted;
  if (result.aborted) summary["abort_reason"] = result.abort_reason;
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  write_manifest(dir, "fit", tc.seed, cfg,
                 {"best.rsnp", "last.rsnp", "curves.csv", "summary.json"}, {});

  if (result.aborted) {
    err << "training aborted: " << result.abort_reason << "\n";
    return 4;
  }
  out << "trained " << result.log.size() << " epochs; best validation "
      << fmt(result.best_validation) << " at epoch " << result.best_epoch << "\n";
  return 0;
}

int cmd_eval(Config& cfg, const fs::path& dir, std::ostream& out) {
  const std::string ckpt_path = need_path(cfg, "eval.checkpoint");
  const std::string data_path = need_path(cfg, "eval.data");
  const std::string stim_path = need_path(cfg, "eval.stimulus");
  EvalConfig ec;
  ec.model_trials = cfg.get_size("eval.trials", 0);
  ec.seed = cfg.get_u64("eval.seed", 1);
  const std::string multistep = cfg.get_str("eval.multistep", "");
  if (!multistep.empty()) apply_multistep(multistep, ec);
  cfg.check_all_used();

  const NetworkParams params = read_params(ckpt_path);
  const SpikeTensor data = read_spikes(data_path);
  const InputCurrentTensor stimulus = read_input(stim_path);
  const StatReport report = evaluate_model(params, stimulus, data, ec);

  write_text(dir / "report.json", report_json(report));
  write_text(dir / "report.csv", report_csv(report));
  write_manifest(dir, "eval", ec.seed, cfg, {"report.json", "report.csv"}, {});

  out << "psth corr " << fmt(report.psth.mean());
  if (report.r2.defined) out << ", nc r2 " << fmt(report.r2.value);
  out << ", test nll " << fmt(report.test_nll) << "\n";
  return 0;
}

int cmd_identify(Config& cfg, const fs::path& dir, std::ostream& out) {
  ExperimentPlan plan;
  plan.teacher = read_teacher_config(cfg);
  plan.k_train = cfg.get_size("data.k_train", 200);
  plan.k_val = cfg.get_size("data.k_val", 40);
  plan.k_test = cfg.get_size("data.k_test", 200);
  plan.seed = cfg.get_u64("plan.seed", 1);
  plan.threads = cfg.get_size("plan.threads", 1);
  plan.eval.model_trials = cfg.get_size("eval.trials", 0);
  plan.eval.seed = cfg.get_u64("eval.seed", 1);
  const std::string multistep = cfg.get_str("eval.multistep", "");
  if (!multistep.empty()) apply_multistep(multistep, plan.eval);

  // Student order decides the derived per-student seeds. The manifest's
  // config snapshot is sorted by key, so the file order is pinned through an
  // explicit key that reruns read back.
  std::vector<std::string> names = cfg.section_names("student.");
  std::string joined;
  for (std::size_t i = 0; i < names.size(); ++i) joined += (i ? "," : "") + names[i];
  names = split_commas(cfg.get_str("plan.student_order", joined));
  if (names.empty()) throw ConfigError("plan lists no [student.NAME] sections");

  for (std::size_t j = 0; j < names.size(); ++j) {
    StudentPlan sp;
    sp.name = names[j];
    const std::string sk = "student." + sp.name + ".";
    const std::size_t s_hidden = cfg.get_size(sk + "n_hidden", 0);
    sp.n_total = s_hidden == 0 ? 0 : plan.teacher.n_visible + s_hidden;
    sp.history_depth = cfg.get_size(sk + "d_max", 0);
    sp.init_seed = cfg.get_u64(sk + "init_seed", 0);
    sp.init_from_teacher = cfg.get_bool(sk + "init_from_teacher", false);
    const std::string tk = "train." + sp.name + ".";
    sp.train =
        read_train_config(cfg, tk, tk + "loss", tk + "t_clamp", derive_seed(plan.seed, 200 + j));
    plan.students.push_back(sp);
  }
  cfg.check_all_used();

  const IdentificationReport report = run_identification(plan);

  std::vector<std::string> artifacts;
  write_params((dir / "teacher.rsnp").string(), report.teacher.params);
  artifacts.push_back("teacher.rsnp");
  for (const StudentOutcome& s : report.students) {
    if (!s.result.log.empty()) {
      write_text(dir / (s.name + "_curves.csv"), curves_csv(s.result.log));
      artifacts.push_back(s.name + "_curves.csv");
    }
    if (s.trained) {
      write_params((dir / (s.name + ".rsnp")).string(), s.params);
      artifacts.push_back(s.name + ".rsnp");
      write_text(dir / (s.name + "_report.json"), report_json(s.stats));
      artifacts.push_back(s.name + "_report.json");
    }
  }
  write_text(dir / "comparison.csv", comparison_csv(report));
  artifacts.push_back("comparison.csv");

  ordered_json notes;
  notes["teacher_mean_rate"] = report.teacher.mean_rate;
  notes["teacher_bias_offset"] = report.teacher.bias_offset;
  write_manifest(dir, "identify", plan.seed, cfg, artifacts, notes);

  for (const StudentOutcome& s : report.students) {
    out << s.name << ": ";
    if (!s.trained) {
      out << "failed (" << s.error << ")";
    } else {
      out << "nc r2 " << (s.stats.r2.defined ? fmt(s.stats.r2.value) : "undefined") << ", conn r2 "
          << (s.connectivity.defined ? fmt(s.connectivity.r2) : "undefined");
    }
    out << "\n";
  }
  return 0;
}

int cmd_oracle_check(Config& cfg, const fs::path& dir, std::ostream& out) {
  OracleSuiteConfig oc;
  oc.n_visible = cfg.get_size("oracle.n_visible", oc.n_visible);
  oc.n_hidden = cfg.get_size("oracle.n_hidden", oc.n_hidden);
  oc.timesteps = cfg.get_size("oracle.timesteps", oc.timesteps);
  oc.history_depth = cfg.get_size("oracle.d_max", oc.history_depth);
  oc.tv_samples = cfg.get_size("oracle.tv_samples", oc.tv_samples);
  oc.elbo_pairs = cfg.get_size("oracle.elbo_pairs", oc.elbo_pairs);
  oc.elbo_samples = cfg.get_size("oracle.elbo_samples", oc.elbo_samples);
  oc.stat_rollouts = cfg.get_size("oracle.stat_rollouts", oc.stat_rollouts);
  oc.seed = cfg.get_u64("oracle.seed", oc.seed);
  oc.tv_tolerance = cfg.get_double("oracle.tv_tolerance", oc.tv_tolerance);
  oc.corrupt_sampler = cfg.get_bool("oracle.corrupt", false);
  cfg.check_all_used();

  const std::vector<PropertyResult> results = run_oracle_suite(oc);
  const std::string text = suite_text(results);
  write_text(dir / "oracle_report.txt", text);
  write_manifest(dir, "oracle-check", oc.seed, cfg, {"oracle_report.txt"}, {});

  out << text;
  for (const PropertyResult& r : results) {
    if (!r.pass) return 5;
  }
  return 0;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out_override, std::ostream& out,
              std::ostream& err) {
  const fs::path mpath = fs::absolute(fs::path(manifest_path)).lexically_normal();
  std::ifstream in(mpath, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + mpath.string() + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("manifest '" + mpath.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.contains("command") || !j["command"].is_string() || !j.contains("config") ||
      !j["config"].is_object()) {
    throw ConfigError("manifest '" + mpath.string() + "' lacks a command/config pair");
  }
  const std::string command = j["command"].get<std::string>();
  std::map<std::string, std::string> entries;
  for (const auto& [key, value] : j["config"].items()) {
    if (!value.is_string()) {
      throw ConfigError("manifest config value for '" + key + "' is not a string");
    }
    entries[key] = value.get<std::string>();
  }
  Config cfg = Config::from_map(entries);
  const fs::path dir =
      prepare_out_dir(out_override.empty() ? mpath.parent_path().string() : out_override);
  if (command == "synth") return cmd_synth(cfg, dir, out);
  if (command == "fit") return cmd_fit(cfg, dir, out, err);
  if (command == "eval") return cmd_eval(cfg, dir, out);
  if (command == "identify") return cmd_identify(cfg, dir, out);
  if (command == "oracle-check") return cmd_oracle_check(cfg, dir, out);
  throw ConfigError("manifest names unknown command '" + command + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stochastic recurrent spiking network toolkit"};
  app.name("rsnn");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string loss_override, multistep, checkpoint, data_path, stim_path;
  std::string manifest_path, rerun_out;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, threads = 0, eval_trials = 0;
  bool corrupt = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a teacher network and dataset");
  synth->add_option("--config", config_path, "key = value config file")->required();
  synth->add_option("--out", out_dir, "output directory");
  CLI::Option* synth_seed = synth->add_option("--seed", seed, "override run.seed");

  CLI::App* fit = app.add_subcommand("fit", "train a model on a dataset");
  fit->add_option("--config", config_path, "key = value config file")->required();
  fit->add_option("--out", out_dir, "output directory");
  CLI::Option* fit_loss =
      fit->add_option("--loss", loss_override, "loss spec, e.g. mle:0.2,psth:0.1,nc_mse:0.7");
  CLI::Option* fit_epochs = fit->add_option("--epochs", epochs, "override train.epochs");
  CLI::Option* fit_seed = fit->add_option("--seed", seed, "override train.seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint against spike data");
  eval->add_option("--checkpoint", checkpoint, "RSNP parameter file")->required();
  eval->add_option("--data", data_path, "RSNZ spike file")->required();
  eval->add_option("--stimulus", stim_path, "RSNI drive file")->required();
  eval->add_option("--out", out_dir, "output directory");
  CLI::Option* eval_trials_opt =
      eval->add_option("--eval-trials", eval_trials, "free-rollout trials (default: match data)");
  CLI::Option* eval_ms =
      eval->add_option("--multistep", multistep, "closed-loop curve settings t,max_lag,rollouts");
  CLI::Option* eval_seed = eval->add_option("--seed", seed, "rollout seed");

  CLI::App* identify = app.add_subcommand("identify", "teacher-student identification experiment");
  identify->add_option("--config", config_path, "experiment plan file")->required();
  identify->add_option("--out", out_dir, "output directory");
  CLI::Option* id_seed = identify->add_option("--seed", seed, "override plan.seed");
  CLI::Option* id_threads =
      identify->add_option("--threads", threads, "cap concurrent student training");

  CLI::App* oracle = app.add_subcommand("oracle-check", "exact-enumeration property checks");
  oracle->add_option("--config", config_path, "optional size/tolerance overrides");
  oracle->add_option("--out", out_dir, "output directory");
  CLI::Option* oracle_seed = oracle->add_option("--seed", seed, "override oracle.seed");
  oracle->add_flag("--corrupt", corrupt, "corrupt the sampler; the TV check must then fail");

  CLI::App* rerun = app.add_subcommand("rerun", "replay a command from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json of a previous run")->required();
  rerun->add_option("--out", rerun_out, "rebuild here instead of the manifest's directory");

  try {
    std::vector<const char*> argv;
    argv.push_back("rsnn");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (rerun->parsed()) return cmd_rerun(manifest_path, rerun_out, out, err);
    const fs::path dir = prepare_out_dir(out_dir);
    if (synth->parsed()) {
      Config cfg = Config::parse_file(config_path);
      if (synth_seed->count() > 0) cfg.override_value("run.seed", std::to_string(seed));
      return cmd_synth(cfg, dir, out);
    }
    if (fit->parsed()) {
      Config cfg = Config::parse_file(config_path);
      if (fit_loss->count() > 0) cfg.override_value("loss.spec", loss_override);
      if (fit_epochs->count() > 0) cfg.override_value("train.epochs", std::to_string(epochs));
      if (fit_seed->count() > 0) cfg.override_value("train.seed", std::to_string(seed));
      return cmd_fit(cfg, dir, out, err);
    }
    if (eval->parsed()) {
      std::map<std::string, std::string> m;
      m["eval.checkpoint"] = checkpoint;
      m["eval.data"] = data_path;
      m["eval.stimulus"] = stim_path;
      if (eval_trials_opt->count() > 0) m["eval.trials"] = std::to_string(eval_trials);
      if (eval_ms->count() > 0) m["eval.multistep"] = multistep;
      if (eval_seed->count() > 0) m["eval.seed"] = std::to_string(seed);
      Config cfg = Config::from_map(m);
      return cmd_eval(cfg, dir, out);
    }
    if (identify->parsed()) {
      Config cfg = Config::parse_file(config_path);
      if (id_seed->count() > 0) cfg.override_value("plan.seed", std::to_string(seed));
      if (id_threads->count() > 0) cfg.override_value("plan.threads", std::to_string(threads));
      return cmd_identify(cfg, dir, out);
    }
    if (oracle->parsed()) {
      Config cfg = config_path.empty() ? Config::parse_text("", "<defaults>")
                                       : Config::parse_file(config_path);
      if (oracle_seed->count() > 0) cfg.override_value("oracle.seed", std::to_string(seed));
      if (corrupt) cfg.override_value("oracle.corrupt", "true");
      return cmd_oracle_check(cfg, dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  }
  err << "error: no command selected\n";
  return 2;
}

}  // namespace rsnn
