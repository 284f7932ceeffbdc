#include "handover/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace handover;

int cmd_gen_data(const harness::FullConfig& cfg, std::uint64_t seed,
                 const std::string& out) {
  const auto ds = scenegen::generate_dataset(cfg.dataset, seed, out);
  std::printf("wrote %zu samples to %s\n", ds.samples.size(), out.c_str());
  return 0;
}

int cmd_train(harness::FullConfig cfg, const std::string& data, const std::string& out,
              std::uint64_t seed, int epochs, int held_out) {
  const auto ds = scenegen::read_dataset(data);
  cfg.train.seed = seed;
  if (epochs > 0) cfg.train.epochs = epochs;
  if (held_out >= 0) cfg.train.held_out_subject = held_out;
  const auto [params, history] = net::train(ds, cfg.net, cfg.train);
  for (std::size_t e = 0; e < history.loss.size(); ++e)
    std::printf("epoch %zu loss %.4f acc %.3f\n", e, history.loss[e],
                history.accuracy[e]);
  net::save_checkpoint(out, cfg.net, params);
  std::printf("saved checkpoint %s\n", out.c_str());
  return 0;
}

int cmd_eval(const std::string& model, const std::string& data, int subject,
             const std::string& out_csv) {
  const auto [cfg, params] = net::load_checkpoint(model);
  const auto ds = scenegen::read_dataset(data);
  const auto samples = net::subject_samples(ds, subject);
  const auto res = net::evaluate(params, cfg, samples);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "accuracy,%.6f\n", res.accuracy);
  std::string text = buf;
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      text += std::to_string(res.confusion(r, c));
      text += c + 1 < 7 ? "," : "\n";
    }
  }
  std::fputs(text.c_str(), stdout);
  if (!out_csv.empty()) {
    std::ofstream f(out_csv, std::ios::binary);
    f << text;
  }
  return 0;
}

int cmd_run_trial(const harness::FullConfig& cfg, const std::string& model,
                  const std::string& policy, const std::string& profile,
                  std::uint64_t seed, const std::string& out, bool frames) {
  const auto [net_cfg, params] = net::load_checkpoint(model);
  const auto params_f = params.cast<float>();
  harness::TrialSetup setup;
  const auto pol = task::policy_from_string(policy);
  if (!pol) throw BadK("unknown policy: " + policy);
  setup.policy = *pol;
  setup.profile = cfg.profile_by_name(profile);
  setup.seed = seed;
  setup.subject_id = 1000 + static_cast<int>(seed % 1000);
  std::vector<task::Event> events;
  std::string frame_log;
  const auto record = harness::run_trial(setup, params_f, net_cfg, cfg.sim, &events,
                                         frames ? &frame_log : nullptr);
  std::printf(
      "policy=%s profile=%s blocks=%d grasp=%d/%d plan=%d/%d contacts=%d duration=%.2fs\n",
      record.policy.c_str(), record.profile.c_str(), record.blocks_placed,
      record.grasp_successes, record.grasp_attempts, record.planning_successes,
      record.planning_attempts, record.finger_contacts, record.trial_duration);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    harness::write_events_csv(out + "/events.csv", events);
    std::ofstream f(out + "/metrics.csv", std::ios::binary);
    f << harness::metrics_csv_text({record});
    if (frames) {
      std::ofstream fl(out + "/frames.csv", std::ios::binary);
      fl << "t,class,confidence,still\n" << frame_log;
    }
  }
  return 0;
}

int cmd_experiment(const harness::FullConfig& cfg, const std::string& model, int trials,
                   std::uint64_t seed, const std::string& out, int threads, bool study) {
  const auto [net_cfg, params] = net::load_checkpoint(model);
  const auto params_f = params.cast<float>();
  harness::ExperimentCfg ecfg = cfg.experiment;
  ecfg.sim = cfg.sim;
  if (trials > 0) ecfg.trials_per_cell = trials;
  ecfg.seed = seed;
  ecfg.out_dir = out;
  if (threads >= 0) ecfg.threads = threads;
  const auto report = study ? harness::run_study(ecfg, params_f, net_cfg)
                            : harness::run_systematic(ecfg, params_f, net_cfg);
  std::fputs(report.table_md.c_str(), stdout);
  return 0;
}

int cmd_report(const std::string& events_dir, const std::string& out) {
  const auto report = harness::report_from_events_dir(events_dir);
  std::fputs(report.table_md.c_str(), stdout);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream m(out + "/metrics.csv", std::ios::binary);
    m << report.metrics_csv;
    std::ofstream t(out + "/table.md", std::ios::binary);
    t << report.table_md;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale human-to-robot handover simulator"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic grasp dataset");
  std::string gen_out;
  std::uint64_t gen_seed = 42;
  int gen_spc = -1, gen_subjects = -1;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--samples-per-class", gen_spc, "Samples per grasp class");
  gen->add_option("--subjects", gen_subjects, "Number of synthetic subjects");

  auto* tr = app.add_subcommand("train", "Train the grasp classifier");
  std::string tr_data, tr_out = "model.ck";
  std::uint64_t tr_seed = 42;
  int tr_epochs = -1, tr_held = -1;
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint path");
  tr->add_option("--seed", tr_seed, "Training seed");
  tr->add_option("--epochs", tr_epochs, "Training epochs");
  tr->add_option("--held-out", tr_held, "Held-out subject id");

  auto* ev = app.add_subcommand("eval-model", "Evaluate a checkpoint on a dataset");
  std::string ev_model, ev_data, ev_out;
  int ev_subject = -1;
  ev->add_option("--model", ev_model, "Checkpoint path")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--subject", ev_subject, "Restrict to one subject (-1 = all)");
  ev->add_option("--out", ev_out, "Write accuracy/confusion CSV here");

  auto* rt = app.add_subcommand("run-trial", "Run a single handover trial");
  std::string rt_model, rt_policy = "ours", rt_profile = "attentive", rt_out;
  std::uint64_t rt_seed = 1;
  bool rt_frames = false;
  rt->add_option("--model", rt_model, "Checkpoint path")->required();
  rt->add_option("--policy", rt_policy, "simple-baseline | hand-pose-estimation | ours");
  rt->add_option("--profile", rt_profile, "freeform | attentive | distracted");
  rt->add_option("--seed", rt_seed, "Trial seed");
  rt->add_option("--out", rt_out, "Output directory");
  rt->add_flag("--frames", rt_frames, "Also write per-frame perception log");

  auto* rs = app.add_subcommand("run-systematic",
                                "Three-policy systematic evaluation (attentive)");
  auto* ru = app.add_subcommand("run-study", "Three-profile user-study simulation");
  std::string rs_model, rs_out, ru_model, ru_out;
  int rs_trials = -1, ru_trials = -1, rs_threads = -1, ru_threads = -1;
  std::uint64_t rs_seed = 7, ru_seed = 11;
  rs->add_option("--model", rs_model, "Checkpoint path")->required();
  rs->add_option("--trials", rs_trials, "Trials per policy");
  rs->add_option("--seed", rs_seed, "Experiment seed");
  rs->add_option("--out", rs_out, "Output directory");
  rs->add_option("--threads", rs_threads, "Worker threads (0 = hardware)");
  ru->add_option("--model", ru_model, "Checkpoint path")->required();
  ru->add_option("--trials", ru_trials, "Trials per profile");
  ru->add_option("--seed", ru_seed, "Experiment seed");
  ru->add_option("--out", ru_out, "Output directory");
  ru->add_option("--threads", ru_threads, "Worker threads (0 = hardware)");

  auto* rp = app.add_subcommand("report", "Recompute metrics from saved event logs");
  std::string rp_events, rp_out;
  rp->add_option("--events", rp_events, "Directory of per-trial event CSVs")->required();
  rp->add_option("--out", rp_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    harness::FullConfig cfg = harness::load_config(config_path);
    if (gen->parsed()) {
      if (gen_spc > 0) cfg.dataset.samples_per_class = gen_spc;
      if (gen_subjects > 0) cfg.dataset.num_subjects = gen_subjects;
      return cmd_gen_data(cfg, gen_seed, gen_out);
    }
    if (tr->parsed()) return cmd_train(cfg, tr_data, tr_out, tr_seed, tr_epochs, tr_held);
    if (ev->parsed()) return cmd_eval(ev_model, ev_data, ev_subject, ev_out);
    if (rt->parsed())
      return cmd_run_trial(cfg, rt_model, rt_policy, rt_profile, rt_seed, rt_out,
                           rt_frames);
    if (rs->parsed())
      return cmd_experiment(cfg, rs_model, rs_trials, rs_seed, rs_out, rs_threads, false);
    if (ru->parsed())
      return cmd_experiment(cfg, ru_model, ru_trials, ru_seed, ru_out, ru_threads, true);
    if (rp->parsed()) return cmd_report(rp_events, rp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
