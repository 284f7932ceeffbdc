#include "handover/harness.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace handover::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

Pose trial_camera() {
  return scenegen::look_at({-0.35, 0.45, 0.75}, {0.38, 0.0, 0.33});
}

namespace {

vector3_t gauss3(Rng& rng, scalar_t sigma) {
  return vector3_t(rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma));
}

quaternion_t random_rotation(Rng& rng, scalar_t sigma_deg) {
  vector3_t axis = gauss3(rng, 1.0);
  if (axis.norm() < 1e-12) axis = vector3_t::UnitZ();
  axis.normalize();
  const scalar_t angle = rng.normal(0.0, sigma_deg * M_PI / 180.0);
  return quaternion_t(angleaxis_t(angle, axis));
}

planner::CollisionWorld perceived_world(const Pose& hand_est,
                                        const std::optional<Pose>& block_est) {
  planner::CollisionWorld w;
  const quaternion_t yaw = yaw_quat(yaw_of(hand_est.orientation));
  // coarse hand envelope: palm blob plus forearm back toward the body
  const vector3_t py = yaw * vector3_t::UnitY();
  w.hand.push_back(Capsule{hand_est.position - 0.03 * py, hand_est.position + 0.03 * py,
                           0.045});
  const vector3_t body_anchor(0.85, hand_est.position.y() * 0.5,
                              std::max(0.15, hand_est.position.z() - 0.05));
  const vector3_t dir = (body_anchor - hand_est.position).normalized();
  w.hand.push_back(
      Capsule{hand_est.position + 0.05 * dir, hand_est.position + 0.30 * dir, 0.045});
  w.human_body = Capsule{{0.85, 0.0, 0.0}, {0.85, 0.0, 1.3}, 0.18};
  if (block_est)
    w.block = Obb{block_est->position, block_est->orientation.toRotationMatrix(),
                  vector3_t(scenegen::kBlockHalf, scenegen::kBlockHalf,
                            scenegen::kBlockHalf)};
  w.table = true;
  return w;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::map<std::string, std::string> parse_detail(const std::string& detail) {
  std::map<std::string, std::string> out;
  std::stringstream ss(detail);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

}  // namespace

TrialRecord run_trial(const TrialSetup& setup, const net::NetParamsT<float>& params,
                      const net::NetCfg& net_cfg, const SimCfg& sim,
                      std::vector<task::Event>* events_out, std::string* frame_log) {
  humansim::Human human(setup.profile, setup.subject_id, mix_seed(setup.seed, 1));
  Rng frame_rng(mix_seed(setup.seed, 2));
  Rng noise_rng(mix_seed(setup.seed, 3));
  task::Machine machine(setup.policy, mix_seed(setup.seed, 4), sim.machine);
  Rng detector_rng(mix_seed(setup.seed, 5));
  perception::Stream stream(&params, &net_cfg, sim.stream);
  const Pose camera = trial_camera();

  std::vector<task::Event> events;
  const scalar_t dt = sim.machine.dt;
  const scalar_t cap =
      sim.machine.blocks_per_trial * humansim::kBlockTimeout + 60.0;
  scalar_t t = 0.0;

  while (t < cap) {
    t += dt;
    const scenegen::Scene scene = human.advance(dt, camera);

    PointCloud cloud(3, 0);
    scenegen::RenderStats stats;
    bool rendered = true;
    try {
      cloud = scenegen::render_cloud(scene, sim.n_points, sim.cloud_noise_sigma,
                                     frame_rng, &stats);
    } catch (const DegenerateScene&) {
      rendered = false;
    }

    const scalar_t occluded = rendered ? 1.0 - stats.hand_visible_frac : 1.0;
    const scalar_t sigma_deg =
        sim.noise.orient_base_deg + sim.noise.orient_occl_deg * occluded;
    Pose hand_est = scene.hand_pose;
    hand_est.position += gauss3(noise_rng, sim.noise.hand_pos_sigma);
    hand_est.orientation =
        (scene.hand_pose.orientation * random_rotation(noise_rng, sigma_deg)).normalized();

    perception::Frame frame{t, hand_est, cloud, &scene};
    const perception::PerceptionOut po = stream.step(frame);

    std::optional<Pose> block_est;
    const vector3_t det_noise = gauss3(detector_rng, sim.noise.block_pos_sigma);
    if (scene.block) {
      Pose bp = scene.block->pose;
      bp.position += det_noise;
      block_est = bp;
    } else if (po.object_present) {
      // perception claims an object the world does not have: fall back to the
      // class-nominal offset from the estimated hand pose
      const Pose yaw_frame{hand_est.position, yaw_quat(yaw_of(hand_est.orientation))};
      block_est = compose(yaw_frame, scenegen::nominal_block_pose(po.filtered_class));
    }

    task::TickInput in;
    in.t = t;
    in.perception = po;
    in.hand_pose_est = hand_est;
    in.block_pose_est = block_est;
    in.world = perceived_world(hand_est, block_est);
    in.true_scene = &scene;
    const task::TickOutput out = machine.tick(in);
    for (const auto& e : out.events) events.push_back(e);
    if (out.grasp_succeeded) human.notify_grasp_success();
    if (out.finger_contact) human.notify_finger_contact();

    if (frame_log) {
      *frame_log += fmt("%.3f", t) + "," + to_label(po.filtered_class) + "," +
                    fmt("%.4f", po.confidence) + "," + (po.hand_still ? "1" : "0") + "\n";
    }

    if (machine.state() == task::HandoverState::Done) break;
    if (human.done() && (machine.state() == task::HandoverState::Idle ||
                         machine.state() == task::HandoverState::WaitStill))
      break;
  }

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "moved_s=%.3f;timeouts=%d;repositions=%d;grasp_changes=%d",
                machine.moved_seconds(), human.timeouts(), human.repositions(),
                human.grasp_changes());
  events.push_back(task::Event{t, task::EventKind::trial_done, detail});

  if (events_out) *events_out = events;
  return metrics_from_events(events, to_string(setup.policy), setup.profile.name,
                             setup.seed);
}

TrialRecord metrics_from_events(const std::vector<task::Event>& events,
                                const std::string& policy, const std::string& profile,
                                std::uint64_t seed) {
  TrialRecord r;
  r.policy = policy;
  r.profile = profile;
  r.seed = seed;
  scalar_t first_detect = -1, done_t = 0, last_plan_started = -1;
  for (const auto& e : events) {
    switch (e.kind) {
      case task::EventKind::hand_detected:
        if (first_detect < 0) first_detect = e.t;
        break;
      case task::EventKind::plan_started:
        ++r.planning_attempts;
        last_plan_started = e.t;
        break;
      case task::EventKind::plan_success: ++r.planning_successes; break;
      case task::EventKind::grasp_attempt: ++r.grasp_attempts; break;
      case task::EventKind::grasp_success: ++r.grasp_successes; break;
      case task::EventKind::finger_contact: ++r.finger_contacts; break;
      case task::EventKind::block_placed:
        ++r.blocks_placed;
        if (last_plan_started >= 0) r.action_exec_times.push_back(e.t - last_plan_started);
        break;
      case task::EventKind::trial_done: {
        done_t = e.t;
        const auto kv = parse_detail(e.detail);
        if (kv.count("moved_s")) r.total_exec_time = std::stod(kv.at("moved_s"));
        if (kv.count("timeouts")) r.timeouts = std::stoi(kv.at("timeouts"));
        if (kv.count("repositions")) r.repositions = std::stoi(kv.at("repositions"));
        if (kv.count("grasp_changes")) r.grasp_changes = std::stoi(kv.at("grasp_changes"));
        break;
      }
      default: break;
    }
  }
  r.trial_duration = first_detect >= 0 ? done_t - first_detect : 0.0;
  return r;
}

void write_events_csv(const std::string& path, const std::vector<task::Event>& events) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write events: " + path);
  f << "t,kind,detail\n";
  for (const auto& e : events) {
    std::string detail = e.detail;
    for (auto& c : detail)
      if (c == ',' || c == '\n') c = ';';
    f << fmt("%.3f", e.t) << ',' << to_string(e.kind) << ',' << detail << '\n';
  }
  if (!f) throw IoError("events write failed: " + path);
}

std::vector<task::Event> read_events_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read events: " + path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<task::Event> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw IoError("bad events row: " + line);
    task::Event e;
    e.t = std::stod(line.substr(0, c1));
    const auto kind = task::event_from_string(line.substr(c1 + 1, c2 - c1 - 1));
    if (!kind) throw IoError("unknown event kind in " + path);
    e.kind = *kind;
    e.detail = line.substr(c2 + 1);
    out.push_back(std::move(e));
  }
  return out;
}

// --- reports ---

std::string metrics_csv_text(const std::vector<TrialRecord>& trials) {
  std::string out =
      "trial,policy,profile,seed,planning_attempts,planning_successes,grasp_attempts,"
      "grasp_successes,action_exec_mean_s,total_exec_s,trial_duration_s,finger_contacts,"
      "grasp_changes,repositions,blocks_placed,timeouts,action_exec_times\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TrialRecord& r = trials[i];
    out += std::to_string(i) + "," + r.policy + "," + r.profile + "," +
           std::to_string(r.seed) + "," + std::to_string(r.planning_attempts) + "," +
           std::to_string(r.planning_successes) + "," + std::to_string(r.grasp_attempts) +
           "," + std::to_string(r.grasp_successes) + ",";
    if (!r.action_exec_times.empty()) {
      scalar_t mean = 0;
      for (scalar_t v : r.action_exec_times) mean += v;
      out += fmt("%.3f", mean / r.action_exec_times.size());
    }
    out += "," + fmt("%.3f", r.total_exec_time) + "," + fmt("%.3f", r.trial_duration) +
           "," + std::to_string(r.finger_contacts) + "," +
           std::to_string(r.grasp_changes) + "," + std::to_string(r.repositions) + "," +
           std::to_string(r.blocks_placed) + "," + std::to_string(r.timeouts) + ",";
    for (std::size_t k = 0; k < r.action_exec_times.size(); ++k) {
      if (k) out += ";";
      out += fmt("%.3f", r.action_exec_times[k]);
    }
    out += "\n";
  }
  return out;
}

namespace {

struct Aggregate {
  long plan_att{0}, plan_succ{0}, grasp_att{0}, grasp_succ{0};
  scalar_t action_sum{0};
  long action_n{0};
  scalar_t total_exec_sum{0}, duration_sum{0};
  scalar_t contacts_sum{0}, changes_sum{0}, repositions_sum{0};
  long trials{0};

  void add(const TrialRecord& r) {
    plan_att += r.planning_attempts;
    plan_succ += r.planning_successes;
    grasp_att += r.grasp_attempts;
    grasp_succ += r.grasp_successes;
    for (scalar_t v : r.action_exec_times) {
      action_sum += v;
      ++action_n;
    }
    total_exec_sum += r.total_exec_time;
    duration_sum += r.trial_duration;
    contacts_sum += r.finger_contacts;
    changes_sum += r.grasp_changes;
    repositions_sum += r.repositions;
    ++trials;
  }

  std::string pct(long num, long den) const {
    return den > 0 ? fmt("%.1f", 100.0 * num / den) + "%" : std::string();
  }
  std::string row(const std::string& name) const {
    std::string out = "| " + name + " | " + pct(plan_succ, plan_att) + " | " +
                      pct(grasp_succ, grasp_att) + " | ";
    out += action_n > 0 ? fmt("%.2f", action_sum / action_n) : std::string();
    out += " | " + (trials ? fmt("%.2f", total_exec_sum / trials) : std::string()) +
           " | " + (trials ? fmt("%.2f", duration_sum / trials) : std::string()) + " |";
    return out;
  }
  std::string stats_row(const std::string& name) const {
    if (!trials) return "| " + name + " |  |  |  |";
    return "| " + name + " | " + fmt("%.2f", contacts_sum / trials) + " | " +
           fmt("%.2f", changes_sum / trials) + " | " +
           fmt("%.2f", repositions_sum / trials) + " |";
  }
};

const char* kTableHeader =
    "| | Planning Success Rate | Grasp Success Rate | Action Execution Time (s) | "
    "Total Execution Time (s) | Trial Duration (s) |\n"
    "| --- | --- | --- | --- | --- | --- |\n";

}  // namespace

std::string systematic_table(const std::vector<TrialRecord>& trials) {
  Aggregate base, hpe, ours;
  for (const auto& r : trials) {
    if (r.policy == to_string(task::Policy::SimpleBaseline)) base.add(r);
    if (r.policy == to_string(task::Policy::HandPoseEstimation)) hpe.add(r);
    if (r.policy == to_string(task::Policy::Ours)) ours.add(r);
  }
  std::string out = kTableHeader;
  out += base.row("Simple Baseline") + "\n";
  out += hpe.row("Hand Pose Estimation") + "\n";
  out += ours.row("Ours") + "\n";
  return out;
}

std::string study_table(const std::vector<TrialRecord>& trials) {
  Aggregate freeform, attentive, distracted, overall;
  for (const auto& r : trials) {
    if (r.profile == "freeform") freeform.add(r);
    if (r.profile == "attentive") attentive.add(r);
    if (r.profile == "distracted") distracted.add(r);
    overall.add(r);
  }
  std::string out = kTableHeader;
  out += freeform.row("Freeform") + "\n";
  out += attentive.row("Attentive") + "\n";
  out += distracted.row("Distracted") + "\n";
  out += overall.row("Overall") + "\n";
  out += "\n| | Finger Contacts | Grasp Changes | Repositions |\n| --- | --- | --- | --- |\n";
  out += freeform.stats_row("Freeform") + "\n";
  out += attentive.stats_row("Attentive") + "\n";
  out += distracted.stats_row("Distracted") + "\n";
  return out;
}

namespace {

std::vector<TrialRecord> run_all(const std::vector<TrialSetup>& setups,
                                 const ExperimentCfg& cfg,
                                 const net::NetParamsT<float>& params,
                                 const net::NetCfg& net_cfg,
                                 std::vector<std::vector<task::Event>>* events) {
  std::vector<TrialRecord> records(setups.size());
  if (events) events->resize(setups.size());
  unsigned hw = std::thread::hardware_concurrency();
  const unsigned want = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                        : (hw > 0 ? hw : 1u);
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(want, static_cast<unsigned>(setups.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= setups.size()) return;
      std::vector<task::Event> ev;
      records[k] = run_trial(setups[k], params, net_cfg, cfg.sim,
                             events ? &ev : nullptr);
      if (events) (*events)[k] = std::move(ev);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return records;
}

void write_report_files(const std::vector<TrialSetup>& setups, const Report& report,
                        const std::vector<std::vector<task::Event>>& events,
                        const ExperimentCfg& cfg) {
  if (cfg.out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "metrics.csv", std::ios::binary);
    f << report.metrics_csv;
  }
  {
    std::ofstream f(fs::path(cfg.out_dir) / "table.md", std::ios::binary);
    f << report.table_md;
  }
  if (cfg.write_events) {
    fs::create_directories(fs::path(cfg.out_dir) / "events", ec);
    for (std::size_t i = 0; i < setups.size(); ++i) {
      char name[128];
      std::snprintf(name, sizeof(name), "trial_%05zu_%s_%s_s%llu.csv", i,
                    to_string(setups[i].policy).c_str(), setups[i].profile.name.c_str(),
                    static_cast<unsigned long long>(setups[i].seed));
      write_events_csv((fs::path(cfg.out_dir) / "events" / name).string(), events[i]);
    }
  }
}

}  // namespace

Report run_systematic(const ExperimentCfg& cfg, const net::NetParamsT<float>& params,
                      const net::NetCfg& net_cfg) {
  std::vector<TrialSetup> setups;
  const std::array<task::Policy, 3> policies = {
      task::Policy::SimpleBaseline, task::Policy::HandPoseEstimation, task::Policy::Ours};
  for (int i = 0; i < cfg.trials_per_cell; ++i) {
    // randomized presentation order per trial, as in a counterbalanced study
    int order[3] = {0, 1, 2};
    Rng order_rng(mix_seed(cfg.seed, 0x0DE40000ULL + i));
    for (int k = 2; k > 0; --k) std::swap(order[k], order[order_rng.uniform_int(0, k)]);
    for (int slot = 0; slot < 3; ++slot) {
      TrialSetup s;
      s.policy = policies[order[slot]];
      s.profile = humansim::BehaviorProfile::attentive();
      s.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i) * 8 + slot + 1);
      s.subject_id = 1000 + i;
      setups.push_back(s);
    }
  }
  std::vector<std::vector<task::Event>> events;
  Report report;
  report.trials = run_all(setups, cfg, params, net_cfg, &events);
  report.metrics_csv = metrics_csv_text(report.trials);
  report.table_md = systematic_table(report.trials);
  write_report_files(setups, report, events, cfg);
  return report;
}

Report run_study(const ExperimentCfg& cfg, const net::NetParamsT<float>& params,
                 const net::NetCfg& net_cfg) {
  std::vector<TrialSetup> setups;
  const std::array<humansim::BehaviorProfile, 3> profiles = {
      humansim::BehaviorProfile::freeform(), humansim::BehaviorProfile::attentive(),
      humansim::BehaviorProfile::distracted()};
  for (std::size_t cell = 0; cell < profiles.size(); ++cell) {
    for (int i = 0; i < cfg.trials_per_cell; ++i) {
      TrialSetup s;
      s.policy = task::Policy::Ours;
      s.profile = profiles[cell];
      s.seed = mix_seed(cfg.seed, 0x57D0000ULL + cell * 1000003 + i);
      s.subject_id = 2000 + i;
      setups.push_back(s);
    }
  }
  std::vector<std::vector<task::Event>> events;
  Report report;
  report.trials = run_all(setups, cfg, params, net_cfg, &events);
  report.metrics_csv = metrics_csv_text(report.trials);
  report.table_md = study_table(report.trials);
  write_report_files(setups, report, events, cfg);
  return report;
}

Report report_from_events_dir(const std::string& events_dir) {
  std::vector<std::pair<int, TrialRecord>> indexed;
  bool any_non_ours = false;
  for (const auto& entry : fs::directory_iterator(events_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trial_", 0) != 0 || entry.path().extension() != ".csv") continue;
    // trial_<idx>_<policy>_<profile>_s<seed>.csv
    std::string stem = entry.path().stem().string().substr(6);
    const auto u1 = stem.find('_');
    const auto u2 = stem.find('_', u1 + 1);
    const auto u3 = stem.rfind("_s");
    if (u1 == std::string::npos || u2 == std::string::npos || u3 == std::string::npos)
      throw IoError("unrecognized events file name: " + name);
    const int idx = std::stoi(stem.substr(0, u1));
    const std::string policy = stem.substr(u1 + 1, u3 > u2 ? u2 - u1 - 1 : 0);
    const std::string profile = stem.substr(u2 + 1, u3 - u2 - 1);
    const std::uint64_t seed = std::stoull(stem.substr(u3 + 2));
    const auto events = read_events_csv(entry.path().string());
    if (policy != to_string(task::Policy::Ours)) any_non_ours = true;
    indexed.emplace_back(idx, metrics_from_events(events, policy, profile, seed));
  }
  std::sort(indexed.begin(), indexed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Report report;
  for (auto& [idx, rec] : indexed) report.trials.push_back(std::move(rec));
  report.metrics_csv = metrics_csv_text(report.trials);
  report.table_md =
      any_non_ours ? systematic_table(report.trials) : study_table(report.trials);
  return report;
}

// --- configuration ---

humansim::BehaviorProfile FullConfig::profile_by_name(const std::string& name) const {
  for (const auto& p : profiles)
    if (p.name == name) return p;
  return humansim::BehaviorProfile::by_name(name);
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

FullConfig load_config(const std::string& path) {
  FullConfig cfg;
  cfg.train.epochs = 30;
  cfg.train.held_out_subject = 0;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  json j = json::parse(f);

  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    maybe(d, "samples_per_class", cfg.dataset.samples_per_class);
    maybe(d, "num_subjects", cfg.dataset.num_subjects);
    maybe(d, "n_points", cfg.dataset.n_points);
    maybe(d, "noise_sigma", cfg.dataset.noise_sigma);
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    if (n.contains("sa_layers")) {
      cfg.net.sa_layers.clear();
      for (const auto& l : n["sa_layers"]) {
        net::SALayerCfg sl;
        maybe(l, "num_centroids", sl.num_centroids);
        maybe(l, "radius", sl.radius);
        maybe(l, "max_group", sl.max_group);
        maybe(l, "mlp_widths", sl.mlp_widths);
        cfg.net.sa_layers.push_back(std::move(sl));
      }
    }
    if (n.contains("head_widths")) {
      const auto hw = n["head_widths"].get<std::vector<int>>();
      if (hw.size() == 3) cfg.net.head_widths = {hw[0], hw[1], hw[2]};
    }
    maybe(n, "dropout_p", cfg.net.dropout_p);
    maybe(n, "use_norm", cfg.net.use_norm);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    maybe(t, "epochs", cfg.train.epochs);
    maybe(t, "batch_size", cfg.train.batch_size);
    maybe(t, "learning_rate", cfg.train.learning_rate);
    maybe(t, "momentum", cfg.train.momentum);
    maybe(t, "lr_decay", cfg.train.lr_decay);
    maybe(t, "seed", cfg.train.seed);
    maybe(t, "held_out_subject", cfg.train.held_out_subject);
  }
  if (j.contains("perception")) {
    const auto& p = j["perception"];
    maybe(p, "window", cfg.sim.stream.window);
    maybe(p, "still_window", cfg.sim.stream.still_window);
    maybe(p, "eps_still", cfg.sim.stream.eps_still);
    maybe(p, "tau_uncertain", cfg.sim.stream.tau_uncertain);
    maybe(p, "theta_visible", cfg.sim.stream.theta_visible);
  }
  if (j.contains("machine")) {
    const auto& m = j["machine"];
    maybe(m, "dt", cfg.sim.machine.dt);
    maybe(m, "v_max", cfg.sim.machine.v_max);
    maybe(m, "eps_replan", cfg.sim.machine.eps_replan);
    maybe(m, "t_uncertain", cfg.sim.machine.t_uncertain);
    maybe(m, "blocks_per_trial", cfg.sim.machine.blocks_per_trial);
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    maybe(n, "hand_pos_sigma", cfg.sim.noise.hand_pos_sigma);
    maybe(n, "orient_base_deg", cfg.sim.noise.orient_base_deg);
    maybe(n, "orient_occl_deg", cfg.sim.noise.orient_occl_deg);
    maybe(n, "block_pos_sigma", cfg.sim.noise.block_pos_sigma);
  }
  if (j.contains("profiles")) {
    for (auto& p : cfg.profiles) {
      if (!j["profiles"].contains(p.name)) continue;
      const auto& jp = j["profiles"][p.name];
      maybe(jp, "p_outlier", p.p_outlier);
      maybe(jp, "reposition_rate", p.reposition_rate);
      maybe(jp, "grasp_change_rate", p.grasp_change_rate);
      maybe(jp, "still_fraction", p.still_fraction);
      maybe(jp, "jitter_sigma", p.jitter_sigma);
    }
  }
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    maybe(e, "trials_per_cell", cfg.experiment.trials_per_cell);
    maybe(e, "seed", cfg.experiment.seed);
    maybe(e, "threads", cfg.experiment.threads);
    maybe(e, "write_events", cfg.experiment.write_events);
  }
  cfg.experiment.sim = cfg.sim;
  return cfg;
}

}  // namespace handover::harness
