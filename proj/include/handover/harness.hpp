#pragma once

#include "handover/humansim.hpp"
#include "handover/net.hpp"
#include "handover/perception.hpp"
#include "handover/taskmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace handover::harness {

struct NoiseParams {
  scalar_t hand_pos_sigma{0.001};
  scalar_t orient_base_deg{5.0};   // orientation noise when fully visible
  scalar_t orient_occl_deg{35.0};  // extra noise at full occlusion
  scalar_t block_pos_sigma{0.004};
};

struct SimCfg {
  perception::StreamParams stream;
  task::MachineParams machine;
  NoiseParams noise;
  int n_points{scenegen::kDefaultPoints};
  scalar_t cloud_noise_sigma{scenegen::kDefaultNoiseSigma};
};

struct TrialSetup {
  task::Policy policy{task::Policy::Ours};
  humansim::BehaviorProfile profile{humansim::BehaviorProfile::attentive()};
  std::uint64_t seed{1};
  int subject_id{1000};
};

struct TrialRecord {
  std::string policy;
  std::string profile;
  std::uint64_t seed{0};
  int planning_attempts{0};
  int planning_successes{0};
  int grasp_attempts{0};
  int grasp_successes{0};
  std::vector<scalar_t> action_exec_times;  // per placed block, seconds
  scalar_t total_exec_time{0};              // executed path time incl. replans
  scalar_t trial_duration{0};               // first detection to trial done
  int finger_contacts{0};
  int grasp_changes{0};
  int repositions{0};
  int blocks_placed{0};
  int timeouts{0};
};

/** Fixed camera mount used by all trials. */
Pose trial_camera();

/**
 * One four-block handover trial wiring humansim -> scenegen -> perception ->
 * taskmodel -> planner; metrics are recomputed from the event log.
 */
TrialRecord run_trial(const TrialSetup& setup, const net::NetParamsT<float>& params,
                      const net::NetCfg& net_cfg, const SimCfg& sim,
                      std::vector<task::Event>* events_out = nullptr,
                      std::string* frame_log = nullptr);

/** Metric definitions; a pure function of the event log. */
TrialRecord metrics_from_events(const std::vector<task::Event>& events,
                                const std::string& policy, const std::string& profile,
                                std::uint64_t seed);

void write_events_csv(const std::string& path, const std::vector<task::Event>& events);
std::vector<task::Event> read_events_csv(const std::string& path);

struct ExperimentCfg {
  int trials_per_cell{100};
  std::uint64_t seed{7};
  std::string out_dir;
  int threads{0};  // 0 = hardware concurrency
  bool write_events{true};
  SimCfg sim;
};

struct Report {
  std::vector<TrialRecord> trials;
  std::string metrics_csv;
  std::string table_md;
};

std::string metrics_csv_text(const std::vector<TrialRecord>& trials);
std::string systematic_table(const std::vector<TrialRecord>& trials);
std::string study_table(const std::vector<TrialRecord>& trials);

/** Three policies x attentive profile, policy order randomized per trial. */
Report run_systematic(const ExperimentCfg& cfg, const net::NetParamsT<float>& params,
                      const net::NetCfg& net_cfg);

/** Ours x {freeform, attentive, distracted} plus an overall aggregate row. */
Report run_study(const ExperimentCfg& cfg, const net::NetParamsT<float>& params,
                 const net::NetCfg& net_cfg);

/** Rebuild a report offline from per-trial event logs. */
Report report_from_events_dir(const std::string& events_dir);

// --- configuration file (JSON) ---

struct FullConfig {
  scenegen::DatasetSpec dataset;
  net::NetCfg net{net::NetCfg::desk_default()};
  net::TrainCfg train;
  SimCfg sim;
  ExperimentCfg experiment;
  // profile overrides by name
  std::vector<humansim::BehaviorProfile> profiles{
      humansim::BehaviorProfile::freeform(), humansim::BehaviorProfile::attentive(),
      humansim::BehaviorProfile::distracted()};

  humansim::BehaviorProfile profile_by_name(const std::string& name) const;
};

FullConfig load_config(const std::string& path);  // empty path -> defaults

}  // namespace handover::harness
