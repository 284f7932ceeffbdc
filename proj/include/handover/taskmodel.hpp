#pragma once

#include "handover/perception.hpp"
#include "handover/planner.hpp"
#include "handover/scenegen.hpp"

#include <optional>
#include <string>
#include <vector>

namespace handover::task {

enum class HandoverState {
  Idle,
  HandDetected,
  WaitStill,
  PlanApproach,
  FollowPlan,
  AtStandoff,
  Approach,
  CloseGripper,
  Retreat,
  Place,
  Done,
  Backoff,
};

std::string to_string(HandoverState s);

enum class EventKind {
  hand_detected,
  plan_started,
  plan_success,
  plan_fail,
  replan_hand_moved,
  replan_class_changed,
  backoff,
  grasp_attempt,
  grasp_success,
  grasp_fail,
  finger_contact,
  block_placed,
  trial_done,
};

std::string to_string(EventKind k);
std::optional<EventKind> event_from_string(const std::string& s);

struct Event {
  scalar_t t{0};
  EventKind kind{EventKind::hand_detected};
  std::string detail;
};

enum class Policy { SimpleBaseline, HandPoseEstimation, Ours };

std::string to_string(Policy p);
std::optional<Policy> policy_from_string(const std::string& s);

struct MachineParams {
  scalar_t dt{0.05};
  scalar_t v_max{0.25};
  scalar_t eps_replan{0.04};
  scalar_t t_uncertain{0.5};     // backoff after this much sustained uncertainty
  scalar_t close_duration{0.3};
  scalar_t plan_retry_period{0.25};
  vector3_t bin_position{0.5, -0.4, 0.05};
  vector3_t home_position{0.0, 0.0, 0.8};
  int blocks_per_trial{4};
};

enum class GraspOutcome { Success, Fail, FingerContact };

/**
 * Grasp evaluation against ground truth: finger contact when any true finger
 * capsule intersects the closing sweep or gripper body; otherwise success iff
 * the block center is within 1.5 cm of the jaw midpoint, the approach is
 * within 25 degrees of a block face normal, and the hand is still (the human
 * releases only then).
 */
GraspOutcome grasp_outcome(const scenegen::Scene& true_scene,
                           const planner::Config& gripper,
                           const CanonicalGraspFrame& frame, bool hand_still, Rng& rng);

/**
 * Grasp direction per policy: fixed top-down frame, palm-normal heuristic
 * from the (noisy) hand pose, or the canonical frame of the filtered class.
 * Throws NotHoldingObject when perception reports no object.
 */
CanonicalGraspFrame policy_grasp_direction(Policy policy,
                                           const perception::PerceptionOut& po,
                                           const Pose& noisy_hand_pose);

struct TickInput {
  scalar_t t{0};
  perception::PerceptionOut perception;
  Pose hand_pose_est;
  std::optional<Pose> block_pose_est;
  planner::CollisionWorld world;               // perceived world for planning
  const scenegen::Scene* true_scene{nullptr};  // gripper-closure evaluation only
};

struct TickOutput {
  std::vector<Event> events;
  bool grasp_succeeded{false};
  bool finger_contact{false};
  bool block_placed{false};
};

/** The replanning handover state machine; one instance per trial. */
class Machine {
 public:
  Machine(Policy policy, std::uint64_t seed, MachineParams params = {});

  TickOutput tick(const TickInput& in);

  HandoverState state() const { return state_; }
  const vector3_t& gripper_position() const { return gripper_; }
  scalar_t moved_seconds() const { return moved_seconds_; }
  int blocks_placed() const { return blocks_placed_; }
  const MachineParams& params() const { return params_; }

 private:
  void emit(std::vector<Event>& ev, scalar_t t, EventKind k, std::string detail = "");
  bool move_toward(const vector3_t& target, scalar_t dt);
  void start_plan(const TickInput& in, std::vector<Event>& ev);

  Policy policy_;
  MachineParams params_;
  Rng rng_;

  HandoverState state_{HandoverState::Idle};
  vector3_t gripper_;
  matrix3_t gripper_rot_{matrix3_t::Identity()};
  bool hand_seen_{false};

  // current attempt cycle
  std::optional<planner::StandoffGrasp> target_;
  std::vector<planner::Config> path_;
  std::size_t path_next_{0};
  vector3_t plan_hand_pos_{vector3_t::Zero()};
  GraspClass plan_class_{GraspClass::Waiting};
  scalar_t uncertain_since_{-1};
  scalar_t close_left_{0};
  scalar_t last_plan_attempt_{-1e9};

  // place sub-phase
  std::vector<planner::Config> place_path_;
  std::size_t place_next_{0};
  bool descending_{false};

  scalar_t moved_seconds_{0};
  int blocks_placed_{0};
};

/** Legal transition check for the state graph (fuzz tests). */
bool transition_allowed(HandoverState from, HandoverState to);

}  // namespace handover::task
