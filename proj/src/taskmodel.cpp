#include "handover/taskmodel.hpp"

#include <algorithm>
#include <cmath>

namespace handover::task {

std::string to_string(HandoverState s) {
  switch (s) {
    case HandoverState::Idle: return "idle";
    case HandoverState::HandDetected: return "hand_detected";
    case HandoverState::WaitStill: return "wait_still";
    case HandoverState::PlanApproach: return "plan_approach";
    case HandoverState::FollowPlan: return "follow_plan";
    case HandoverState::AtStandoff: return "at_standoff";
    case HandoverState::Approach: return "approach";
    case HandoverState::CloseGripper: return "close_gripper";
    case HandoverState::Retreat: return "retreat";
    case HandoverState::Place: return "place";
    case HandoverState::Done: return "done";
    case HandoverState::Backoff: return "backoff";
  }
  return "?";
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::hand_detected: return "hand_detected";
    case EventKind::plan_started: return "plan_started";
    case EventKind::plan_success: return "plan_success";
    case EventKind::plan_fail: return "plan_fail";
    case EventKind::replan_hand_moved: return "replan_hand_moved";
    case EventKind::replan_class_changed: return "replan_class_changed";
    case EventKind::backoff: return "backoff";
    case EventKind::grasp_attempt: return "grasp_attempt";
    case EventKind::grasp_success: return "grasp_success";
    case EventKind::grasp_fail: return "grasp_fail";
    case EventKind::finger_contact: return "finger_contact";
    case EventKind::block_placed: return "block_placed";
    case EventKind::trial_done: return "trial_done";
  }
  return "?";
}

std::optional<EventKind> event_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(EventKind::trial_done); ++i) {
    const auto k = static_cast<EventKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string to_string(Policy p) {
  switch (p) {
    case Policy::SimpleBaseline: return "simple-baseline";
    case Policy::HandPoseEstimation: return "hand-pose-estimation";
    case Policy::Ours: return "ours";
  }
  return "?";
}

std::optional<Policy> policy_from_string(const std::string& s) {
  if (s == "simple-baseline" || s == "baseline") return Policy::SimpleBaseline;
  if (s == "hand-pose-estimation" || s == "hpe") return Policy::HandPoseEstimation;
  if (s == "ours") return Policy::Ours;
  return std::nullopt;
}

GraspOutcome grasp_outcome(const scenegen::Scene& true_scene,
                           const planner::Config& gripper,
                           const CanonicalGraspFrame& frame, bool hand_still, Rng& rng) {
  (void)rng;
  const vector3_t a = frame.approach_dir;
  const matrix3_t rot = gripper_rotation(a, frame.gripper_roll);
  const vector3_t c_axis = rot.col(0);
  const vector3_t b_axis = rot.col(1);

  // Swept jaw plates and the trailing body, in world coordinates.
  auto oriented = [&](const vector3_t& center, scalar_t ha, scalar_t hc, scalar_t hb) {
    Obb o;
    o.center = center;
    o.rot.col(0) = c_axis;
    o.rot.col(1) = b_axis;
    o.rot.col(2) = a;
    o.half = vector3_t(hc, hb, ha);
    return o;
  };
  const vector3_t p = gripper.position;
  const std::array<Obb, 3> sweep = {
      oriented(p + 0.035 * c_axis - 0.015 * a, 0.020, 0.012, 0.010),
      oriented(p - 0.035 * c_axis - 0.015 * a, 0.020, 0.012, 0.010),
      oriented(p - 0.065 * a, 0.030, 0.040, 0.010),  // body behind the jaws
  };
  for (const Capsule& cap : true_scene.hand.finger_capsules()) {
    for (const Obb& box : sweep) {
      if (capsule_obb_distance(cap, box) <= 0.0) return GraspOutcome::FingerContact;
    }
  }

  if (!hand_still || !true_scene.block) return GraspOutcome::Fail;
  const vector3_t block_center = true_scene.block->pose.position;
  if ((block_center - p).norm() > 0.015) return GraspOutcome::Fail;

  const matrix3_t block_rot = true_scene.block->pose.orientation.toRotationMatrix();
  scalar_t best_angle = M_PI;
  for (int axis = 0; axis < 3; ++axis) {
    for (const scalar_t sign : {-1.0, 1.0}) {
      const vector3_t n = sign * block_rot.col(axis);
      const scalar_t ang = std::acos(std::clamp(a.dot(-n), -1.0, 1.0));
      best_angle = std::min(best_angle, ang);
    }
  }
  if (best_angle > 25.0 * M_PI / 180.0) return GraspOutcome::Fail;
  return GraspOutcome::Success;
}

CanonicalGraspFrame policy_grasp_direction(Policy policy,
                                           const perception::PerceptionOut& po,
                                           const Pose& noisy_hand_pose) {
  if (!po.object_present) throw NotHoldingObject{};
  switch (policy) {
    case Policy::SimpleBaseline: {
      CanonicalGraspFrame f;
      f.approach_dir = vector3_t(0, 0, -1);
      f.gripper_roll = M_PI_2;
      f.standoff_dist = kStandoffDist;
      return f;
    }
    case Policy::HandPoseEstimation: {
      // approach opposite the palm normal, as estimated from the noisy pose
      CanonicalGraspFrame f;
      vector3_t n = noisy_hand_pose.orientation * vector3_t::UnitZ();
      if (n.norm() < 1e-9) n = vector3_t::UnitZ();
      f.approach_dir = -n.normalized();
      f.gripper_roll = 0.0;
      f.standoff_dist = kStandoffDist;
      return f;
    }
    case Policy::Ours: return canonical_frame(po.filtered_class, noisy_hand_pose);
  }
  throw NotHoldingObject{};
}

bool transition_allowed(HandoverState from, HandoverState to) {
  using S = HandoverState;
  if (from == to) return from != S::HandDetected;  // HandDetected is transient
  switch (from) {
    case S::Idle: return to == S::HandDetected;
    case S::HandDetected: return to == S::WaitStill;
    case S::WaitStill: return to == S::Idle || to == S::PlanApproach;
    case S::PlanApproach: return to == S::WaitStill || to == S::FollowPlan;
    case S::FollowPlan:
      return to == S::WaitStill || to == S::PlanApproach || to == S::AtStandoff;
    case S::AtStandoff:
      return to == S::WaitStill || to == S::PlanApproach || to == S::Approach;
    case S::Approach: return to == S::Backoff || to == S::CloseGripper;
    case S::CloseGripper: return to == S::Backoff || to == S::Retreat;
    case S::Retreat: return to == S::Place;
    case S::Place: return to == S::Idle || to == S::Done;
    case S::Backoff: return to == S::PlanApproach;
    case S::Done: return false;
  }
  return false;
}

Machine::Machine(Policy policy, std::uint64_t seed, MachineParams params)
    : policy_(policy), params_(params), rng_(seed), gripper_(params.home_position) {}

void Machine::emit(std::vector<Event>& ev, scalar_t t, EventKind k, std::string detail) {
  ev.push_back(Event{t, k, std::move(detail)});
}

bool Machine::move_toward(const vector3_t& target, scalar_t dt) {
  const vector3_t d = target - gripper_;
  const scalar_t dist = d.norm();
  const scalar_t step = params_.v_max * dt;
  moved_seconds_ += dt;
  if (dist <= step) {
    gripper_ = target;
    return true;
  }
  gripper_ += d * (step / dist);
  return false;
}

void Machine::start_plan(const TickInput& in, std::vector<Event>& ev) {
  if (in.t - last_plan_attempt_ < params_.plan_retry_period) return;
  last_plan_attempt_ = in.t;

  CanonicalGraspFrame frame;
  try {
    frame = policy_grasp_direction(policy_, in.perception, in.hand_pose_est);
  } catch (const NotHoldingObject&) {
    state_ = HandoverState::WaitStill;
    return;
  }
  if (!in.block_pose_est) {
    state_ = HandoverState::WaitStill;
    return;
  }

  emit(ev, in.t, EventKind::plan_started, to_string(policy_));
  const auto cfgs = planner::configs_from_frame(frame, in.block_pose_est->position);
  if (!cfgs) {
    emit(ev, in.t, EventKind::plan_fail, "unreachable");
    return;
  }
  gripper_rot_ = gripper_rotation(frame.approach_dir, frame.gripper_roll);
  const auto plan = planner::rrt_connect(planner::Config{gripper_}, cfgs->standoff,
                                         gripper_rot_, in.world, rng_);
  if (!plan.ok()) {
    emit(ev, in.t, EventKind::plan_fail,
         plan.status == planner::PlanStatus::InvalidEndpoint ? "invalid_endpoint"
                                                             : "no_path");
    return;
  }
  target_ = cfgs;
  path_ = plan.path.waypoints;
  path_next_ = 0;
  plan_hand_pos_ = in.hand_pose_est.position;
  plan_class_ = in.perception.filtered_class;
  state_ = HandoverState::FollowPlan;
}

TickOutput Machine::tick(const TickInput& in) {
  TickOutput out;
  const auto& po = in.perception;
  const scalar_t dt = params_.dt;

  switch (state_) {
    case HandoverState::Idle:
      if (po.object_present) {
        emit(out.events, in.t, EventKind::hand_detected, to_label(po.filtered_class));
        hand_seen_ = true;
        state_ = HandoverState::HandDetected;
      }
      break;

    case HandoverState::HandDetected:
      state_ = HandoverState::WaitStill;
      break;

    case HandoverState::WaitStill:
      if (!po.object_present) {
        state_ = HandoverState::Idle;
      } else if (po.hand_still && !po.uncertain) {
        state_ = HandoverState::PlanApproach;
      }
      break;

    case HandoverState::PlanApproach:
      if (!po.object_present) {
        state_ = HandoverState::WaitStill;
        break;
      }
      start_plan(in, out.events);
      break;

    case HandoverState::FollowPlan: {
      if (!po.object_present) {
        state_ = HandoverState::WaitStill;
        break;
      }
      if ((in.hand_pose_est.position - plan_hand_pos_).norm() > params_.eps_replan) {
        emit(out.events, in.t, EventKind::replan_hand_moved);
        state_ = HandoverState::PlanApproach;
        break;
      }
      if (is_holding(po.filtered_class) && po.filtered_class != plan_class_) {
        emit(out.events, in.t, EventKind::replan_class_changed,
             to_label(plan_class_) + "->" + to_label(po.filtered_class));
        state_ = HandoverState::PlanApproach;
        break;
      }
      // advance along the planned waypoints
      scalar_t budget = params_.v_max * dt;
      moved_seconds_ += dt;
      while (budget > 0 && path_next_ < path_.size()) {
        const vector3_t d = path_[path_next_].position - gripper_;
        const scalar_t dist = d.norm();
        if (dist <= budget) {
          gripper_ = path_[path_next_].position;
          budget -= dist;
          ++path_next_;
        } else {
          gripper_ += d * (budget / dist);
          budget = 0;
        }
      }
      if (path_next_ >= path_.size()) {
        emit(out.events, in.t, EventKind::plan_success);
        uncertain_since_ = -1;
        state_ = HandoverState::AtStandoff;
      }
      break;
    }

    case HandoverState::AtStandoff:
      if (!po.object_present) {
        state_ = HandoverState::WaitStill;
        break;
      }
      if ((in.hand_pose_est.position - plan_hand_pos_).norm() > params_.eps_replan) {
        emit(out.events, in.t, EventKind::replan_hand_moved);
        state_ = HandoverState::PlanApproach;
        break;
      }
      if (po.hand_still && !po.uncertain) {
        uncertain_since_ = -1;
        state_ = HandoverState::Approach;
      }
      break;

    case HandoverState::Approach: {
      if (po.uncertain) {
        if (uncertain_since_ < 0) uncertain_since_ = in.t;
        if (in.t - uncertain_since_ > params_.t_uncertain) {
          emit(out.events, in.t, EventKind::backoff, "uncertain");
          state_ = HandoverState::Backoff;
          break;
        }
      } else {
        uncertain_since_ = -1;
      }
      if (move_toward(target_->grasp.position, dt)) {
        close_left_ = params_.close_duration;
        state_ = HandoverState::CloseGripper;
      }
      break;
    }

    case HandoverState::CloseGripper: {
      close_left_ -= dt;
      if (close_left_ > 0) break;
      emit(out.events, in.t, EventKind::grasp_attempt, to_string(policy_));
      const GraspOutcome res = grasp_outcome(*in.true_scene, planner::Config{gripper_},
                                             target_->frame, po.hand_still, rng_);
      if (res == GraspOutcome::FingerContact) {
        emit(out.events, in.t, EventKind::finger_contact);
        emit(out.events, in.t, EventKind::grasp_fail, "finger_contact");
        out.finger_contact = true;
        state_ = HandoverState::Backoff;
      } else if (res == GraspOutcome::Fail) {
        emit(out.events, in.t, EventKind::grasp_fail);
        state_ = HandoverState::Backoff;
      } else {
        emit(out.events, in.t, EventKind::grasp_success);
        out.grasp_succeeded = true;
        state_ = HandoverState::Retreat;
      }
      break;
    }

    case HandoverState::Retreat:
      if (move_toward(target_->standoff.position, dt)) {
        place_path_.clear();
        place_next_ = 0;
        descending_ = false;
        state_ = HandoverState::Place;
      }
      break;

    case HandoverState::Place: {
      const vector3_t bin_above = params_.bin_position + vector3_t(0, 0, 0.20);
      if (place_path_.empty() && !descending_) {
        const auto plan = planner::rrt_connect(planner::Config{gripper_},
                                               planner::Config{bin_above}, gripper_rot_,
                                               in.world, rng_);
        if (plan.ok()) {
          place_path_ = plan.path.waypoints;
          place_next_ = 0;
        } else {
          place_path_ = {planner::Config{gripper_}, planner::Config{bin_above}};
          place_next_ = 0;
        }
      }
      if (!descending_) {
        scalar_t budget = params_.v_max * dt;
        moved_seconds_ += dt;
        while (budget > 0 && place_next_ < place_path_.size()) {
          const vector3_t d = place_path_[place_next_].position - gripper_;
          const scalar_t dist = d.norm();
          if (dist <= budget) {
            gripper_ = place_path_[place_next_].position;
            budget -= dist;
            ++place_next_;
          } else {
            gripper_ += d * (budget / dist);
            budget = 0;
          }
        }
        if (place_next_ >= place_path_.size()) descending_ = true;
      } else {
        if (move_toward(params_.bin_position + vector3_t(0, 0, 0.07), dt)) {
          emit(out.events, in.t, EventKind::block_placed);
          out.block_placed = true;
          ++blocks_placed_;
          if (blocks_placed_ >= params_.blocks_per_trial) {
            state_ = HandoverState::Done;
          } else {
            state_ = HandoverState::Idle;
          }
        }
      }
      break;
    }

    case HandoverState::Backoff:
      if (move_toward(target_->standoff.position, dt)) {
        state_ = HandoverState::PlanApproach;
        last_plan_attempt_ = -1e9;
      }
      break;

    case HandoverState::Done: break;
  }
  return out;
}

}  // namespace handover::task
