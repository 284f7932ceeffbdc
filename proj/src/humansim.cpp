#include "handover/humansim.hpp"

#include <algorithm>
#include <cmath>

namespace handover::humansim {

BehaviorProfile BehaviorProfile::attentive() {
  return BehaviorProfile{"attentive", 0.0, 0.5, 0.3, 0.8, 0.002};
}
BehaviorProfile BehaviorProfile::freeform() {
  return BehaviorProfile{"freeform", 0.23, 1.0, 0.8, 0.7, 0.003};
}
BehaviorProfile BehaviorProfile::distracted() {
  return BehaviorProfile{"distracted", 0.23, 2.0, 1.5, 0.5, 0.005};
}
BehaviorProfile BehaviorProfile::by_name(const std::string& name) {
  if (name == "attentive") return attentive();
  if (name == "freeform") return freeform();
  if (name == "distracted") return distracted();
  throw BadK("unknown behavior profile: " + name);
}

Human::Human(BehaviorProfile profile, int subject_id, std::uint64_t seed)
    : profile_(std::move(profile)), subject_id_(subject_id), rng_(seed) {
  joints_ = scenegen::jittered_config(GraspClass::Waiting, rng_);
  pickup_left_ = 0.5;  // brief settle before the first block appears
}

void Human::sample_grasp() {
  outlier_ = profile_.p_outlier > 0.0 && rng_.bernoulli(profile_.p_outlier);
  if (outlier_) {
    grasp_ = GraspClass::Others;
    joints_ = scenegen::outlier_config(rng_);
    return;
  }
  grasp_ = kHoldingClasses[rng_.uniform_int(0, 4)];
  joints_ = scenegen::jittered_config(grasp_, rng_);
}

void Human::new_hold_point() {
  hold_point_ = vector3_t(rng_.uniform(0.30, 0.48), rng_.uniform(-0.22, 0.22),
                          rng_.uniform(0.28, 0.42));
  yaw_ = M_PI + rng_.uniform(-0.45, 0.45);
  still_ = false;
  phase_left_ = rng_.exponential(std::max(0.2, 6.0 * (1.0 - profile_.still_fraction)));
}

scenegen::Scene Human::advance(scalar_t dt, const Pose& camera) {
  t_ += dt;

  if (!presenting_ && blocks_remaining_ > 0) {
    pickup_left_ -= dt;
    if (pickup_left_ <= 0.0) {
      presenting_ = true;
      block_elapsed_ = 0.0;
      sample_grasp();
      new_hold_point();
      hand_pos_ = hold_point_ + vector3_t(rng_.uniform(-0.05, 0.05),
                                          rng_.uniform(-0.05, 0.05), -0.10);
    }
  } else if (presenting_) {
    block_elapsed_ += dt;
    if (block_elapsed_ > kBlockTimeout) {
      ++timeouts_;
      --blocks_remaining_;
      presenting_ = false;
      pickup_left_ = kPickupDelay;
      grasp_ = GraspClass::Waiting;
      outlier_ = false;
      joints_ = scenegen::jittered_config(GraspClass::Waiting, rng_);
    }
  }

  if (presenting_) {
    // Poisson-timed repositions and grasp changes
    if (rng_.uniform() < profile_.reposition_rate * dt / 60.0) {
      ++repositions_;
      new_hold_point();
    }
    if (rng_.uniform() < profile_.grasp_change_rate * dt / 60.0) {
      const GraspClass before = grasp_;
      const bool before_outlier = outlier_;
      sample_grasp();
      if (grasp_ != before || outlier_ != before_outlier) ++grasp_changes_;
      still_ = false;
      phase_left_ = std::max(phase_left_, 0.3);
    }
  }

  // still/move alternation; the hand is frozen while still
  phase_left_ -= dt;
  if (phase_left_ <= 0.0) {
    still_ = !still_;
    const scalar_t mean = still_ ? 6.0 * profile_.still_fraction
                                 : 6.0 * (1.0 - profile_.still_fraction);
    phase_left_ = rng_.exponential(std::max(0.2, mean));
  }
  if (!still_) {
    hand_pos_ += (hold_point_ - hand_pos_) * std::min(1.0, 4.0 * dt);
    hand_pos_ += vector3_t(rng_.normal(0.0, profile_.jitter_sigma),
                           rng_.normal(0.0, profile_.jitter_sigma),
                           rng_.normal(0.0, profile_.jitter_sigma));
  }

  if (presenting_ && outlier_) {
    Rng block_rng(mix_seed(0x0071e5, static_cast<std::uint64_t>(blocks_remaining_)));
    return scenegen::build_outlier_scene(subject_id_, joints_, hand_pos_, yaw_, camera,
                                         block_rng);
  }
  const GraspClass g = presenting_ ? grasp_ : GraspClass::Waiting;
  Rng block_rng(mix_seed(0xb10c4, static_cast<std::uint64_t>(blocks_remaining_)));
  return scenegen::build_scene(g, subject_id_, joints_, hand_pos_, yaw_, camera,
                               block_rng);
}

void Human::notify_grasp_success() {
  if (!presenting_) return;
  --blocks_remaining_;
  presenting_ = false;
  pickup_left_ = kPickupDelay;
  grasp_ = GraspClass::Waiting;
  outlier_ = false;
  joints_ = scenegen::jittered_config(GraspClass::Waiting, rng_);
  still_ = false;
  phase_left_ = rng_.exponential(1.0);
}

void Human::notify_finger_contact() {
  if (!presenting_) return;
  ++repositions_;
  new_hold_point();
  if (rng_.bernoulli(0.5)) {
    const GraspClass before = grasp_;
    const bool before_outlier = outlier_;
    sample_grasp();
    if (grasp_ != before || outlier_ != before_outlier) ++grasp_changes_;
  }
}

scenegen::Scene outlier_scene(Rng& rng) {
  const scenegen::HandJointConfig cfg = scenegen::outlier_config(rng);
  const scalar_t yaw = rng.uniform(-M_PI, M_PI);
  const vector3_t pos(0.0, 0.0, 0.30);
  const scalar_t az = rng.uniform(-M_PI / 3, M_PI / 3);
  const scalar_t el = rng.uniform(10.0, 50.0) * M_PI / 180.0;
  const scalar_t range = rng.uniform(0.6, 1.1);
  const vector3_t cam = pos + range * vector3_t(std::cos(el) * std::cos(az),
                                                std::cos(el) * std::sin(az), std::sin(el));
  return scenegen::build_outlier_scene(0, cfg, pos, yaw, scenegen::look_at(cam, pos), rng);
}

}  // namespace handover::humansim
