#pragma once

#include "handover/rng.hpp"
#include "handover/scenegen.hpp"
#include "handover/types.hpp"

#include <string>

namespace handover::humansim {

struct BehaviorProfile {
  std::string name{"attentive"};
  scalar_t p_outlier{0.0};
  scalar_t reposition_rate{0.5};    // events per minute
  scalar_t grasp_change_rate{0.3};  // events per minute
  scalar_t still_fraction{0.8};
  scalar_t jitter_sigma{0.002};     // meters per frame while moving

  static BehaviorProfile attentive();
  static BehaviorProfile freeform();
  static BehaviorProfile distracted();
  static BehaviorProfile by_name(const std::string& name);
};

inline constexpr int kBlocksPerTrial = 4;
inline constexpr scalar_t kBlockTimeout = 120.0;  // seconds
inline constexpr scalar_t kPickupDelay = 2.0;     // seconds to fetch the next block

/**
 * Simulated study participant: presents blocks one at a time, jitters and
 * repositions the hand, changes grasps (outliers with p_outlier), releases on
 * grasp success, and gives up on a block after the per-block timeout.
 */
class Human {
 public:
  Human(BehaviorProfile profile, int subject_id, std::uint64_t seed);

  /** Advance dt seconds and return the current ground-truth scene. */
  scenegen::Scene advance(scalar_t dt, const Pose& camera);

  void notify_grasp_success();
  void notify_finger_contact();

  bool done() const { return blocks_remaining_ == 0; }
  int blocks_remaining() const { return blocks_remaining_; }
  int repositions() const { return repositions_; }
  int grasp_changes() const { return grasp_changes_; }
  int timeouts() const { return timeouts_; }
  GraspClass current_grasp() const { return grasp_; }
  bool presenting() const { return presenting_; }
  bool outlier() const { return outlier_; }

 private:
  void sample_grasp();
  void new_hold_point();

  BehaviorProfile profile_;
  int subject_id_;
  Rng rng_;

  int blocks_remaining_{kBlocksPerTrial};
  bool presenting_{false};
  bool outlier_{false};
  GraspClass grasp_{GraspClass::Waiting};
  scenegen::HandJointConfig joints_;

  vector3_t hand_pos_{0.35, 0.0, 0.33};
  vector3_t hold_point_{0.35, 0.0, 0.33};
  scalar_t yaw_{M_PI};
  bool still_{false};
  scalar_t phase_left_{0};      // time left in the current still/move phase
  scalar_t pickup_left_{kPickupDelay};
  scalar_t block_elapsed_{0};
  scalar_t t_{0};

  int repositions_{0};
  int grasp_changes_{0};
  int timeouts_{0};
};

/**
 * Standalone outlier scene with a randomized camera, mirroring the dataset
 * sampler but with joints outside every grasp template.
 */
scenegen::Scene outlier_scene(Rng& rng);

}  // namespace handover::humansim
