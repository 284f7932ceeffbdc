#pragma once

#include "handover/types.hpp"

#include <array>
#include <optional>
#include <string>

namespace handover {

/**
 * Seven-way grasp taxonomy: five object-holding classes plus the two
 * empty-hand classes (waiting, others).
 */
enum class GraspClass : int {
  OnOpenPalm = 0,
  PinchBottom = 1,
  PinchTop = 2,
  PinchSide = 3,
  Lifting = 4,
  Waiting = 5,
  Others = 6,
};

inline constexpr int kNumGraspClasses = 7;
inline constexpr std::array<GraspClass, 5> kHoldingClasses = {
    GraspClass::OnOpenPalm, GraspClass::PinchBottom, GraspClass::PinchTop,
    GraspClass::PinchSide, GraspClass::Lifting};

inline bool is_holding(GraspClass g) {
  return g != GraspClass::Waiting && g != GraspClass::Others;
}

std::string to_label(GraspClass g);
std::optional<GraspClass> from_label(const std::string& label);

/** Gripper approach axis, roll about it, and pre-grasp retreat distance. */
struct CanonicalGraspFrame {
  vector3_t approach_dir{0, 0, -1};  // unit, world frame, direction of travel
  scalar_t gripper_roll{0};          // radians about approach_dir
  scalar_t standoff_dist{0.12};      // meters
};

inline constexpr scalar_t kStandoffDist = 0.12;

/**
 * Canonical frame for a holding class, reoriented by the hand pose's yaw
 * only, so approaches stay gravity-aligned or horizontal.
 * Throws NotHoldingObject for Waiting/Others.
 */
CanonicalGraspFrame canonical_frame(GraspClass g, const Pose& hand_pose);

/**
 * World rotation for a gripper with the given approach direction and roll:
 * local +z maps to approach_dir, local +x (jaw closing axis) is set by roll.
 */
matrix3_t gripper_rotation(const vector3_t& approach_dir, scalar_t roll);

/** Jaw closing axis in the world frame. */
inline vector3_t closing_axis(const CanonicalGraspFrame& f) {
  return gripper_rotation(f.approach_dir, f.gripper_roll).col(0);
}

}  // namespace handover
