#include "handover/grasp.hpp"

#include <cmath>

namespace handover {

std::string to_label(GraspClass g) {
  switch (g) {
    case GraspClass::OnOpenPalm: return "on-open-palm";
    case GraspClass::PinchBottom: return "pinch-bottom";
    case GraspClass::PinchTop: return "pinch-top";
    case GraspClass::PinchSide: return "pinch-side";
    case GraspClass::Lifting: return "lifting";
    case GraspClass::Waiting: return "waiting";
    case GraspClass::Others: return "others";
  }
  return "others";
}

std::optional<GraspClass> from_label(const std::string& label) {
  for (int i = 0; i < kNumGraspClasses; ++i) {
    const auto g = static_cast<GraspClass>(i);
    if (to_label(g) == label) return g;
  }
  return std::nullopt;
}

matrix3_t gripper_rotation(const vector3_t& approach_dir, scalar_t roll) {
  const vector3_t z = approach_dir.normalized();
  vector3_t x0;
  if (std::abs(z.z()) > 0.9) {
    x0 = (vector3_t::UnitX() - z.x() * z).normalized();
  } else {
    x0 = z.cross(vector3_t::UnitZ()).normalized();  // horizontal, left of travel
  }
  const vector3_t x = angleaxis_t(roll, z) * x0;
  const vector3_t y = z.cross(x);
  matrix3_t r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

namespace {

// Decision table in the yaw-aligned hand frame (fingers along +x):
// vertical approaches for palm/bottom/lifting grasps, horizontal from beyond
// the fingertips for top/side pinches. Rolls keep the closing sweep out of
// the finger-occupied region of each grasp template.
struct FrameEntry {
  vector3_t approach;
  scalar_t roll;
};

FrameEntry hand_frame_entry(GraspClass g) {
  switch (g) {
    case GraspClass::OnOpenPalm: return {{0, 0, -1}, M_PI_2};
    case GraspClass::PinchBottom: return {{0, 0, -1}, 0.0};
    case GraspClass::PinchTop: return {{-1, 0, 0}, M_PI_2};
    case GraspClass::PinchSide: return {{-1, 0, 0}, M_PI_2};
    case GraspClass::Lifting: return {{0, 0, -1}, M_PI_2};
    default: throw NotHoldingObject{};
  }
}

}  // namespace

CanonicalGraspFrame canonical_frame(GraspClass g, const Pose& hand_pose) {
  if (!is_holding(g)) throw NotHoldingObject{};
  const FrameEntry e = hand_frame_entry(g);
  const scalar_t yaw = yaw_of(hand_pose.orientation);
  CanonicalGraspFrame f;
  f.approach_dir = yaw_quat(yaw) * e.approach;
  f.approach_dir.normalize();
  // Vertical approaches are unchanged by yaw; carry the yaw in the roll so
  // the closing axis still turns with the hand.
  f.gripper_roll = std::abs(e.approach.z()) > 0.9 ? e.roll - yaw : e.roll;
  f.standoff_dist = kStandoffDist;
  return f;
}

}  // namespace handover
