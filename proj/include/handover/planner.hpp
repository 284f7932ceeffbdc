#pragma once

#include "handover/geometry.hpp"
#include "handover/grasp.hpp"
#include "handover/rng.hpp"
#include "handover/types.hpp"

#include <optional>
#include <vector>

namespace handover::planner {

// Free-flying gripper planned in R^3 with a per-query fixed orientation.
inline constexpr scalar_t kWorkspaceMin[3] = {-0.8, -0.8, 0.0};
inline constexpr scalar_t kWorkspaceMax[3] = {0.8, 0.8, 1.2};
inline constexpr scalar_t kStepSize = 0.03;
inline constexpr scalar_t kGoalBias = 0.1;
inline constexpr scalar_t kDensify = 0.01;
inline constexpr scalar_t kClearance = 0.005;
inline constexpr int kMaxIters = 5000;
inline constexpr int kShortcutAttempts = 100;

/** Gripper collision body: 8 x 2 x 6 cm box around the configuration. */
inline constexpr scalar_t kGripperHalf[3] = {0.04, 0.01, 0.03};

struct Config {
  vector3_t position{vector3_t::Zero()};
};

inline bool in_workspace(const vector3_t& p) {
  for (int i = 0; i < 3; ++i)
    if (p[i] < kWorkspaceMin[i] || p[i] > kWorkspaceMax[i]) return false;
  return true;
}

struct CollisionWorld {
  std::vector<Capsule> hand;          // perceived or ground-truth hand geometry
  std::optional<Obb> block;
  std::optional<Capsule> human_body;  // vertical capsule
  std::vector<Obb> obstacles;         // extra static geometry (test worlds)
  bool table{true};                   // half-space z <= 0

  static CollisionWorld empty() {
    return CollisionWorld{{}, std::nullopt, std::nullopt, {}, true};
  }
};

/** Gripper body box at config c with the query orientation. */
Obb gripper_body(const Config& c, const matrix3_t& orientation);

/** True iff the gripper body intersects any primitive inflated by clearance. */
bool collides(const Config& c, const matrix3_t& orientation, const CollisionWorld& w,
              scalar_t clearance);

struct Path {
  std::vector<Config> waypoints;
  scalar_t total_length{0};
};

enum class PlanStatus { Success, PlanFail, InvalidEndpoint };

struct PlanResult {
  PlanStatus status{PlanStatus::PlanFail};
  Path path;
  bool ok() const { return status == PlanStatus::Success; }
};

/**
 * Bidirectional RRT-connect for the gripper position with fixed orientation;
 * the returned path is shortcut-smoothed and collision-free at 1 cm
 * densification with the given clearance.
 */
PlanResult rrt_connect(const Config& start, const Config& goal,
                       const matrix3_t& orientation, const CollisionWorld& w, Rng& rng,
                       int max_iters = kMaxIters, scalar_t clearance = kClearance);

/** Straight segment collision-free at 1 cm densification? */
bool segment_free(const vector3_t& a, const vector3_t& b, const matrix3_t& orientation,
                  const CollisionWorld& w, scalar_t clearance);

struct StandoffGrasp {
  Config standoff;
  Config grasp;
  CanonicalGraspFrame frame;
};

/**
 * Grasp config centered on the block along the frame's approach, standoff
 * retreated by standoff_dist. nullopt when either leaves the workspace.
 * Throws NotHoldingObject for non-holding classes.
 */
std::optional<StandoffGrasp> standoff_and_grasp(GraspClass g, const Pose& hand_pose,
                                                const Pose& block_pose);

/** Same synthesis from an explicit frame (used by the baseline policies). */
std::optional<StandoffGrasp> configs_from_frame(const CanonicalGraspFrame& frame,
                                                const vector3_t& block_position);

scalar_t path_length(const std::vector<Config>& waypoints);

}  // namespace handover::planner
