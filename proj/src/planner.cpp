#include "handover/planner.hpp"

#include <algorithm>
#include <cmath>

namespace handover::planner {

Obb gripper_body(const Config& c, const matrix3_t& orientation) {
  return Obb{c.position, orientation,
             vector3_t(kGripperHalf[0], kGripperHalf[1], kGripperHalf[2])};
}

bool collides(const Config& c, const matrix3_t& orientation, const CollisionWorld& w,
              scalar_t clearance) {
  const Obb body = gripper_body(c, orientation);
  if (w.table) {
    scalar_t zmin = body.center.z();
    for (int corner = 0; corner < 8; ++corner) {
      vector3_t d;
      for (int a = 0; a < 3; ++a)
        d[a] = (corner >> a) & 1 ? body.half[a] : -body.half[a];
      zmin = std::min(zmin, (body.center + body.rot * d).z());
    }
    if (zmin <= clearance) return true;
  }
  for (const Capsule& cap : w.hand) {
    if (capsule_obb_distance(cap, body) <= clearance) return true;
  }
  if (w.human_body && capsule_obb_distance(*w.human_body, body) <= clearance) return true;
  if (w.block) {
    Obb inflated = *w.block;
    inflated.half.array() += clearance;
    if (obb_overlap(inflated, body)) return true;
  }
  for (const Obb& o : w.obstacles) {
    Obb inflated = o;
    inflated.half.array() += clearance;
    if (obb_overlap(inflated, body)) return true;
  }
  return false;
}

bool segment_free(const vector3_t& a, const vector3_t& b, const matrix3_t& orientation,
                  const CollisionWorld& w, scalar_t clearance) {
  const scalar_t len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len / kDensify)));
  for (int i = 0; i <= steps; ++i) {
    const vector3_t p = a + (b - a) * (static_cast<scalar_t>(i) / steps);
    if (!in_workspace(p)) return false;
    if (collides(Config{p}, orientation, w, clearance)) return false;
  }
  return true;
}

scalar_t path_length(const std::vector<Config>& waypoints) {
  scalar_t len = 0;
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    len += (waypoints[i].position - waypoints[i - 1].position).norm();
  return len;
}

namespace {

struct Tree {
  std::vector<vector3_t> nodes;
  std::vector<int> parent;

  int nearest(const vector3_t& q) const {
    int best = 0;
    scalar_t best_d = (nodes[0] - q).squaredNorm();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const scalar_t d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  int add(const vector3_t& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
    return static_cast<int>(nodes.size()) - 1;
  }

  std::vector<vector3_t> trace(int idx) const {
    std::vector<vector3_t> out;
    for (int i = idx; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;  // leaf..root
  }
};

enum class Extend { Trapped, Advanced, Reached };

Extend extend_tree(Tree& tree, const vector3_t& target, const matrix3_t& orientation,
                   const CollisionWorld& w, scalar_t clearance, int& new_idx) {
  const int near = tree.nearest(target);
  const vector3_t from = tree.nodes[near];
  const scalar_t d = (target - from).norm();
  if (d < 1e-12) {
    new_idx = near;
    return Extend::Reached;
  }
  const bool reaching = d <= kStepSize;
  const vector3_t to =
      reaching ? target : vector3_t(from + (target - from) * (kStepSize / d));
  if (!segment_free(from, to, orientation, w, clearance)) return Extend::Trapped;
  new_idx = tree.add(to, near);
  return reaching ? Extend::Reached : Extend::Advanced;
}

}  // namespace

PlanResult rrt_connect(const Config& start, const Config& goal,
                       const matrix3_t& orientation, const CollisionWorld& w, Rng& rng,
                       int max_iters, scalar_t clearance) {
  PlanResult result;
  if (!in_workspace(start.position) || !in_workspace(goal.position) ||
      collides(start, orientation, w, clearance) ||
      collides(goal, orientation, w, clearance)) {
    result.status = PlanStatus::InvalidEndpoint;
    return result;
  }

  if ((goal.position - start.position).norm() < 1e-12) {
    result.status = PlanStatus::Success;
    result.path.waypoints = {start};
    result.path.total_length = 0;
    return result;
  }

  Tree a, b;
  a.add(start.position, -1);
  b.add(goal.position, -1);
  bool a_is_start = true;
  std::vector<vector3_t> raw;

  for (int iter = 0; iter < max_iters; ++iter) {
    vector3_t target;
    if (rng.uniform() < kGoalBias) {
      target = a_is_start ? goal.position : start.position;
    } else {
      target = vector3_t(rng.uniform(kWorkspaceMin[0], kWorkspaceMax[0]),
                         rng.uniform(kWorkspaceMin[1], kWorkspaceMax[1]),
                         rng.uniform(kWorkspaceMin[2], kWorkspaceMax[2]));
    }
    int a_new = -1;
    if (extend_tree(a, target, orientation, w, clearance, a_new) != Extend::Trapped) {
      const vector3_t meet = a.nodes[a_new];
      int b_new = -1;
      Extend st = Extend::Advanced;
      while (st == Extend::Advanced)
        st = extend_tree(b, meet, orientation, w, clearance, b_new);
      if (st == Extend::Reached) {
        std::vector<vector3_t> from_a = a.trace(a_new);  // meet..root of a
        std::vector<vector3_t> from_b = b.trace(b_new);  // meet..root of b
        std::reverse(from_a.begin(), from_a.end());
        if (!from_b.empty() && !from_a.empty() &&
            (from_b.front() - from_a.back()).norm() < 1e-12)
          from_b.erase(from_b.begin());
        raw = from_a;
        raw.insert(raw.end(), from_b.begin(), from_b.end());
        if (!a_is_start) std::reverse(raw.begin(), raw.end());
        break;
      }
    }
    std::swap(a, b);
    a_is_start = !a_is_start;
  }

  if (raw.empty()) {
    result.status = PlanStatus::PlanFail;
    return result;
  }

  // Shortcut smoothing; the straight start-goal segment is always tried first.
  for (int attempt = 0; attempt < kShortcutAttempts && raw.size() > 2; ++attempt) {
    int i, j;
    if (attempt == 0) {
      i = 0;
      j = static_cast<int>(raw.size()) - 1;
    } else {
      i = rng.uniform_int(0, static_cast<int>(raw.size()) - 2);
      j = rng.uniform_int(i + 1, static_cast<int>(raw.size()) - 1);
    }
    if (j - i < 2) continue;
    if (segment_free(raw[i], raw[j], orientation, w, clearance))
      raw.erase(raw.begin() + i + 1, raw.begin() + j);
  }

  result.status = PlanStatus::Success;
  for (const auto& p : raw) result.path.waypoints.push_back(Config{p});
  result.path.total_length = path_length(result.path.waypoints);
  return result;
}

std::optional<StandoffGrasp> configs_from_frame(const CanonicalGraspFrame& frame,
                                                const vector3_t& block_position) {
  StandoffGrasp out;
  out.frame = frame;
  out.grasp.position = block_position;
  out.standoff.position = block_position - frame.standoff_dist * frame.approach_dir;
  if (!in_workspace(out.grasp.position) || !in_workspace(out.standoff.position))
    return std::nullopt;
  return out;
}

std::optional<StandoffGrasp> standoff_and_grasp(GraspClass g, const Pose& hand_pose,
                                                const Pose& block_pose) {
  const CanonicalGraspFrame frame = canonical_frame(g, hand_pose);
  return configs_from_frame(frame, block_pose.position);
}

}  // namespace handover::planner
