#include "handover/planner.hpp"

#include <doctest.h>

#include <cmath>

using namespace handover;
using namespace handover::planner;

namespace {

CollisionWorld block_world(const vector3_t& center) {
  CollisionWorld w = CollisionWorld::empty();
  w.block = Obb{center, matrix3_t::Identity(), {0.025, 0.025, 0.025}};
  return w;
}

// wall across x = 0 with a 12 cm gap at y = 0, full height
CollisionWorld corridor_world() {
  CollisionWorld w = CollisionWorld::empty();
  auto panel = [](scalar_t y_center, scalar_t y_half) {
    return Obb{{0, y_center, 0.6}, matrix3_t::Identity(), {0.02, y_half, 0.6}};
  };
  w.obstacles.push_back(panel(-0.43, 0.37));
  w.obstacles.push_back(panel(0.43, 0.37));
  return w;
}

}  // namespace

TEST_CASE("collides: basic cases") {
  const matrix3_t id = matrix3_t::Identity();
  CHECK_FALSE(collides(Config{{0, 0, 0.5}}, id, CollisionWorld::empty(), 0.005));
  CHECK(collides(Config{{0, 0, 0.01}}, id, CollisionWorld::empty(), 0.005));  // table

  const auto w = block_world({0.2, 0, 0.3});
  CHECK(collides(Config{{0.2, 0, 0.3}}, id, w, 0.005));  // inside the block
  CHECK_FALSE(collides(Config{{0.2, 0, 0.6}}, id, w, 0.005));
}

TEST_CASE("collides: clearance brackets a finger capsule (distance oracle)") {
  // capsule of radius 2 cm; gripper box placed so the box-to-axis distance is
  // 2.9 cm (9 mm surface gap): clear at 5 mm clearance, hit at 10 mm.
  CollisionWorld w = CollisionWorld::empty();
  w.table = false;
  w.hand.push_back(Capsule{{0, -0.1, 0.3}, {0, 0.1, 0.3}, 0.02});
  const matrix3_t id = matrix3_t::Identity();
  const Config c{{0.069, 0.0, 0.3}};  // box +x half extent 0.04

  // point-capsule oracle: min distance from the capsule axis to the box
  scalar_t oracle = 1e9;
  for (int i = 0; i <= 400; ++i) {
    const vector3_t p(0, -0.1 + 0.2 * i / 400.0, 0.3);
    oracle = std::min(oracle, point_obb_distance(p, gripper_body(c, id)));
  }
  CHECK(oracle == doctest::Approx(0.029).epsilon(1e-6));

  CHECK_FALSE(collides(c, id, w, 0.005));  // 9 mm gap > 5 mm clearance
  CHECK(collides(c, id, w, 0.010));        // 9 mm gap < 10 mm clearance
}

TEST_CASE("rrt_connect trivial cases") {
  const matrix3_t id = matrix3_t::Identity();
  Rng rng(1);
  const auto w = CollisionWorld::empty();

  const auto same = rrt_connect(Config{{0.1, 0, 0.3}}, Config{{0.1, 0, 0.3}}, id, w, rng);
  REQUIRE(same.ok());
  CHECK(same.path.waypoints.size() == 1);
  CHECK(same.path.total_length == 0.0);

  const auto wb = block_world({0.3, 0, 0.3});
  const auto bad = rrt_connect(Config{{-0.3, 0, 0.3}}, Config{{0.3, 0, 0.3}}, id, wb, rng);
  CHECK(bad.status == PlanStatus::InvalidEndpoint);

  const auto outside =
      rrt_connect(Config{{-0.3, 0, 0.3}}, Config{{0.9, 0, 0.3}}, id, w, rng);
  CHECK(outside.status == PlanStatus::InvalidEndpoint);
}

TEST_CASE("empty world: smoothed length close to the straight line") {
  const matrix3_t id = matrix3_t::Identity();
  const auto w = CollisionWorld::empty();
  const Config start{{-0.3, 0, 0.3}}, goal{{0.3, 0, 0.3}};
  const scalar_t straight = (goal.position - start.position).norm();
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(mix_seed(1000, seed));
    const auto res = rrt_connect(start, goal, id, w, rng);
    REQUIRE(res.ok());
    CHECK(res.path.total_length <= 1.10 * straight);
    CHECK((res.path.waypoints.front().position - start.position).norm() < 1e-12);
    CHECK((res.path.waypoints.back().position - goal.position).norm() < 1e-12);
  }
}

TEST_CASE("corridor world: success rate and path validity") {
  // wall across x = 0, 12 cm gap centered at y = 0; gripper must thread it
  const CollisionWorld w = corridor_world();
  const matrix3_t id = matrix3_t::Identity();
  const Config start{{-0.4, 0, 0.5}}, goal{{0.4, 0, 0.5}};
  int successes = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(77, seed));
    const auto res = rrt_connect(start, goal, id, w, rng);
    if (!res.ok()) continue;
    ++successes;
    // full densified recheck of the returned path
    bool free = true;
    for (std::size_t i = 1; i < res.path.waypoints.size(); ++i)
      free = free && segment_free(res.path.waypoints[i - 1].position,
                                  res.path.waypoints[i].position, id, w, kClearance);
    CHECK(free);
    // the path must actually pass through the gap region
    bool through_gap = false;
    for (std::size_t i = 1; i < res.path.waypoints.size(); ++i) {
      const vector3_t& a = res.path.waypoints[i - 1].position;
      const vector3_t& b = res.path.waypoints[i].position;
      for (int s = 0; s <= 100; ++s) {
        const vector3_t p = a + (b - a) * (s / 100.0);
        if (std::abs(p.x()) < 0.03 && std::abs(p.y()) < 0.07) through_gap = true;
      }
    }
    CHECK(through_gap);
  }
  CHECK(successes >= 18);
}

TEST_CASE("plans are deterministic given the seed") {
  const auto w = block_world({0.0, 0.1, 0.4});
  const matrix3_t id = matrix3_t::Identity();
  const Config start{{-0.4, 0, 0.3}}, goal{{0.4, 0.1, 0.6}};
  Rng r1(12345), r2(12345);
  const auto a = rrt_connect(start, goal, id, w, r1);
  const auto b = rrt_connect(start, goal, id, w, r2);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  REQUIRE(a.path.waypoints.size() == b.path.waypoints.size());
  for (std::size_t i = 0; i < a.path.waypoints.size(); ++i)
    CHECK((a.path.waypoints[i].position - b.path.waypoints[i].position).norm() == 0.0);
  CHECK(a.path.total_length == b.path.total_length);
}

TEST_CASE("returned paths are collision-free at densification (random worlds)") {
  Rng world_rng(5);
  const matrix3_t id = matrix3_t::Identity();
  int planned = 0;
  for (int trial = 0; trial < 30; ++trial) {
    CollisionWorld w = CollisionWorld::empty();
    for (int c = 0; c < 3; ++c) {
      const vector3_t a(world_rng.uniform(-0.4, 0.4), world_rng.uniform(-0.4, 0.4),
                        world_rng.uniform(0.1, 0.9));
      const vector3_t b = a + vector3_t(world_rng.uniform(-0.2, 0.2),
                                        world_rng.uniform(-0.2, 0.2),
                                        world_rng.uniform(-0.2, 0.2));
      w.hand.push_back(Capsule{a, b, world_rng.uniform(0.02, 0.06)});
    }
    const Config start{{-0.6, world_rng.uniform(-0.3, 0.3), 0.4}};
    const Config goal{{0.6, world_rng.uniform(-0.3, 0.3), 0.5}};
    Rng rng(mix_seed(31, trial));
    const auto res = rrt_connect(start, goal, id, w, rng);
    if (!res.ok()) continue;
    ++planned;
    for (std::size_t i = 1; i < res.path.waypoints.size(); ++i)
      CHECK(segment_free(res.path.waypoints[i - 1].position,
                         res.path.waypoints[i].position, id, w, kClearance));
  }
  CHECK(planned >= 25);
}

TEST_CASE("standoff and grasp synthesis") {
  const Pose hand;  // identity yaw
  const Pose block{{0.3, 0.0, 0.25}, quaternion_t::Identity()};
  const auto palm = standoff_and_grasp(GraspClass::OnOpenPalm, hand, block);
  REQUIRE(palm.has_value());
  CHECK((palm->grasp.position - vector3_t(0.3, 0, 0.25)).norm() < 1e-12);
  CHECK((palm->standoff.position - vector3_t(0.3, 0, 0.37)).norm() < 1e-12);
  CHECK((palm->frame.approach_dir - vector3_t(0, 0, -1)).norm() < 1e-12);

  const auto top = standoff_and_grasp(GraspClass::PinchTop, hand, block);
  REQUIRE(top.has_value());
  const vector3_t d = top->standoff.position - top->grasp.position;
  CHECK(std::abs(d.z()) < 1e-12);
  CHECK(d.norm() == doctest::Approx(0.12));

  // horizontal standoff pushed past the workspace edge
  const Pose edge{{0.78, 0.0, 0.3}, quaternion_t::Identity()};
  CHECK_FALSE(standoff_and_grasp(GraspClass::PinchTop, hand, edge).has_value());

  CHECK_THROWS_AS(standoff_and_grasp(GraspClass::Waiting, hand, block),
                  NotHoldingObject);
}
