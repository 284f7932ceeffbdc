#include "handover/grasp.hpp"
#include "handover/rng.hpp"
#include "handover/scenegen.hpp"
#include "handover/types.hpp"

#include <doctest.h>

#include <cmath>

using namespace handover;

namespace {

Pose rz_pose(double deg, const vector3_t& p) {
  return Pose{p, yaw_quat(deg * M_PI / 180.0)};
}

Eigen::Matrix4d homogeneous(const Pose& p) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = p.orientation.toRotationMatrix();
  t.topRightCorner<3, 1>() = p.position;
  return t;
}

Pose random_pose(Rng& rng) {
  quaternion_t q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return Pose{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}, q};
}

}  // namespace

TEST_CASE("compose identity and inverse") {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Pose p = random_pose(rng);
    const Pose pi = compose(Pose::identity(), p);
    CHECK((pi.position - p.position).norm() == doctest::Approx(0.0).epsilon(1e-12));
    const Pose id = compose(p, inverse(p));
    CHECK(id.position.norm() < 1e-9);
    CHECK(std::abs(std::abs(id.orientation.w()) - 1.0) < 1e-9);
  }
}

TEST_CASE("compose matches homogeneous-matrix oracle") {
  const Pose a = rz_pose(90, {1, 0, 0});
  const Pose b = rz_pose(90, {0, 0, 0});
  const Pose c = compose(a, b);
  const Eigen::Matrix4d oracle = homogeneous(a) * homogeneous(b);
  CHECK((homogeneous(c) - oracle).norm() < 1e-12);
  // Rz(180) at (1,0,0)
  CHECK(c.position.x() == doctest::Approx(1.0));
  CHECK(yaw_of(c.orientation) == doctest::Approx(M_PI));

  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng), q = random_pose(rng);
    CHECK((homogeneous(compose(p, q)) - homogeneous(p) * homogeneous(q)).norm() < 1e-9);
  }
}

TEST_CASE("quaternion norm preserved over long composition chains") {
  Rng rng(3);
  Pose acc;
  for (int i = 0; i < 1000; ++i) {
    acc = compose(acc, random_pose(rng));
    CHECK(std::abs(acc.orientation.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("transform_cloud basics") {
  PointCloud c(3, 1);
  c.col(0) = vector3_t(0, 0, 0);
  const PointCloud moved = transform_cloud(Pose{{1, 0, 0}, quaternion_t::Identity()}, c);
  CHECK(moved(0, 0) == doctest::Approx(1.0));

  PointCloud unit(3, 1);
  unit.col(0) = vector3_t(1, 0, 0);
  const PointCloud rot = transform_cloud(rz_pose(90, {0, 0, 0}), unit);
  CHECK((rot.col(0) - vector3_t(0, 1, 0)).norm() < 1e-9);

  const PointCloud same = transform_cloud(Pose::identity(), unit);
  CHECK((same - unit).norm() == 0.0);
}

TEST_CASE("transform_cloud round trip") {
  Rng rng(5);
  PointCloud c(3, 64);
  for (int i = 0; i < 64; ++i)
    c.col(i) = vector3_t(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  for (int i = 0; i < 10; ++i) {
    const Pose p = random_pose(rng);
    const PointCloud back = transform_cloud(p, transform_cloud(inverse(p), c));
    CHECK((back - c).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("grasp class labels round trip") {
  CHECK(kNumGraspClasses == 7);
  int holding = 0;
  for (int i = 0; i < kNumGraspClasses; ++i) {
    const auto g = static_cast<GraspClass>(i);
    const auto back = from_label(to_label(g));
    REQUIRE(back.has_value());
    CHECK(*back == g);
    if (is_holding(g)) ++holding;
  }
  CHECK(holding == 5);
  CHECK_FALSE(is_holding(GraspClass::Waiting));
  CHECK_FALSE(is_holding(GraspClass::Others));
  CHECK_FALSE(from_label("fist").has_value());
}

TEST_CASE("canonical frame decision table") {
  const Pose id;
  const auto palm = canonical_frame(GraspClass::OnOpenPalm, id);
  CHECK((palm.approach_dir - vector3_t(0, 0, -1)).norm() < 1e-12);
  CHECK(palm.standoff_dist == doctest::Approx(0.12));

  const auto top = canonical_frame(GraspClass::PinchTop, id);
  CHECK((top.approach_dir - vector3_t(-1, 0, 0)).norm() < 1e-12);
  CHECK(std::abs(top.approach_dir.z()) < 1e-12);

  const auto bottom = canonical_frame(GraspClass::PinchBottom, id);
  CHECK((bottom.approach_dir - vector3_t(0, 0, -1)).norm() < 1e-12);

  CHECK_THROWS_AS(canonical_frame(GraspClass::Waiting, id), NotHoldingObject);
  CHECK_THROWS_AS(canonical_frame(GraspClass::Others, id), NotHoldingObject);
}

TEST_CASE("canonical frame rotates with hand yaw (compose oracle)") {
  const Pose yawed = rz_pose(90, {0.2, 0.1, 0.3});
  const auto side_id = canonical_frame(GraspClass::PinchSide, Pose{});
  const auto side = canonical_frame(GraspClass::PinchSide, yawed);
  const vector3_t oracle = yawed.orientation * side_id.approach_dir;
  CHECK((side.approach_dir - oracle).norm() < 1e-9);

  Rng rng(17);
  for (const GraspClass g : kHoldingClasses) {
    for (int i = 0; i < 16; ++i) {
      const double yaw = rng.uniform(-M_PI, M_PI);
      const auto f = canonical_frame(g, Pose{{0, 0, 0}, yaw_quat(yaw)});
      CHECK(std::abs(f.approach_dir.norm() - 1.0) < 1e-9);
      const auto f0 = canonical_frame(g, Pose{});
      CHECK((f.approach_dir - yaw_quat(yaw) * f0.approach_dir).norm() < 1e-9);
      // Closing axis turns with the hand as well.
      const vector3_t c0 = closing_axis(f0);
      const vector3_t c = closing_axis(f);
      CHECK(std::abs(std::abs(c.dot(yaw_quat(yaw) * c0)) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("canonical approach keeps the gripper body away from the fingers") {
  // The gripper trails from the grasp point along -approach_dir; the finger
  // region must not lie on that side (angle between the retreat direction and
  // the block-to-fingers line >= 90 degrees).
  Rng rng(23);
  for (const GraspClass g : kHoldingClasses) {
    for (int trial = 0; trial < 12; ++trial) {
      const double yaw = rng.uniform(-M_PI, M_PI);
      Rng scene_rng(mix_seed(100, trial));
      const auto cfg = scenegen::template_config(g);
      const Pose cam = scenegen::look_at({0.8, 0, 0.8}, {0, 0, 0.3});
      const auto scene = scenegen::build_scene(g, 0, cfg, {0, 0, 0.3}, yaw, cam, scene_rng);
      REQUIRE(scene.block.has_value());
      const auto frame = canonical_frame(g, scene.hand_pose);

      vector3_t finger_centroid = vector3_t::Zero();
      int count = 0;
      for (const auto& cap : scene.hand.finger_capsules()) {
        finger_centroid += 0.5 * (cap.a + cap.b);
        ++count;
      }
      finger_centroid /= count;
      const vector3_t to_fingers = finger_centroid - scene.block->pose.position;
      const vector3_t retreat = -frame.approach_dir;
      CHECK(retreat.dot(to_fingers) <= 1e-9);  // angle >= 90 deg
    }
  }
}
