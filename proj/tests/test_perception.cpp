#include "handover/perception.hpp"

#include <doctest.h>

#include <cmath>

using namespace handover;
using namespace handover::perception;

namespace {

// drives a Stream with scripted classifications at 20 Hz
struct Script {
  std::vector<std::pair<GraspClass, scalar_t>> outputs;
  std::size_t next{0};
};

Stream scripted_stream(Script& script, StreamParams sp = {}) {
  return Stream(
      [&script](const PointCloud&) {
        const auto out = script.outputs[std::min(script.next, script.outputs.size() - 1)];
        ++script.next;
        return out;
      },
      sp);
}

Frame frame_at(scalar_t t, const vector3_t& pos) {
  Frame f;
  f.t = t;
  f.hand_pose = Pose{pos, quaternion_t::Identity()};
  f.cloud = PointCloud(3, 64);
  f.cloud.setZero();
  return f;
}

}  // namespace

TEST_CASE("unanimous confident window") {
  Script script;
  for (int i = 0; i < 40; ++i) script.outputs.push_back({GraspClass::PinchTop, 0.95});
  Stream s = scripted_stream(script);
  PerceptionOut out;
  for (int i = 0; i < 20; ++i) out = s.step(frame_at(0.05 * (i + 1), {0.3, 0, 0.3}));
  CHECK(out.filtered_class == GraspClass::PinchTop);
  CHECK_FALSE(out.uncertain);
  CHECK(out.confidence == doctest::Approx(0.95));
  CHECK(out.object_present);
  CHECK(out.hand_still);  // stationary for well over the stillness window
}

TEST_CASE("majority vote matches a counting oracle; ties break to most recent") {
  StreamParams sp;
  sp.window = 5;
  // alternating ...Top,Side,Top,Side,Top -> majority PinchTop
  Script script;
  for (int i = 0; i < 9; ++i)
    script.outputs.push_back(
        {i % 2 == 0 ? GraspClass::PinchTop : GraspClass::PinchSide, 0.9});
  Stream s = scripted_stream(script, sp);
  PerceptionOut out;
  for (int i = 0; i < 9; ++i) out = s.step(frame_at(0.05 * (i + 1), {0.3, 0, 0.3}));
  // window = {Top,Side,Top,Side,Top}: 3 Top vs 2 Side
  CHECK(out.filtered_class == GraspClass::PinchTop);

  // tie 2-2 within window of 4: most recent of the tied classes wins
  StreamParams sp4;
  sp4.window = 4;
  Script script2;
  script2.outputs = {{GraspClass::PinchTop, 0.9},
                     {GraspClass::PinchTop, 0.9},
                     {GraspClass::PinchSide, 0.9},
                     {GraspClass::PinchSide, 0.9}};
  Stream s2 = scripted_stream(script2, sp4);
  PerceptionOut out2;
  for (int i = 0; i < 4; ++i) out2 = s2.step(frame_at(0.05 * (i + 1), {0.3, 0, 0.3}));
  CHECK(out2.filtered_class == GraspClass::PinchSide);
}

TEST_CASE("majority filter never outputs a class absent from the window") {
  Rng rng(9);
  Script script;
  for (int i = 0; i < 200; ++i)
    script.outputs.push_back(
        {static_cast<GraspClass>(rng.uniform_int(0, 6)), rng.uniform(0.1, 1.0)});
  Stream s = scripted_stream(script);
  StreamParams sp;
  for (int i = 0; i < 200; ++i) {
    const auto out = s.step(frame_at(0.05 * (i + 1), {0.3, 0, 0.3}));
    bool in_window = false;
    for (int k = std::max(0, i - sp.window + 1); k <= i; ++k)
      if (script.outputs[k].first == out.filtered_class) in_window = true;
    CHECK(in_window);
    CHECK(out.object_present == is_holding(out.filtered_class));
  }
}

TEST_CASE("stillness thresholds and monotonicity") {
  // stationary hand: still after the window fills
  {
    Script script;
    for (int i = 0; i < 30; ++i) script.outputs.push_back({GraspClass::Waiting, 0.9});
    Stream s = scripted_stream(script);
    PerceptionOut out;
    for (int i = 0; i < 15; ++i) out = s.step(frame_at(0.05 * (i + 1), {0.3, 0.1, 0.3}));
    CHECK(out.hand_still);
  }
  // 5 cm displacement with eps 1 cm: not still
  {
    Script script;
    for (int i = 0; i < 30; ++i) script.outputs.push_back({GraspClass::Waiting, 0.9});
    Stream s = scripted_stream(script);
    PerceptionOut out;
    for (int i = 0; i < 15; ++i) {
      const scalar_t x = 0.3 + (i % 2 == 0 ? 0.0 : 0.05);
      out = s.step(frame_at(0.05 * (i + 1), {x, 0, 0.3}));
    }
    CHECK_FALSE(out.hand_still);
  }
  // shrinking eps_still never flips false -> true
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<vector3_t> traj;
    for (int i = 0; i < 15; ++i)
      traj.push_back(vector3_t(0.3 + rng.uniform(-0.01, 0.01),
                               rng.uniform(-0.01, 0.01), 0.3));
    auto run = [&](scalar_t eps) {
      StreamParams sp;
      sp.eps_still = eps;
      Script script;
      for (int i = 0; i < 20; ++i) script.outputs.push_back({GraspClass::Waiting, 0.9});
      Stream s = scripted_stream(script, sp);
      PerceptionOut out;
      for (int i = 0; i < 15; ++i) out = s.step(frame_at(0.05 * (i + 1), traj[i]));
      return out.hand_still;
    };
    const bool wide = run(0.02);
    const bool narrow = run(0.005);
    if (narrow) CHECK(wide);  // narrow still implies wide still
  }
}

TEST_CASE("detection failure degrades to uncertain waiting") {
  const net::NetCfg cfg = net::NetCfg::desk_default();
  const auto params = net::init_params(cfg, 3).cast<float>();
  Stream s(&params, &cfg);
  Frame f = frame_at(0.05, {0.3, 0, 0.3});
  f.cloud = PointCloud(3, 0);  // no detection
  const auto out = s.step(f);
  CHECK(out.filtered_class == GraspClass::Waiting);
  CHECK(out.uncertain);
  CHECK_FALSE(out.object_present);
  CHECK(out.confidence == doctest::Approx(0.0));
}

TEST_CASE("visibility baseline presence") {
  // fully visible block: empty-hand scene with a block placed clear of the hand
  Rng rng(21);
  auto scene = scenegen::sample_scene(GraspClass::OnOpenPalm, 0, rng);
  Frame f;
  f.t = 1.0;
  f.true_scene = &scene;
  Rng ro(5);
  const scalar_t frac = scenegen::visible_block_fraction(scene, 300, ro);
  CHECK(presence_visibility_baseline(f, 0.3) == (frac >= 0.3));

  // no block in the scene
  Rng rng2(22);
  auto waiting = scenegen::sample_scene(GraspClass::Waiting, 0, rng2);
  Frame f2;
  f2.t = 1.0;
  f2.true_scene = &waiting;
  CHECK_FALSE(presence_visibility_baseline(f2, 0.3));

  // heavy occlusion: camera behind the hand on a lifting grasp
  int occluded_hits = 0;
  for (int i = 0; i < 10; ++i) {
    Rng r(mix_seed(91, i));
    auto occ = scenegen::sample_scene_occluded(GraspClass::Lifting, 0, r);
    Frame fo;
    fo.t = 0.5 + i;
    fo.true_scene = &occ;
    if (!presence_visibility_baseline(fo, 0.3)) ++occluded_hits;
  }
  CHECK(occluded_hits >= 7);  // mostly missed behind the hand
}

TEST_CASE("stream output is deterministic") {
  const net::NetCfg cfg = net::NetCfg::desk_default();
  const auto params = net::init_params(cfg, 3).cast<float>();
  auto run = [&]() {
    Stream s(&params, &cfg);
    Rng rng(17);
    std::vector<PerceptionOut> outs;
    auto scene = scenegen::sample_scene(GraspClass::PinchSide, 1, rng);
    for (int i = 0; i < 10; ++i) {
      Frame f;
      f.t = 0.05 * (i + 1);
      f.hand_pose = scene.hand_pose;
      f.cloud = scenegen::render_cloud(scene, 512, 0.002, rng);
      f.true_scene = &scene;
      outs.push_back(s.step(f));
    }
    return outs;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].filtered_class == b[i].filtered_class);
    CHECK(a[i].confidence == b[i].confidence);
    CHECK(a[i].hand_still == b[i].hand_still);
  }
}
