#include "handover/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace handover::scenegen {

namespace {

constexpr scalar_t deg(scalar_t d) { return d * M_PI / 180.0; }

struct FingerLayout {
  vector3_t base;
  scalar_t fan_deg;
  std::array<scalar_t, 3> seg_len;
  scalar_t radius;
};

// Flat-hand layout in the palm-local frame: fingers fan out along +x,
// palm normal +z, thumb on the -y side.
const std::array<FingerLayout, 5> kFingers = {{
    {{0.010, -0.045, 0.0}, -40.0, {0.032, 0.028, 0.022}, 0.0095},  // thumb
    {{0.040, -0.020, 0.0}, -6.0, {0.034, 0.026, 0.020}, 0.008},    // index
    {{0.042, 0.000, 0.0}, 0.0, {0.036, 0.027, 0.021}, 0.008},      // middle
    {{0.040, 0.018, 0.0}, 7.0, {0.034, 0.025, 0.019}, 0.008},      // ring
    {{0.036, 0.034, 0.0}, 14.0, {0.028, 0.020, 0.016}, 0.007},     // pinky
}};

constexpr scalar_t kPalmRadius = 0.034;
constexpr scalar_t kPalmHalfLen = 0.030;

std::array<scalar_t, 3> f3(scalar_t a, scalar_t b, scalar_t c) {
  return {deg(a), deg(b), deg(c)};
}

quaternion_t rx(scalar_t d) { return quaternion_t(angleaxis_t(deg(d), vector3_t::UnitX())); }
quaternion_t ry(scalar_t d) { return quaternion_t(angleaxis_t(deg(d), vector3_t::UnitY())); }

}  // namespace

SubjectParams subject_params(int subject_id) {
  Rng rng(mix_seed(0x5afe5eedULL, static_cast<std::uint64_t>(subject_id)));
  SubjectParams p;
  p.scale = rng.uniform(0.8, 1.2);
  p.finger_len = rng.uniform(0.85, 1.15);
  return p;
}

std::vector<Capsule> HandModel::all_capsules() const {
  std::vector<Capsule> out;
  out.reserve(2 + 15);
  out.push_back(palm);
  out.push_back(forearm);
  for (const auto& f : fingers)
    for (const auto& c : f.capsules) out.push_back(c);
  return out;
}

std::vector<Capsule> HandModel::finger_capsules() const {
  std::vector<Capsule> out;
  out.reserve(15);
  for (const auto& f : fingers)
    for (const auto& c : f.capsules) out.push_back(c);
  return out;
}

HandJointConfig template_config(GraspClass g) {
  HandJointConfig cfg;
  for (int i = 0; i < 5; ++i) cfg.fan[i] = deg(kFingers[i].fan_deg);
  switch (g) {
    case GraspClass::OnOpenPalm:
      cfg.palm_pose = Pose{};
      cfg.flex = {f3(6, 8, 6), f3(6, 8, 6), f3(6, 8, 6), f3(6, 8, 6), f3(6, 8, 6)};
      break;
    case GraspClass::PinchBottom:
      cfg.palm_pose = Pose{};
      cfg.flex = {f3(35, 30, 20), f3(38, 32, 22), f3(30, 28, 20), f3(22, 22, 18),
                  f3(20, 20, 16)};
      break;
    case GraspClass::PinchTop:
      cfg.palm_pose = Pose{{-0.010, 0.0, 0.118}, rx(180)};
      cfg.flex = {f3(35, 30, 20), f3(38, 32, 22), f3(75, 70, 50), f3(75, 70, 50),
                  f3(75, 70, 50)};
      break;
    case GraspClass::PinchSide:
      cfg.palm_pose = Pose{{0.0, 0.060, 0.035}, rx(90)};
      cfg.flex = {f3(35, 30, 20), f3(38, 32, 22), f3(40, 34, 24), f3(70, 64, 45),
                  f3(70, 64, 45)};
      break;
    case GraspClass::Lifting:
      cfg.palm_pose = Pose{{-0.030, 0.0, 0.060}, ry(50)};
      cfg.flex = {f3(25, 20, 15), f3(55, 50, 35), f3(55, 50, 35), f3(62, 58, 42),
                  f3(62, 58, 42)};
      cfg.fan[0] = deg(30);  // thumb opposes over the top edge
      break;
    case GraspClass::Waiting:
      cfg.palm_pose = Pose{{0.0, 0.0, 0.020}, ry(-75)};
      cfg.flex = {f3(6, 8, 6), f3(8, 10, 8), f3(8, 10, 8), f3(8, 10, 8), f3(8, 10, 8)};
      break;
    case GraspClass::Others:
      cfg.palm_pose = Pose{{0.0, 0.0, 0.020}, quaternion_t::Identity()};
      cfg.flex = {f3(60, 60, 60), f3(60, 60, 60), f3(60, 60, 60), f3(60, 60, 60),
                  f3(60, 60, 60)};
      break;
  }
  return cfg;
}

HandJointConfig jittered_config(GraspClass g, Rng& rng) {
  HandJointConfig cfg = template_config(g);
  if (g == GraspClass::Others) {
    // Unstructured empty-hand poses: random curl, random mild tilt.
    for (auto& f : cfg.flex)
      for (auto& a : f) a = rng.uniform(deg(35), deg(95));
    for (auto& fan : cfg.fan) fan += rng.uniform(-deg(15), deg(15));
    cfg.palm_pose.orientation =
        (rx(rng.uniform(-50.0, 50.0)) * ry(rng.uniform(-50.0, 50.0))).normalized();
    cfg.palm_pose.position += vector3_t(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                        rng.uniform(-0.02, 0.02));
    return cfg;
  }
  for (auto& f : cfg.flex)
    for (auto& a : f) a += rng.uniform(-deg(10), deg(10));
  for (auto& fan : cfg.fan) fan += rng.uniform(-deg(5), deg(5));
  cfg.palm_pose.orientation =
      (cfg.palm_pose.orientation * rx(rng.uniform(-6.0, 6.0)) * ry(rng.uniform(-6.0, 6.0)))
          .normalized();
  cfg.palm_pose.position += vector3_t(rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005),
                                      rng.uniform(-0.005, 0.005));
  return cfg;
}

HandModel build_hand(const HandJointConfig& cfg, const SubjectParams& subject,
                     const Pose& hand_world) {
  const scalar_t s = subject.scale;
  const Pose palm_world = compose(hand_world, cfg.palm_pose);

  HandModel hand;
  hand.scale = s;
  hand.palm = transform(palm_world, Capsule{{0, -kPalmHalfLen * s, 0},
                                            {0, kPalmHalfLen * s, 0},
                                            kPalmRadius * s});
  hand.forearm = transform(palm_world, Capsule{{-0.045 * s, 0, -0.005 * s},
                                               {-0.20 * s, 0, -0.025 * s},
                                               0.035 * s});
  for (int i = 0; i < 5; ++i) {
    FingerChain& chain = hand.fingers[i];
    chain.flex = cfg.flex[i];
    chain.fan = cfg.fan[i];
    vector3_t p = kFingers[i].base * s;
    scalar_t cum = 0.0;
    const quaternion_t fan_rot(angleaxis_t(cfg.fan[i], vector3_t::UnitZ()));
    for (int j = 0; j < 3; ++j) {
      cum += cfg.flex[i][j];
      // Flexion curls segments toward the palm normal (+z local).
      const vector3_t dir = fan_rot * vector3_t(std::cos(cum), 0.0, std::sin(cum));
      const vector3_t q = p + dir * kFingers[i].seg_len[j] * s * subject.finger_len;
      chain.capsules[j] =
          transform(palm_world, Capsule{p, q, kFingers[i].radius * s});
      p = q;
    }
  }
  return hand;
}

namespace {

// rng == nullptr gives the jitter-free nominal attachment.
std::optional<BlockModel> attach_block(GraspClass g, const HandModel& hand_root,
                                       scalar_t palm_radius_scaled, Rng* rng) {
  if (!is_holding(g)) return std::nullopt;
  const scalar_t gap = kBlockHalf + 0.0005;
  auto jitter = [&](scalar_t amp) { return rng ? rng->uniform(-amp, amp) : 0.0; };
  vector3_t center;
  switch (g) {
    case GraspClass::OnOpenPalm: {
      const vector3_t palm_center = 0.5 * (hand_root.palm.a + hand_root.palm.b);
      center = palm_center + vector3_t(0.018 + jitter(0.006), jitter(0.006),
                                       palm_radius_scaled + gap);
      break;
    }
    case GraspClass::PinchTop: {
      const vector3_t mid = 0.5 * (hand_root.fingertip(0) + hand_root.fingertip(1));
      center = mid - vector3_t(0, 0, gap);
      break;
    }
    case GraspClass::PinchBottom: {
      const vector3_t mid = 0.5 * (hand_root.fingertip(0) + hand_root.fingertip(1));
      center = mid + vector3_t(0, 0, gap);
      break;
    }
    case GraspClass::PinchSide: {
      const vector3_t mid = 0.5 * (hand_root.fingertip(0) + hand_root.fingertip(1));
      center = mid - vector3_t(0, gap, 0);
      break;
    }
    case GraspClass::Lifting: {
      // Lowest hook point of index/middle chains; block sits on the hook,
      // shifted forward so the fingers stay under its back edge.
      scalar_t zmin = 1e9;
      vector3_t low = vector3_t::Zero();
      for (int f = 1; f <= 2; ++f) {
        for (const auto& c : hand_root.fingers[f].capsules) {
          if (c.b.z() < zmin) {
            zmin = c.b.z();
            low = c.b;
          }
        }
      }
      center = vector3_t(low.x() + 0.020, 0.5 * low.y(), low.z() + kBlockHalf + 0.002);
      break;
    }
    default: return std::nullopt;
  }
  BlockModel block;
  block.pose.position = center;
  block.pose.orientation = rng ? yaw_quat(rng->uniform(-deg(8), deg(8)))
                               : quaternion_t::Identity();
  block.color_id = rng ? rng->uniform_int(0, 3) : 0;
  return block;
}

}  // namespace

Scene build_scene(GraspClass g, int subject_id, const HandJointConfig& cfg,
                  const vector3_t& hand_position, scalar_t hand_yaw,
                  const Pose& camera, Rng& block_rng) {
  const SubjectParams sp = subject_params(subject_id);
  const HandModel hand_root = build_hand(cfg, sp, Pose{});
  auto block_root = attach_block(g, hand_root, kPalmRadius * sp.scale, &block_rng);

  const Pose w{hand_position, yaw_quat(hand_yaw)};
  Scene scene;
  scene.grasp = g;
  scene.subject_id = subject_id;
  scene.camera = camera;
  scene.hand = build_hand(cfg, sp, w);
  if (block_root) {
    BlockModel b = *block_root;
    b.pose = compose(w, b.pose);
    scene.block = b;
  }
  const vector3_t palm_center = 0.5 * (scene.hand.palm.a + scene.hand.palm.b);
  scene.hand_pose = Pose{palm_center, (w.orientation * cfg.palm_pose.orientation).normalized()};
  return scene;
}

Pose nominal_block_pose(GraspClass g) {
  const SubjectParams sp = subject_params(0);
  const HandModel hand_root = build_hand(template_config(g), sp, Pose{});
  const auto block = attach_block(g, hand_root, kPalmRadius * sp.scale, nullptr);
  return block ? block->pose : Pose{};
}

scalar_t min_template_distance(const HandJointConfig& cfg) {
  scalar_t best = 1e9;
  for (int c = 0; c < kNumGraspClasses; ++c) {
    if (static_cast<GraspClass>(c) == GraspClass::Others) continue;
    const HandJointConfig t = template_config(static_cast<GraspClass>(c));
    scalar_t linf = 0.0;
    for (int f = 0; f < 5; ++f)
      for (int j = 0; j < 3; ++j)
        linf = std::max(linf, std::abs(cfg.flex[f][j] - t.flex[f][j]));
    best = std::min(best, linf);
  }
  return best;
}

HandJointConfig outlier_config(Rng& rng) {
  HandJointConfig cfg = template_config(GraspClass::Others);
  for (int attempt = 0; attempt < 256; ++attempt) {
    for (auto& f : cfg.flex)
      for (auto& a : f) a = rng.uniform(0.0, deg(100));
    if (min_template_distance(cfg) >= deg(15)) break;
  }
  for (auto& fan : cfg.fan) fan += rng.uniform(-deg(20), deg(20));
  cfg.palm_pose.orientation =
      (rx(rng.uniform(-60.0, 60.0)) * ry(rng.uniform(-60.0, 60.0))).normalized();
  cfg.palm_pose.position =
      vector3_t(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(0.0, 0.04));
  return cfg;
}

Scene build_outlier_scene(int subject_id, const HandJointConfig& cfg,
                          const vector3_t& hand_position, scalar_t hand_yaw,
                          const Pose& camera, Rng& block_rng) {
  const SubjectParams sp = subject_params(subject_id);
  const HandModel hand_root = build_hand(cfg, sp, Pose{});
  vector3_t tips = vector3_t::Zero();
  for (int f = 0; f < 5; ++f) tips += hand_root.fingertip(f);
  tips /= 5.0;
  BlockModel block;
  block.pose.position =
      tips + vector3_t(block_rng.uniform(-0.015, 0.015), block_rng.uniform(-0.015, 0.015),
                       block_rng.uniform(-0.01, 0.02));
  block.pose.orientation = yaw_quat(block_rng.uniform(-deg(25), deg(25)));
  block.color_id = block_rng.uniform_int(0, 3);

  const Pose w{hand_position, yaw_quat(hand_yaw)};
  Scene scene;
  scene.grasp = GraspClass::Others;  // outside the taxonomy
  scene.outlier = true;
  scene.subject_id = subject_id;
  scene.camera = camera;
  scene.hand = build_hand(cfg, sp, w);
  BlockModel b = block;
  b.pose = compose(w, b.pose);
  scene.block = b;
  const vector3_t palm_center = 0.5 * (scene.hand.palm.a + scene.hand.palm.b);
  scene.hand_pose = Pose{palm_center, (w.orientation * cfg.palm_pose.orientation).normalized()};
  return scene;
}

Pose look_at(const vector3_t& from, const vector3_t& to) {
  const vector3_t fwd = (to - from).normalized();
  vector3_t right = fwd.cross(vector3_t::UnitZ());
  if (right.norm() < 1e-6) right = vector3_t::UnitY();
  right.normalize();
  const vector3_t down = fwd.cross(right);
  matrix3_t r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = fwd;
  return Pose{from, quaternion_t(r).normalized()};
}

namespace {

Scene sample_scene_view(GraspClass g, int subject_id, Rng& rng, scalar_t az_lo,
                        scalar_t az_hi, scalar_t el_lo, scalar_t el_hi, scalar_t r_lo,
                        scalar_t r_hi, bool az_relative_to_back) {
  const HandJointConfig cfg = jittered_config(g, rng);
  const scalar_t yaw = rng.uniform(-M_PI, M_PI);
  const vector3_t hand_position(0.0, 0.0, 0.30);
  scalar_t az = rng.uniform(az_lo, az_hi);
  if (az_relative_to_back) az += yaw + M_PI;  // camera behind the hand
  const scalar_t el = rng.uniform(el_lo, el_hi);
  const scalar_t range = rng.uniform(r_lo, r_hi);
  const vector3_t cam_pos =
      hand_position + range * vector3_t(std::cos(el) * std::cos(az),
                                        std::cos(el) * std::sin(az), std::sin(el));
  const Pose camera = look_at(cam_pos, hand_position);
  return build_scene(g, subject_id, cfg, hand_position, yaw, camera, rng);
}

}  // namespace

Scene sample_scene(GraspClass g, int subject_id, Rng& rng) {
  return sample_scene_view(g, subject_id, rng, -deg(60), deg(60), deg(10), deg(50), 0.6,
                           1.1, false);
}

Scene sample_scene_occluded(GraspClass g, int subject_id, Rng& rng) {
  return sample_scene_view(g, subject_id, rng, -deg(20), deg(20), deg(10), deg(30), 0.65,
                           0.95, true);
}

PointCloud render_cloud(const Scene& s, int n_points, scalar_t noise_sigma, Rng& rng,
                        RenderStats* stats) {
  if (n_points < 32) throw BadK("render_cloud: n_points must be >= 32");

  struct Prim {
    bool is_block;
    const Capsule* cap;
  };
  const std::vector<Capsule> capsules = s.hand.all_capsules();
  std::vector<scalar_t> cum;
  std::vector<int> prim_of;  // index into capsules, or -1 for the block
  scalar_t total = 0.0;
  for (std::size_t i = 0; i < capsules.size(); ++i) {
    total += capsule_area(capsules[i]);
    cum.push_back(total);
    prim_of.push_back(static_cast<int>(i));
  }
  Obb block_obb;
  if (s.block) {
    block_obb = s.block->obb();
    total += obb_area(block_obb);
    cum.push_back(total);
    prim_of.push_back(-1);
  }

  const int n_candidates = std::max(8192, 12 * n_points);
  const vector3_t crop_center = 0.5 * (s.hand.palm.a + s.hand.palm.b);
  const matrix3_t cam_rot = s.camera.orientation.toRotationMatrix();
  const vector3_t cam_pos = s.camera.position;
  const vector3_t center_c = cam_rot.transpose() * (crop_center - cam_pos);
  if (center_c.z() < 0.05) throw DegenerateScene("camera behind or at the crop center");
  const scalar_t u0 = center_c.x() / center_c.z();
  const scalar_t v0 = center_c.y() / center_c.z();
  const scalar_t win = 1.2 * kCropRadius / center_c.z();
  const scalar_t cell = 2.0 * win / kDepthRaster;

  struct Sample {
    vector3_t pc;  // camera frame
    scalar_t range;
    int cell_u, cell_v;
    bool in_crop;
    bool is_block;
  };
  std::vector<Sample> samples;
  samples.reserve(n_candidates);
  Eigen::Matrix<scalar_t, Eigen::Dynamic, 1> depth =
      Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>::Constant(kDepthRaster * kDepthRaster,
                                                           1e30);

  for (int i = 0; i < n_candidates; ++i) {
    const scalar_t pick = rng.uniform(0.0, total);
    const std::size_t k =
        std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
    const int pid = prim_of[std::min(k, cum.size() - 1)];
    const vector3_t p = pid >= 0 ? sample_capsule_surface(capsules[pid], rng)
                                 : sample_obb_surface(block_obb, rng);
    // Outward surface normal; samples facing away from the camera are
    // self-occluded by their own primitive.
    vector3_t normal;
    if (pid >= 0) {
      const Capsule& c = capsules[pid];
      normal = (p - closest_point_on_segment(c.a, c.b, p)) / c.radius;
    } else {
      const vector3_t l = block_obb.rot.transpose() * (p - block_obb.center);
      int axis = 0;
      scalar_t best = -1e9;
      for (int a2 = 0; a2 < 3; ++a2) {
        const scalar_t v2 = std::abs(l[a2]) - block_obb.half[a2];
        if (v2 > best) {
          best = v2;
          axis = a2;
        }
      }
      normal = block_obb.rot.col(axis) * (l[axis] >= 0 ? 1.0 : -1.0);
    }
    if (normal.dot(p - cam_pos) > 0.0) continue;

    const vector3_t pc = cam_rot.transpose() * (p - cam_pos);
    if (pc.z() < 0.05) continue;
    const scalar_t u = pc.x() / pc.z(), v = pc.y() / pc.z();
    const int cu = static_cast<int>(std::floor((u - (u0 - win)) / cell));
    const int cv = static_cast<int>(std::floor((v - (v0 - win)) / cell));
    if (cu < 0 || cu >= kDepthRaster || cv < 0 || cv >= kDepthRaster) continue;
    const bool in_crop = (p - crop_center).norm() <= kCropRadius;
    const scalar_t range = pc.norm();
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        const int nu = cu + du, nv = cv + dv;
        if (nu < 0 || nu >= kDepthRaster || nv < 0 || nv >= kDepthRaster) continue;
        scalar_t& d = depth[nv * kDepthRaster + nu];
        d = std::min(d, range);
      }
    }
    samples.push_back(Sample{pc, range, cu, cv, in_crop, pid < 0});
  }

  std::vector<vector3_t> visible;
  int crop_hand = 0, crop_block = 0, vis_hand = 0, vis_block = 0;
  for (const Sample& smp : samples) {
    if (!smp.in_crop) continue;
    (smp.is_block ? crop_block : crop_hand)++;
    if (smp.range <= depth[smp.cell_v * kDepthRaster + smp.cell_u] + 0.01) {
      visible.push_back(smp.pc);
      (smp.is_block ? vis_block : vis_hand)++;
    }
  }
  if (stats) {
    stats->candidates = crop_hand + crop_block;
    stats->visible = static_cast<int>(visible.size());
    stats->hand_visible_frac =
        crop_hand > 0 ? static_cast<scalar_t>(vis_hand) / crop_hand : 0.0;
    stats->block_visible_frac =
        crop_block > 0 ? static_cast<scalar_t>(vis_block) / crop_block : 0.0;
  }
  if (static_cast<int>(visible.size()) < 8)
    throw DegenerateScene("fewer than 8 visible points");

  if (noise_sigma > 0.0) {
    for (auto& p : visible)
      p += vector3_t(rng.normal(0.0, noise_sigma), rng.normal(0.0, noise_sigma),
                     rng.normal(0.0, noise_sigma));
  }

  PointCloud out(3, n_points);
  const int vis = static_cast<int>(visible.size());
  if (vis >= n_points) {
    std::vector<int> idx(vis);
    for (int i = 0; i < vis; ++i) idx[i] = i;
    for (int i = 0; i < n_points; ++i) {
      const int j = rng.uniform_int(i, vis - 1);
      std::swap(idx[i], idx[j]);
      out.col(i) = visible[idx[i]];
    }
  } else {
    for (int i = 0; i < vis; ++i) out.col(i) = visible[i];
    for (int i = vis; i < n_points; ++i) out.col(i) = visible[rng.uniform_int(0, vis - 1)];
  }
  return out;
}

scalar_t visible_block_fraction(const Scene& s, int n_samples, Rng& rng) {
  if (!s.block) return 0.0;
  const Obb block = s.block->obb();
  const std::vector<Capsule> capsules = s.hand.all_capsules();
  int visible = 0;
  for (int i = 0; i < n_samples; ++i) {
    const vector3_t p = sample_obb_surface(block, rng);
    const vector3_t d = p - s.camera.position;
    const scalar_t dist = d.norm();
    const vector3_t dir = d / dist;
    bool occluded = false;
    const scalar_t tb = ray_obb(s.camera.position, dir, block);
    if (tb > 0.0 && tb < dist - 1e-5) occluded = true;
    for (std::size_t c = 0; !occluded && c < capsules.size(); ++c) {
      const scalar_t t = ray_capsule(s.camera.position, dir, capsules[c]);
      if (t > 0.0 && t < dist - 1e-5) occluded = true;
    }
    if (!occluded) ++visible;
  }
  return static_cast<scalar_t>(visible) / n_samples;
}

// --- dataset serialization ---

namespace fs = std::filesystem;

void write_cloud_file(const std::string& path, const PointMatrix<float>& cloud) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  const char magic[8] = {'P', 'C', 'L', 'H', 'N', 'D', '1', '\0'};
  f.write(magic, 8);
  const std::uint32_t count = static_cast<std::uint32_t>(cloud.cols());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
    const float xyz[3] = {cloud(0, i), cloud(1, i), cloud(2, i)};
    f.write(reinterpret_cast<const char*>(xyz), 12);
  }
  if (!f) throw IoError("write failed: " + path);
}

PointMatrix<float> read_cloud_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for read: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "PCLHND1\0", 8) != 0)
    throw IoError("bad cloud magic: " + path);
  std::uint32_t count = 0;
  f.read(reinterpret_cast<char*>(&count), 4);
  PointMatrix<float> cloud(3, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    float xyz[3];
    f.read(reinterpret_cast<char*>(xyz), 12);
    cloud(0, i) = xyz[0];
    cloud(1, i) = xyz[1];
    cloud(2, i) = xyz[2];
  }
  if (!f) throw IoError("truncated cloud file: " + path);
  return cloud;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream index(fs::path(dir) / "index.csv");
  if (!index) throw IoError("cannot write index.csv in " + dir);
  index << "sample_id,label,subject_id,file\n";
  char name[64];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "cloud_%05zu.pcl", i);
    index << i << ',' << to_label(ds.samples[i].label) << ',' << ds.samples[i].subject_id
          << ',' << name << '\n';
    write_cloud_file((fs::path(dir) / name).string(), ds.samples[i].cloud);
  }
  if (!index) throw IoError("write failed: index.csv");
}

Dataset read_dataset(const std::string& dir) {
  std::ifstream index(fs::path(dir) / "index.csv");
  if (!index) throw IoError("cannot read index.csv in " + dir);
  std::string line;
  std::getline(index, line);  // header
  Dataset ds;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, label, subject, file;
    std::getline(ss, id, ',');
    std::getline(ss, label, ',');
    std::getline(ss, subject, ',');
    std::getline(ss, file, ',');
    const auto g = from_label(label);
    if (!g) throw IoError("unknown label in index.csv: " + label);
    LabeledSample sample;
    sample.label = *g;
    sample.subject_id = std::stoi(subject);
    sample.cloud = read_cloud_file((fs::path(dir) / file).string());
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

Dataset generate_dataset(const DatasetSpec& cfg, std::uint64_t seed,
                         const std::string& out_dir) {
  if (cfg.samples_per_class < 1) throw BadK("samples_per_class must be >= 1");
  if (cfg.num_subjects < 2) throw BadK("num_subjects must be >= 2");
  Dataset ds;
  ds.samples.reserve(static_cast<std::size_t>(kNumGraspClasses) * cfg.samples_per_class);
  for (int c = 0; c < kNumGraspClasses; ++c) {
    for (int k = 0; k < cfg.samples_per_class; ++k) {
      const std::uint64_t global =
          static_cast<std::uint64_t>(c) * cfg.samples_per_class + k;
      const int subject = k % cfg.num_subjects;
      Rng rng(mix_seed(seed, global));
      LabeledSample sample;
      sample.label = static_cast<GraspClass>(c);
      sample.subject_id = subject;
      for (int attempt = 0;; ++attempt) {
        try {
          const Scene scene = sample_scene(sample.label, subject, rng);
          sample.cloud =
              render_cloud(scene, cfg.n_points, cfg.noise_sigma, rng).cast<float>();
          break;
        } catch (const DegenerateScene&) {
          if (attempt >= 8) throw;
        }
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  if (!out_dir.empty()) write_dataset(ds, out_dir);
  return ds;
}

}  // namespace handover::scenegen
