#pragma once

#include "handover/geometry.hpp"
#include "handover/grasp.hpp"
#include "handover/rng.hpp"
#include "handover/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace handover::scenegen {

inline constexpr scalar_t kBlockHalf = 0.025;  // 5 cm toy cube
inline constexpr int kDefaultPoints = 512;
inline constexpr scalar_t kDefaultNoiseSigma = 0.002;
inline constexpr scalar_t kCropRadius = 0.25;
inline constexpr int kDepthRaster = 96;

struct SubjectParams {
  scalar_t scale{1.0};       // overall hand size, in [0.8, 1.2]
  scalar_t finger_len{1.0};  // finger length multiplier
};

/** Fixed seeded table: same subject_id always maps to the same hand shape. */
SubjectParams subject_params(int subject_id);

/** Palm attitude plus joint angles, in the yaw-aligned hand root frame. */
struct HandJointConfig {
  Pose palm_pose;                                  // zero-yaw tilt by construction
  std::array<std::array<scalar_t, 3>, 5> flex{};   // radians, thumb first
  std::array<scalar_t, 5> fan{};                   // radians
};

struct FingerChain {
  std::array<scalar_t, 3> flex{};
  scalar_t fan{};
  std::array<Capsule, 3> capsules{};
};

struct HandModel {
  Capsule palm;
  Capsule forearm;
  std::array<FingerChain, 5> fingers;
  scalar_t scale{1.0};

  std::vector<Capsule> all_capsules() const;
  std::vector<Capsule> finger_capsules() const;
  vector3_t fingertip(int finger) const { return fingers[finger].capsules[2].b; }
};

struct BlockModel {
  vector3_t half_extents{kBlockHalf, kBlockHalf, kBlockHalf};
  Pose pose;
  int color_id{0};

  Obb obb() const {
    return Obb{pose.position, pose.orientation.toRotationMatrix(), half_extents};
  }
};

struct Scene {
  HandModel hand;     // world frame
  std::optional<BlockModel> block;
  GraspClass grasp{GraspClass::Waiting};
  Pose camera;        // world; +z looks forward, +y down
  Pose hand_pose;     // palm pose: position + Rz(yaw) * palm tilt
  int subject_id{0};
  bool outlier{false};
};

/** Nominal joint template for a class (Others returns its preset midpoint). */
HandJointConfig template_config(GraspClass g);

/** Template with joint jitter (flexion +-10 deg, fan +-5 deg, small palm jitter). */
HandJointConfig jittered_config(GraspClass g, Rng& rng);

HandModel build_hand(const HandJointConfig& cfg, const SubjectParams& subject,
                     const Pose& hand_world);

/**
 * Assembles a full scene: hand geometry from the (jittered) class template at
 * hand_world = {position, Rz(yaw)}, block attached per class, given camera.
 */
Scene build_scene(GraspClass g, int subject_id, const HandJointConfig& cfg,
                  const vector3_t& hand_position, scalar_t hand_yaw,
                  const Pose& camera, Rng& block_rng);

/** Camera pose looking from `from` toward `to` (CV convention, +y down). */
Pose look_at(const vector3_t& from, const vector3_t& to);

/** Smallest L-inf flexion distance (radians) to any fixed class template. */
scalar_t min_template_distance(const HandJointConfig& cfg);

/**
 * Random hand configuration at least 15 degrees per joint away from every
 * class template; used for grasps outside the taxonomy.
 */
HandJointConfig outlier_config(Rng& rng);

/** Scene for an out-of-taxonomy grasp: block held near the fingertip centroid. */
Scene build_outlier_scene(int subject_id, const HandJointConfig& cfg,
                          const vector3_t& hand_position, scalar_t hand_yaw,
                          const Pose& camera, Rng& block_rng);

/** Jitter-free block pose of a holding-class template, hand root frame. */
Pose nominal_block_pose(GraspClass g);

/**
 * Random scene for the dataset: jittered template, uniform hand yaw, camera
 * azimuth in [-60, 60] deg, elevation [10, 50] deg, range [0.6, 1.1] m.
 */
Scene sample_scene(GraspClass g, int subject_id, Rng& rng);

/** Same, but the camera is placed behind the hand (heavy occlusion views). */
Scene sample_scene_occluded(GraspClass g, int subject_id, Rng& rng);

struct RenderStats {
  int candidates{0};  // surface samples inside the crop ball
  int visible{0};
  scalar_t hand_visible_frac{0};
  scalar_t block_visible_frac{0};
};

/**
 * Surface-sampled, depth-buffer-occluded, cropped, noisy point cloud with
 * exactly n_points points in the camera frame.
 * Throws DegenerateScene when fewer than 8 points survive occlusion.
 */
PointCloud render_cloud(const Scene& s, int n_points, scalar_t noise_sigma, Rng& rng,
                        RenderStats* stats = nullptr);

/** Exact ray-cast fraction of block surface visible from the camera. */
scalar_t visible_block_fraction(const Scene& s, int n_samples, Rng& rng);

// --- dataset ---

struct DatasetSpec {
  int samples_per_class{300};
  int num_subjects{5};
  int n_points{kDefaultPoints};
  scalar_t noise_sigma{kDefaultNoiseSigma};
};

struct LabeledSample {
  PointMatrix<float> cloud;  // stored at file precision so memory == disk
  GraspClass label{GraspClass::Waiting};
  int subject_id{0};
};

struct Dataset {
  std::vector<LabeledSample> samples;
};

/**
 * Balanced samples across classes x subjects; per-sample rng derived from
 * (seed, sample index) so generation is order-independent. When out_dir is
 * nonempty the dataset is also written there.
 */
Dataset generate_dataset(const DatasetSpec& cfg, std::uint64_t seed,
                         const std::string& out_dir = "");

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

void write_cloud_file(const std::string& path, const PointMatrix<float>& cloud);
PointMatrix<float> read_cloud_file(const std::string& path);

}  // namespace handover::scenegen
