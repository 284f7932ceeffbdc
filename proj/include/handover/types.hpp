#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace handover {

/** Scalar type used throughout the library. */
using scalar_t = double;

using vector3_t = Eigen::Matrix<scalar_t, 3, 1>;
using vector4_t = Eigen::Matrix<scalar_t, 4, 1>;
using matrix3_t = Eigen::Matrix<scalar_t, 3, 3>;
using matrix_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic>;
using vector_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;
using quaternion_t = Eigen::Quaternion<scalar_t>;
using angleaxis_t = Eigen::AngleAxis<scalar_t>;

/** Point cloud as a 3xN column matrix (one point per column). */
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
using PointCloud = PointMatrix<scalar_t>;

/** Rigid transform: position plus unit quaternion. */
struct Pose {
  vector3_t position{vector3_t::Zero()};
  quaternion_t orientation{quaternion_t::Identity()};

  static Pose identity() { return Pose{}; }

  vector3_t apply(const vector3_t& p) const { return orientation * p + position; }
};

/** Applies b then a. Orientation is re-normalized. */
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.position = a.orientation * b.position + a.position;
  out.orientation = (a.orientation * b.orientation).normalized();
  return out;
}

inline Pose inverse(const Pose& p) {
  Pose out;
  out.orientation = p.orientation.conjugate();
  out.position = -(out.orientation * p.position);
  return out;
}

/** Maps every point of the cloud by p; count preserved. */
inline PointCloud transform_cloud(const Pose& p, const PointCloud& c) {
  return (p.orientation.toRotationMatrix() * c).colwise() + p.position;
}

inline quaternion_t yaw_quat(scalar_t yaw) {
  return quaternion_t(angleaxis_t(yaw, vector3_t::UnitZ()));
}

/** Rotation of the pose about world z, ignoring pitch/roll. */
inline scalar_t yaw_of(const quaternion_t& q) {
  const matrix3_t r = q.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

// Contract-violation errors (expected runtime outcomes use status returns instead).
struct NotHoldingObject : std::invalid_argument {
  NotHoldingObject() : std::invalid_argument("grasp class is not holding an object") {}
};
struct BadK : std::invalid_argument {
  explicit BadK(const std::string& m) : std::invalid_argument(m) {}
};
struct TooFewPoints : std::invalid_argument {
  explicit TooFewPoints(const std::string& m) : std::invalid_argument(m) {}
};
struct DegenerateScene : std::runtime_error {
  explicit DegenerateScene(const std::string& m) : std::runtime_error(m) {}
};
struct BadSplit : std::invalid_argument {
  explicit BadSplit(const std::string& m) : std::invalid_argument(m) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace handover
