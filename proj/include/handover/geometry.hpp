#pragma once

#include "handover/rng.hpp"
#include "handover/types.hpp"

#include <vector>

namespace handover {

/** Capsule: segment from a to b swept by a sphere of given radius. */
struct Capsule {
  vector3_t a{vector3_t::Zero()};
  vector3_t b{vector3_t::Zero()};
  scalar_t radius{0.01};
};

/** Oriented box: center, rotation (columns are local axes), half extents. */
struct Obb {
  vector3_t center{vector3_t::Zero()};
  matrix3_t rot{matrix3_t::Identity()};
  vector3_t half{vector3_t::Ones()};
};

inline Capsule transform(const Pose& p, const Capsule& c) {
  return Capsule{p.apply(c.a), p.apply(c.b), c.radius};
}

inline Obb transform(const Pose& p, const Obb& o) {
  return Obb{p.apply(o.center), p.orientation.toRotationMatrix() * o.rot, o.half};
}

vector3_t closest_point_on_segment(const vector3_t& a, const vector3_t& b, const vector3_t& p);

scalar_t point_segment_distance(const vector3_t& p, const vector3_t& a, const vector3_t& b);

/** Signed distance from point to capsule surface (negative inside). */
scalar_t point_capsule_distance(const vector3_t& p, const Capsule& c);

/** Signed distance from point to box surface (negative inside). */
scalar_t point_obb_distance(const vector3_t& p, const Obb& o);

/** Distance from segment [a,b] to box (0 when intersecting). */
scalar_t segment_obb_distance(const vector3_t& a, const vector3_t& b, const Obb& o);

scalar_t capsule_obb_distance(const Capsule& c, const Obb& o);

bool obb_overlap(const Obb& a, const Obb& b);

/**
 * First intersection of ray origin + t*dir (t > eps) with the primitive.
 * Returns t, or a negative value when there is no hit.
 */
scalar_t ray_capsule(const vector3_t& origin, const vector3_t& dir, const Capsule& c);
scalar_t ray_obb(const vector3_t& origin, const vector3_t& dir, const Obb& o);

scalar_t capsule_area(const Capsule& c);
scalar_t obb_area(const Obb& o);

vector3_t sample_capsule_surface(const Capsule& c, Rng& rng);
vector3_t sample_obb_surface(const Obb& o, Rng& rng);

}  // namespace handover
