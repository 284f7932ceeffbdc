#include "handover/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace handover {

vector3_t closest_point_on_segment(const vector3_t& a, const vector3_t& b, const vector3_t& p) {
  const vector3_t ab = b - a;
  const scalar_t len2 = ab.squaredNorm();
  if (len2 <= scalar_t(0)) return a;
  const scalar_t t = std::clamp((p - a).dot(ab) / len2, scalar_t(0), scalar_t(1));
  return a + t * ab;
}

scalar_t point_segment_distance(const vector3_t& p, const vector3_t& a, const vector3_t& b) {
  return (p - closest_point_on_segment(a, b, p)).norm();
}

scalar_t point_capsule_distance(const vector3_t& p, const Capsule& c) {
  return point_segment_distance(p, c.a, c.b) - c.radius;
}

scalar_t point_obb_distance(const vector3_t& p, const Obb& o) {
  const vector3_t q = o.rot.transpose() * (p - o.center);
  const vector3_t d = q.cwiseAbs() - o.half;
  const vector3_t outside = d.cwiseMax(0.0);
  const scalar_t inside = std::min(scalar_t(0), d.maxCoeff());
  return outside.norm() + inside;
}

scalar_t segment_obb_distance(const vector3_t& a, const vector3_t& b, const Obb& o) {
  // dist(point(t), box) is convex in t; ternary search on [0, 1].
  scalar_t lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const scalar_t m1 = lo + (hi - lo) / 3.0;
    const scalar_t m2 = hi - (hi - lo) / 3.0;
    const scalar_t d1 = point_obb_distance(a + m1 * (b - a), o);
    const scalar_t d2 = point_obb_distance(a + m2 * (b - a), o);
    if (d1 < d2)
      hi = m2;
    else
      lo = m1;
  }
  const scalar_t t = 0.5 * (lo + hi);
  return std::max(scalar_t(0), point_obb_distance(a + t * (b - a), o));
}

scalar_t capsule_obb_distance(const Capsule& c, const Obb& o) {
  return segment_obb_distance(c.a, c.b, o) - c.radius;
}

bool obb_overlap(const Obb& a, const Obb& b) {
  // Separating axis test: 3 + 3 face axes, 9 edge cross products.
  const matrix3_t r = a.rot.transpose() * b.rot;
  const vector3_t t = a.rot.transpose() * (b.center - a.center);
  matrix3_t absr;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) absr(i, j) = std::abs(r(i, j)) + 1e-12;

  for (int i = 0; i < 3; ++i) {
    const scalar_t ra = a.half[i];
    const scalar_t rb = b.half.dot(absr.row(i));
    if (std::abs(t[i]) > ra + rb) return false;
  }
  for (int j = 0; j < 3; ++j) {
    const scalar_t ra = a.half.dot(absr.col(j));
    const scalar_t rb = b.half[j];
    if (std::abs(t.dot(r.col(j))) > ra + rb) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      const scalar_t ra = a.half[i1] * absr(i2, j) + a.half[i2] * absr(i1, j);
      const scalar_t rb = b.half[j1] * absr(i, j2) + b.half[j2] * absr(i, j1);
      const scalar_t tl = std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j));
      if (tl > ra + rb) return false;
    }
  }
  return true;
}

scalar_t ray_capsule(const vector3_t& origin, const vector3_t& dir, const Capsule& c) {
  // March along the ray against the capsule's signed distance (sphere tracing).
  // Exact enough for visibility oracles; tolerance 1e-7.
  scalar_t t = 1e-6;
  const scalar_t t_max = 10.0;
  for (int it = 0; it < 256; ++it) {
    const scalar_t d = point_capsule_distance(origin + t * dir, c);
    if (d < 1e-7) return t;
    t += std::max(d, scalar_t(1e-7));
    if (t > t_max) return -1.0;
  }
  return -1.0;
}

scalar_t ray_obb(const vector3_t& origin, const vector3_t& dir, const Obb& o) {
  const vector3_t ol = o.rot.transpose() * (origin - o.center);
  const vector3_t dl = o.rot.transpose() * dir;
  scalar_t t0 = -1e30, t1 = 1e30;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dl[i]) < 1e-14) {
      if (std::abs(ol[i]) > o.half[i]) return -1.0;
      continue;
    }
    scalar_t ta = (-o.half[i] - ol[i]) / dl[i];
    scalar_t tb = (o.half[i] - ol[i]) / dl[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return -1.0;
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return -1.0;
}

scalar_t capsule_area(const Capsule& c) {
  const scalar_t h = (c.b - c.a).norm();
  return 2.0 * M_PI * c.radius * h + 4.0 * M_PI * c.radius * c.radius;
}

scalar_t obb_area(const Obb& o) {
  return 8.0 * (o.half.x() * o.half.y() + o.half.y() * o.half.z() + o.half.x() * o.half.z());
}

vector3_t sample_capsule_surface(const Capsule& c, Rng& rng) {
  const vector3_t axis = c.b - c.a;
  const scalar_t h = axis.norm();
  const scalar_t side = 2.0 * M_PI * c.radius * h;
  const scalar_t caps = 4.0 * M_PI * c.radius * c.radius;
  // Frame with w along the axis (or +z for degenerate capsules).
  vector3_t w = h > 1e-12 ? vector3_t(axis / h) : vector3_t::UnitZ();
  vector3_t u = std::abs(w.z()) < 0.9 ? w.cross(vector3_t::UnitZ()).normalized()
                                      : w.cross(vector3_t::UnitX()).normalized();
  vector3_t v = w.cross(u);
  if (rng.uniform() * (side + caps) < side) {
    const scalar_t t = rng.uniform();
    const scalar_t phi = rng.uniform(0.0, 2.0 * M_PI);
    return c.a + t * h * w + c.radius * (std::cos(phi) * u + std::sin(phi) * v);
  }
  // Hemisphere caps: sample a sphere point, attach to the matching end.
  const scalar_t z = rng.uniform(-1.0, 1.0);
  const scalar_t phi = rng.uniform(0.0, 2.0 * M_PI);
  const scalar_t rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const vector3_t s = rxy * std::cos(phi) * u + rxy * std::sin(phi) * v + z * w;
  return (z >= 0.0 ? c.b : c.a) + c.radius * s;
}

vector3_t sample_obb_surface(const Obb& o, Rng& rng) {
  const vector3_t& h = o.half;
  const scalar_t axy = h.x() * h.y(), ayz = h.y() * h.z(), axz = h.x() * h.z();
  const scalar_t total = 2.0 * (axy + ayz + axz);
  scalar_t pick = rng.uniform(0.0, total);
  int axis;  // face normal axis
  if (pick < 2.0 * ayz)
    axis = 0;
  else if (pick < 2.0 * (ayz + axz))
    axis = 1;
  else
    axis = 2;
  const scalar_t sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  vector3_t p;
  p[axis] = sign * h[axis];
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  p[u] = rng.uniform(-h[u], h[u]);
  p[v] = rng.uniform(-h[v], h[v]);
  return o.center + o.rot * p;
}

}  // namespace handover
