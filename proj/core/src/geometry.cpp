/*
 * Copyright (c) 2026, the graspcritic authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "graspcritic/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>

namespace graspcritic {

namespace {

constexpr double kGeomEps = 1e-12;

Vec2 polygon_centroid(const std::vector<Vec2>& v) {
  // Area centroid via the shoelace decomposition.
  double area2 = 0.0;
  double cx = 0.0, cy = 0.0;
  int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    double w = a.cross(b);
    area2 += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  if (std::fabs(area2) < kGeomEps) {
    throw InvalidShapeError("polygon has (near-)zero area");
  }
  return {cx / (3.0 * area2), cy / (3.0 * area2)};
}

}  // namespace

ObjectShape::ObjectShape(std::string name, std::vector<Vec2> vertices)
    : name_(std::move(name)), verts_(std::move(vertices)) {
  int n = static_cast<int>(verts_.size());
  if (n < 3) throw InvalidShapeError("shape '" + name_ + "': needs at least 3 vertices");

  Vec2 c = polygon_centroid(verts_);
  for (Vec2& v : verts_) v = v - c;

  // Convex and counter-clockwise: every consecutive edge pair turns left.
  for (int i = 0; i < n; ++i) {
    Vec2 e0 = verts_[(i + 1) % n] - verts_[i];
    Vec2 e1 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
    if (e0.norm() < kGeomEps) {
      throw InvalidShapeError("shape '" + name_ + "': duplicate vertex " + std::to_string(i));
    }
    if (e0.cross(e1) < -kGeomEps * e0.norm() * e1.norm()) {
      throw InvalidShapeError("shape '" + name_ + "': not convex counter-clockwise");
    }
  }

  cum_.resize(n + 1);
  cum_[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    cum_[i + 1] = cum_[i] + (verts_[(i + 1) % n] - verts_[i]).norm();
  }
  perimeter_ = cum_[n];
  if (perimeter_ <= 0.0) throw InvalidShapeError("shape '" + name_ + "': zero perimeter");

  double sum = 0.0, mx = 0.0;
  for (const Vec2& v : verts_) {
    double r = v.norm();
    sum += r;
    mx = std::max(mx, r);
  }
  mean_radius_ = sum / n;
  max_radius_ = mx;
}

ObjectShape ObjectShape::regular(std::string name, int n, double radius) {
  std::vector<Vec2> v;
  v.reserve(n);
  for (int i = 0; i < n; ++i) {
    double a = kTwoPi * i / n;
    v.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return ObjectShape(std::move(name), std::move(v));
}

BoundarySample boundary_point(const ObjectShape& shape, double s) {
  double p = shape.perimeter();
  if (!(p > 0.0)) throw InvalidShapeError("degenerate shape");
  double sw = wrap_pos(s, p);

  const std::vector<Vec2>& v = shape.vertices();
  int n = static_cast<int>(v.size());
  // Locate the containing edge; at a vertex the edge starting there wins.
  int lo = 0, hi = n;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (shape.vertex_arclength(mid) <= sw) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  int e = lo;
  Vec2 a = v[e];
  Vec2 b = v[(e + 1) % n];
  Vec2 dir = b - a;
  double len = dir.norm();
  double t = (sw - shape.vertex_arclength(e)) / len;
  Vec2 tangent = dir * (1.0 / len);

  BoundarySample out;
  out.point = a + dir * t;
  out.inward_normal = tangent.perp();  // interior lies left of a CCW boundary
  out.edge = e;
  return out;
}

double local_radius(const ObjectShape& shape, double s) {
  return boundary_point(shape, s).point.norm();
}

Contact Contact::at(const ObjectShape& shape, double s, double mu) {
  BoundarySample bs = boundary_point(shape, s);
  Contact c;
  c.s = wrap_pos(s, shape.perimeter());
  c.point = bs.point;
  c.inward_normal = bs.inward_normal;
  c.mu = mu;
  return c;
}

WrenchSet contact_wrenches(const ObjectShape& shape, const std::vector<Contact>& contacts,
                           double rho) {
  if (!(rho > 0.0)) throw InvalidContactError("rho must be positive");
  WrenchSet ws;
  ws.rho = rho;
  ws.wrenches.reserve(2 * contacts.size());
  for (const Contact& c : contacts) {
    BoundarySample bs = boundary_point(shape, c.s);
    if ((bs.point - c.point).norm() > 1e-9) {
      throw InvalidContactError("contact point does not lie on the boundary at its arclength");
    }
    if (c.mu < 0.0) throw InvalidContactError("negative friction coefficient");
    Vec2 normal = bs.inward_normal;
    Vec2 tangent = normal.perp();
    for (double side : {+1.0, -1.0}) {
      Vec2 f = normal + tangent * (side * c.mu);
      Wrench w;
      w.fx = f.x;
      w.fy = f.y;
      w.tau = bs.point.cross(f) / rho;
      ws.wrenches.push_back(w);
    }
  }
  return ws;
}

// ---------------------------------------------------------------------------
// Incremental 3D convex hull.
// ---------------------------------------------------------------------------

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double dot3(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

struct Tri {
  int a, b, c;
  Vec3 n;     // outward, not normalized
  double d;   // n . x = d on the plane
  bool alive = true;
};

Tri make_tri(const std::vector<Vec3>& pts, int a, int b, int c) {
  Tri t{a, b, c, {}, 0.0, true};
  t.n = cross3(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
  t.d = dot3(t.n, pts[a]);
  return t;
}

// Builds the hull or returns false when the input is rank-deficient or an
// insertion turns out numerically inconsistent.
bool try_hull(const std::vector<Vec3>& pts, double scale, std::vector<Tri>& out) {
  int n = static_cast<int>(pts.size());
  if (n < 4) return false;
  double tol = 1e-10 * std::max(scale, 1e-30);

  // Initial simplex from spread-out points.
  int i0 = 0;
  for (int i = 1; i < n; ++i) {
    if (pts[i].x < pts[i0].x || (pts[i].x == pts[i0].x && pts[i].y < pts[i0].y)) i0 = i;
  }
  int i1 = -1;
  double best = tol;
  for (int i = 0; i < n; ++i) {
    double d = norm3(sub(pts[i], pts[i0]));
    if (d > best) {
      best = d;
      i1 = i;
    }
  }
  if (i1 < 0) return false;
  int i2 = -1;
  best = tol;
  for (int i = 0; i < n; ++i) {
    double d = norm3(cross3(sub(pts[i], pts[i0]), sub(pts[i1], pts[i0]))) /
               norm3(sub(pts[i1], pts[i0]));
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (i2 < 0) return false;
  Vec3 plane_n = cross3(sub(pts[i1], pts[i0]), sub(pts[i2], pts[i0]));
  double plane_d = dot3(plane_n, pts[i0]);
  double plane_nn = norm3(plane_n);
  int i3 = -1;
  best = tol;
  for (int i = 0; i < n; ++i) {
    double d = std::fabs(dot3(plane_n, pts[i]) - plane_d) / plane_nn;
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (i3 < 0) return false;

  std::vector<Tri> faces;
  bool above = dot3(plane_n, pts[i3]) - plane_d > 0.0;
  if (above) {
    faces.push_back(make_tri(pts, i0, i2, i1));
    faces.push_back(make_tri(pts, i0, i1, i3));
    faces.push_back(make_tri(pts, i1, i2, i3));
    faces.push_back(make_tri(pts, i2, i0, i3));
  } else {
    faces.push_back(make_tri(pts, i0, i1, i2));
    faces.push_back(make_tri(pts, i0, i3, i1));
    faces.push_back(make_tri(pts, i1, i3, i2));
    faces.push_back(make_tri(pts, i2, i3, i0));
  }

  for (int p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    // Visible faces.
    std::vector<int> visible;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (!faces[f].alive) continue;
      double side = dot3(faces[f].n, pts[p]) - faces[f].d;
      if (side > tol * std::max(1.0, norm3(faces[f].n))) visible.push_back(f);
    }
    if (visible.empty()) continue;

    // Horizon: directed edges of visible faces whose reverse never appears.
    std::vector<std::array<int, 2>> edges;
    for (int f : visible) {
      const Tri& t = faces[f];
      edges.push_back({t.a, t.b});
      edges.push_back({t.b, t.c});
      edges.push_back({t.c, t.a});
    }
    std::vector<std::array<int, 2>> horizon;
    for (const auto& e : edges) {
      bool paired = false;
      for (const auto& r : edges) {
        if (r[0] == e[1] && r[1] == e[0]) {
          paired = true;
          break;
        }
      }
      if (!paired) horizon.push_back(e);
    }
    if (horizon.empty()) return false;  // inconsistent visibility
    for (int f : visible) faces[f].alive = false;
    for (const auto& e : horizon) {
      Tri t = make_tri(pts, e[0], e[1], p);
      if (norm3(t.n) < tol * tol) return false;
      faces.push_back(t);
    }
  }

  out.clear();
  for (const Tri& t : faces) {
    if (t.alive) out.push_back(t);
  }
  // Sanity: every input point on or below every facet.
  for (const Tri& t : out) {
    double nn = norm3(t.n);
    for (const Vec3& q : pts) {
      if ((dot3(t.n, q) - t.d) / nn > 64.0 * tol) return false;
    }
  }
  return out.size() >= 4;
}

}  // namespace

std::vector<HullFacet> convex_hull_3d(const std::vector<Vec3>& points) {
  // Deduplicate; cone edges coincide for frictionless contacts.
  std::vector<Vec3> pts;
  double scale = 0.0;
  for (const Vec3& p : points) {
    bool dup = false;
    for (const Vec3& q : pts) {
      if (norm3(sub(p, q)) < 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) pts.push_back(p);
    scale = std::max(scale, norm3(p));
  }

  std::vector<Tri> tris;
  if (!try_hull(pts, scale, tris)) {
    // Exact-sign trouble or a degenerate configuration: retry with a
    // deterministic epsilon perturbation, growing it on each attempt.
    double jitter = 1e-12 * std::max(scale, 1.0);
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 100.0) {
      std::vector<Vec3> jittered = pts;
      Rng rng(derive_seed(0x9ull, attempt, pts.size()));
      for (Vec3& p : jittered) {
        p.x += jitter * (rng.uniform() - 0.5);
        p.y += jitter * (rng.uniform() - 0.5);
        p.z += jitter * (rng.uniform() - 0.5);
      }
      if (try_hull(jittered, scale, tris)) break;
      tris.clear();
    }
  }

  std::vector<HullFacet> out;
  out.reserve(tris.size());
  for (const Tri& t : tris) {
    double nn = norm3(t.n);
    if (nn <= 0.0) continue;
    HullFacet f;
    f.a = t.a;
    f.b = t.b;
    f.c = t.c;
    f.normal = {t.n.x / nn, t.n.y / nn, t.n.z / nn};
    f.offset = t.d / nn;
    out.push_back(f);
  }
  return out;
}

double epsilon_quality(const WrenchSet& wset) {
  if (wset.wrenches.empty()) return 0.0;
  std::vector<Vec3> pts;
  pts.reserve(wset.wrenches.size());
  for (const Wrench& w : wset.wrenches) pts.push_back({w.fx, w.fy, w.tau});

  std::vector<HullFacet> facets = convex_hull_3d(pts);
  if (facets.empty()) return 0.0;  // rank-deficient hull cannot enclose the origin

  double eps = std::numeric_limits<double>::infinity();
  for (const HullFacet& f : facets) {
    eps = std::min(eps, f.offset);  // signed distance origin -> facet plane
    if (eps <= 0.0) return 0.0;
  }
  return eps;
}

bool force_closure(const WrenchSet& wset) { return epsilon_quality(wset) > 0.0; }

std::vector<double> shape_encoding(const ObjectShape& shape, double object_angle,
                                   const ShapeEncodingParams& params) {
  if (params.probes < 1 || !(params.probe_radius > 0.0)) {
    throw ConfigError("shape encoding: probes >= 1 and probe_radius > 0 required");
  }
  const double cap = 2.0 * params.probe_radius;

  // Rotate the boundary once.
  const std::vector<Vec2>& v = shape.vertices();
  int n = static_cast<int>(v.size());
  std::vector<Vec2> rot(n);
  for (int i = 0; i < n; ++i) rot[i] = v[i].rotated(object_angle);

  std::vector<double> enc(params.probes, cap);
  for (int k = 0; k < params.probes; ++k) {
    double a = kTwoPi * k / params.probes;
    Vec2 origin{params.probe_radius * std::cos(a), params.probe_radius * std::sin(a)};
    Vec2 dir = (origin * -1.0).normalized();  // aimed at the hand-frame origin

    double best = cap;
    for (int e = 0; e < n; ++e) {
      const Vec2& p0 = rot[e];
      Vec2 seg = rot[(e + 1) % n] - p0;
      double den = dir.cross(seg);
      if (std::fabs(den) < 1e-15) continue;  // parallel
      Vec2 rel = p0 - origin;
      double t = rel.cross(seg) / den;  // along the ray
      double u = rel.cross(dir) / den;  // along the edge
      if (t >= 0.0 && u >= -1e-12 && u <= 1.0 + 1e-12) best = std::min(best, t);
    }
    enc[k] = std::min(best, cap);
  }
  return enc;
}

}  // namespace graspcritic
