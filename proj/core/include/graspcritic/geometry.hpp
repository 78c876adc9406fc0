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

#pragma once

#include <string>
#include <vector>

#include "graspcritic/common.hpp"

namespace graspcritic {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
  Vec2 normalized() const {
    double n = norm();
    return {x / n, y / n};
  }
  /// Counter-clockwise rotation by 90 degrees.
  Vec2 perp() const { return {-y, x}; }
  Vec2 rotated(double angle) const {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

/// Convex polygon with a counter-clockwise boundary parameterized by
/// arclength. The area centroid is the origin of the object frame; the
/// constructor re-centers input vertices accordingly.
class ObjectShape {
 public:
  ObjectShape(std::string name, std::vector<Vec2> vertices);

  const std::string& name() const { return name_; }
  const std::vector<Vec2>& vertices() const { return verts_; }
  double perimeter() const { return perimeter_; }

  /// Arclength from vertex 0 to vertex i, counter-clockwise.
  double vertex_arclength(int i) const { return cum_[i]; }

  /// Mean distance of vertices from the centroid; default torque
  /// normalization length for the wrench construction.
  double mean_vertex_radius() const { return mean_radius_; }
  /// Largest distance of any boundary point from the centroid.
  double max_radius() const { return max_radius_; }

  /// Regular n-gon of the given circumradius.
  static ObjectShape regular(std::string name, int n, double radius);

 private:
  std::string name_;
  std::vector<Vec2> verts_;
  std::vector<double> cum_;  // cum_[i] = arclength at vertex i; cum_[n] = perimeter
  double perimeter_ = 0.0;
  double mean_radius_ = 0.0;
  double max_radius_ = 0.0;
};

struct BoundarySample {
  Vec2 point;
  Vec2 inward_normal;  // unit, points into the polygon interior
  int edge = 0;        // index of the containing edge (edge i starts at vertex i)
};

/// Boundary point and inward edge normal at arclength s (wrapped into
/// [0, perimeter)). At a vertex, the edge starting at that vertex is used.
BoundarySample boundary_point(const ObjectShape& shape, double s);

/// Distance of the boundary point at arclength s from the centroid.
double local_radius(const ObjectShape& shape, double s);

/// A frictional point contact on the polygon boundary.
struct Contact {
  double s = 0.0;          // arclength position in [0, perimeter)
  Vec2 point;              // derived from s
  Vec2 inward_normal;      // derived from s
  double mu = 0.5;         // Coulomb friction coefficient

  static Contact at(const ObjectShape& shape, double s, double mu);
};

struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double tau = 0.0;  // torque / rho
};

/// The friction-cone edge wrenches of a contact set, under unit normal force
/// per contact. Torques are normalized by rho.
struct WrenchSet {
  std::vector<Wrench> wrenches;  // exactly two per contact
  double rho = 1.0;
};

/// Builds the two cone-edge wrenches per contact: force = n ± mu * t with unit
/// normal component, torque = cross(point, force) / rho. A frictionless
/// contact contributes the pure normal twice.
/// Throws InvalidContactError if a contact does not lie on the boundary.
WrenchSet contact_wrenches(const ObjectShape& shape, const std::vector<Contact>& contacts,
                           double rho);

/// Ferrari-Canny epsilon quality: radius of the largest origin-centered ball
/// inside the convex hull of the wrench set (sum-of-unit-normal-forces
/// limit model). Zero when the origin is outside or on the hull boundary,
/// including all rank-deficient hulls.
double epsilon_quality(const WrenchSet& wset);

/// Force closure test; equivalent to epsilon_quality(wset) > 0.
bool force_closure(const WrenchSet& wset);

// ---------------------------------------------------------------------------
// Shape encoding: ray distances from probe points fixed in the hand frame.
// ---------------------------------------------------------------------------

struct ShapeEncodingParams {
  int probes = 16;            // number of probe points, evenly spaced on a circle
  double probe_radius = 0.0;  // circle radius in the hand frame; must be set > 0
};

/// Distance from each probe point along the ray toward the hand-frame origin
/// to the first intersection with the object boundary rotated by
/// object_angle. A ray that misses returns the sentinel 2 * probe_radius.
std::vector<double> shape_encoding(const ObjectShape& shape, double object_angle,
                                   const ShapeEncodingParams& params);

// ---------------------------------------------------------------------------
// 3D convex hull support used by epsilon_quality. Exposed for tests.
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct HullFacet {
  int a = 0, b = 0, c = 0;
  Vec3 normal;     // outward, unit
  double offset = 0.0;  // plane is normal . x = offset
};

/// Incremental 3D convex hull. Returns the facet list, or an empty list when
/// the points are rank-deficient (all coincident, collinear, or coplanar).
/// Numerically inconsistent inserts fall back to retries with a deterministic
/// 1e-12-scale perturbation.
std::vector<HullFacet> convex_hull_3d(const std::vector<Vec3>& points);

}  // namespace graspcritic
