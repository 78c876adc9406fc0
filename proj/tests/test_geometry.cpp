#include <doctest.h>

#include <cmath>

#include "graspcritic/geometry.hpp"
#include "oracles.hpp"

using namespace graspcritic;
namespace oracle = graspcritic::testing;

namespace {

ObjectShape unit_square() {
  // Vertex 0 at (0.5, -0.5), counter-clockwise.
  return ObjectShape("unit_square", {{0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}});
}

std::vector<ObjectShape> test_shapes() {
  std::vector<ObjectShape> shapes;
  shapes.push_back(ObjectShape::regular("disc32", 32, 0.12));
  shapes.push_back(ObjectShape::regular("hexagon", 6, 0.10));
  shapes.push_back(ObjectShape("rect_long",
                               {{0.12, -0.03}, {0.12, 0.03}, {-0.12, 0.03}, {-0.12, -0.03}}));
  shapes.push_back(unit_square());
  return shapes;
}

/// Random contact set with a minimum pairwise separation.
std::vector<Contact> random_contacts(const ObjectShape& shape, int n, double mu, Rng& rng) {
  double p = shape.perimeter();
  std::vector<Contact> out;
  int guard = 0;
  while (static_cast<int>(out.size()) < n && guard++ < 10000) {
    double s = rng.uniform(0.0, p);
    bool ok = true;
    for (const Contact& c : out) {
      if (circ_dist(c.s, s, p) < 0.02 * p) ok = false;
    }
    if (ok) out.push_back(Contact::at(shape, s, mu));
  }
  REQUIRE(static_cast<int>(out.size()) == n);
  return out;
}

}  // namespace

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(ObjectShape("two", {{0, 0}, {1, 0}}), InvalidShapeError);
  // Clockwise ordering is rejected.
  CHECK_THROWS_AS(ObjectShape("cw", {{0.5, -0.5}, {-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}}),
                  InvalidShapeError);
  // Non-convex polygon.
  CHECK_THROWS_AS(
      ObjectShape("dent", {{1, 0}, {0.1, 0.1}, {0, 1}, {-1, 0}, {0, -1}}),
      InvalidShapeError);
  // Centroid is re-centered to the origin.
  ObjectShape sq("sq", {{1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}, {1.0, 2.0}});
  double cx = 0.0, cy = 0.0;
  for (const Vec2& v : sq.vertices()) {
    cx += v.x;
    cy += v.y;
  }
  CHECK(std::fabs(cx) < 1e-12);
  CHECK(std::fabs(cy) < 1e-12);
}

TEST_CASE("boundary_point on the unit square") {
  ObjectShape sq = unit_square();
  CHECK(sq.perimeter() == doctest::Approx(4.0));

  BoundarySample s0 = boundary_point(sq, 0.0);
  CHECK(s0.point.x == doctest::Approx(0.5));
  CHECK(s0.point.y == doctest::Approx(-0.5));
  CHECK(s0.inward_normal.x == doctest::Approx(-1.0));
  CHECK(s0.inward_normal.y == doctest::Approx(0.0));

  BoundarySample mid = boundary_point(sq, 0.5);
  CHECK(mid.point.x == doctest::Approx(0.5));
  CHECK(mid.point.y == doctest::Approx(0.0));
  CHECK(mid.inward_normal.x == doctest::Approx(-1.0));
  CHECK(mid.inward_normal.y == doctest::Approx(0.0));

  // Wrapping: s = perimeter + 0.5 behaves like s = 0.5.
  BoundarySample wrapped = boundary_point(sq, 4.5);
  CHECK(wrapped.point.x == doctest::Approx(mid.point.x));
  CHECK(wrapped.point.y == doctest::Approx(mid.point.y));
  CHECK(wrapped.inward_normal.x == doctest::Approx(mid.inward_normal.x));
}

TEST_CASE("boundary_point is 1-Lipschitz in arclength") {
  Rng rng(42);
  for (const ObjectShape& shape : test_shapes()) {
    double p = shape.perimeter();
    for (int i = 0; i < 200; ++i) {
      double s1 = rng.uniform(0.0, p);
      double s2 = rng.uniform(0.0, p);
      double chord = (boundary_point(shape, s1).point - boundary_point(shape, s2).point).norm();
      CHECK(chord <= circ_dist(s1, s2, p) + 1e-12);
    }
  }
}

TEST_CASE("contact_wrenches: frictionless cone degenerates to the normal") {
  ObjectShape sq = unit_square();
  std::vector<Contact> contacts{Contact::at(sq, 0.5, 0.0)};  // point (0.5, 0)
  WrenchSet ws = contact_wrenches(sq, contacts, 1.0);
  REQUIRE(ws.wrenches.size() == 2);
  for (const Wrench& w : ws.wrenches) {
    CHECK(w.fx == doctest::Approx(-1.0));
    CHECK(w.fy == doctest::Approx(0.0));
    CHECK(w.tau == doctest::Approx(0.0));
  }
}

TEST_CASE("contact_wrenches: cone edges at mu = 0.5") {
  // Hand computation at contact (0.5, 0), inward normal (-1, 0), rho = 1:
  // forces (-1, +-0.5), torques cross(point, force) = 0.5 * f_y = +-0.25.
  ObjectShape sq = unit_square();
  WrenchSet ws = contact_wrenches(sq, {Contact::at(sq, 0.5, 0.5)}, 1.0);
  REQUIRE(ws.wrenches.size() == 2);
  bool seen_pos = false, seen_neg = false;
  for (const Wrench& w : ws.wrenches) {
    CHECK(w.fx == doctest::Approx(-1.0));
    CHECK(std::fabs(w.fy) == doctest::Approx(0.5));
    CHECK(w.tau == doctest::Approx(0.5 * w.fy));
    seen_pos |= w.fy > 0;
    seen_neg |= w.fy < 0;
  }
  CHECK(seen_pos);
  CHECK(seen_neg);
  // Force magnitude stays within sqrt(1 + mu^2).
  for (const Wrench& w : ws.wrenches) {
    CHECK(std::hypot(w.fx, w.fy) <= std::sqrt(1.0 + 0.25) + 1e-9);
  }
}

TEST_CASE("contact_wrenches: antipodal contacts oppose pairwise") {
  ObjectShape sq = unit_square();
  // (0.5, 0) and (-0.5, 0) sit at arclengths 0.5 and 2.5.
  WrenchSet ws = contact_wrenches(sq, {Contact::at(sq, 0.5, 0.3), Contact::at(sq, 2.5, 0.3)}, 1.0);
  REQUIRE(ws.wrenches.size() == 4);
  for (int i = 0; i < 2; ++i) {
    bool found = false;
    for (int j = 2; j < 4; ++j) {
      if (std::fabs(ws.wrenches[i].fx + ws.wrenches[j].fx) < 1e-9 &&
          std::fabs(ws.wrenches[i].fy + ws.wrenches[j].fy) < 1e-9) {
        found = true;
      }
    }
    CHECK(found);
  }
  CHECK_THROWS_AS(contact_wrenches(sq, {Contact{0.5, {3.0, 3.0}, {-1, 0}, 0.3}}, 1.0),
                  InvalidContactError);
}

TEST_CASE("epsilon_quality degenerate hulls are zero") {
  ObjectShape sq = unit_square();
  // Single frictionless contact: hull is a point.
  CHECK(epsilon_quality(contact_wrenches(sq, {Contact::at(sq, 0.5, 0.0)}, 1.0)) == 0.0);

  // Two antipodal frictionless contacts on a disc through the center: no
  // torque resistance, flat hull.
  ObjectShape disc = ObjectShape::regular("disc", 64, 0.1);
  double p = disc.perimeter();
  WrenchSet flat =
      contact_wrenches(disc, {Contact::at(disc, 0.0, 0.0), Contact::at(disc, p / 2, 0.0)}, 1.0);
  CHECK(epsilon_quality(flat) == 0.0);
}

TEST_CASE("epsilon_quality matches the sampling oracle on the hexagon example") {
  ObjectShape hex = ObjectShape::regular("hexagon", 6, 0.10);
  double p = hex.perimeter();
  double rho = hex.mean_vertex_radius();
  // Edge midpoints 120 degrees apart.
  std::vector<Contact> contacts{Contact::at(hex, p / 12.0, 0.5),
                                Contact::at(hex, p / 12.0 + p / 3.0, 0.5),
                                Contact::at(hex, p / 12.0 + 2.0 * p / 3.0, 0.5)};
  WrenchSet ws = contact_wrenches(hex, contacts, rho);
  double eps = epsilon_quality(ws);
  CHECK(eps > 0.0);
  double ref = oracle::epsilon_sampling_oracle(ws);
  CHECK(std::fabs(eps - ref) <= 0.02 * ref);
}

TEST_CASE("epsilon_quality is invariant under global rotation") {
  Rng rng(7);
  for (const ObjectShape& shape : test_shapes()) {
    for (int trial = 0; trial < 20; ++trial) {
      double mu = rng.uniform(0.2, 0.8);
      std::vector<Contact> contacts = random_contacts(shape, 3, mu, rng);
      double rho = shape.mean_vertex_radius();
      double eps0 = epsilon_quality(contact_wrenches(shape, contacts, rho));

      double angle = rng.uniform(-kPi, kPi);
      std::vector<Vec2> rotated;
      for (const Vec2& v : shape.vertices()) rotated.push_back(v.rotated(angle));
      ObjectShape shape_r("rot", rotated);
      std::vector<Contact> contacts_r;
      for (const Contact& c : contacts) contacts_r.push_back(Contact::at(shape_r, c.s, c.mu));
      double eps1 = epsilon_quality(contact_wrenches(shape_r, contacts_r, rho));
      CHECK(eps0 == doctest::Approx(eps1).epsilon(1e-6));
    }
  }
}

TEST_CASE("epsilon_quality never decreases when a contact is added") {
  Rng rng(11);
  std::vector<ObjectShape> shapes = test_shapes();
  for (int trial = 0; trial < 200; ++trial) {
    const ObjectShape& shape = shapes[trial % shapes.size()];
    double mu = rng.uniform(0.1, 0.8);
    std::vector<Contact> contacts = random_contacts(shape, 4, mu, rng);
    std::vector<Contact> base(contacts.begin(), contacts.begin() + 3);
    double rho = shape.mean_vertex_radius();
    double eps3 = epsilon_quality(contact_wrenches(shape, base, rho));
    double eps4 = epsilon_quality(contact_wrenches(shape, contacts, rho));
    CHECK(eps4 >= eps3 - 1e-9);
  }
}

TEST_CASE("force closure iff epsilon positive iff origin strictly inside") {
  Rng rng(13);
  std::vector<ObjectShape> shapes = test_shapes();
  int tested = 0, guard = 0;
  while (tested < 500 && guard++ < 5000) {
    const ObjectShape& shape = shapes[guard % shapes.size()];
    int n = 2 + rng.uniform_int(3);
    double mu = rng.uniform(0.0, 0.9);
    std::vector<Contact> contacts = random_contacts(shape, n, mu, rng);
    WrenchSet ws = contact_wrenches(shape, contacts, shape.mean_vertex_radius());

    // Independent origin-position probe; skip the marginal band where the
    // sampled support function cannot resolve the sign.
    double support_min = oracle::min_support(ws, 4000);
    if (std::fabs(support_min) < 0.05) continue;
    tested += 1;

    double eps = epsilon_quality(ws);
    bool closure = force_closure(ws);
    CHECK(closure == (eps > 0.0));
    if (support_min > 0.0) {
      CHECK(closure);
    } else {
      CHECK_FALSE(closure);
    }
  }
  CHECK(tested == 500);
}

TEST_CASE("epsilon_quality tracks both oracles on random stable grasps") {
  // "Stable" means passing the candidate stability filter, as the selection
  // pipeline uses it; near-degenerate contact sets are excluded the same way
  // they are excluded everywhere else.
  Rng rng(17);
  std::vector<ObjectShape> shapes = test_shapes();
  int stable_checked = 0, guard = 0;
  while (stable_checked < 100 && guard++ < 3000) {
    const ObjectShape& shape = shapes[guard % shapes.size()];
    int n = 3 + rng.uniform_int(2);
    double mu = rng.uniform(0.25, 0.8);
    std::vector<Contact> contacts = random_contacts(shape, n, mu, rng);
    WrenchSet ws = contact_wrenches(shape, contacts, shape.mean_vertex_radius());
    double eps = epsilon_quality(ws);
    if (eps < 0.05 * 0.5) continue;  // 5% of a typical best-in-batch epsilon
    stable_checked += 1;

    // Facet enumeration computes the same quantity independently.
    double facet = oracle::epsilon_facet_oracle(ws);
    CHECK(eps == doctest::Approx(facet).epsilon(1e-7));

    // Boundary-distance sampling resolves epsilon to well under 2%.
    double sampled = oracle::epsilon_sampling_oracle(ws);
    if (eps >= 5e-3) {
      CHECK(std::fabs(sampled - eps) <= 0.02 * eps);
    } else {
      CHECK(std::fabs(sampled - eps) < 1e-4);
    }

    // The support-function minimum bounds epsilon from above.
    CHECK(oracle::support_min_oracle(ws, 2000) >= eps - 1e-9);
  }
  CHECK(stable_checked == 100);
}

TEST_CASE("convex_hull_3d agrees with facet enumeration on random clouds") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 5 + rng.uniform_int(6);
    WrenchSet ws;
    ws.rho = 1.0;
    for (int i = 0; i < n; ++i) {
      ws.wrenches.push_back(
          {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    }
    CHECK(epsilon_quality(ws) == doctest::Approx(oracle::epsilon_facet_oracle(ws)).epsilon(1e-7));
  }
}

TEST_CASE("shape_encoding symmetry and oracle") {
  ShapeEncodingParams params;
  params.probes = 16;

  ObjectShape gon16 = ObjectShape::regular("gon16", 16, 0.1);
  params.probe_radius = 1.2 * gon16.max_radius();
  std::vector<double> enc0 = shape_encoding(gon16, 0.0, params);
  std::vector<double> enc1 = shape_encoding(gon16, kTwoPi / 16.0, params);
  std::vector<double> enc5 = shape_encoding(gon16, 5.0 * kTwoPi / 16.0, params);
  for (int i = 0; i < 16; ++i) {
    CHECK(enc0[i] == doctest::Approx(enc1[i]).epsilon(1e-9));
    CHECK(enc0[i] == doctest::Approx(enc5[i]).epsilon(1e-9));
  }

  ObjectShape sq = unit_square();
  params.probe_radius = 1.2 * sq.max_radius();
  std::vector<double> sq0 = shape_encoding(sq, 0.0, params);
  std::vector<double> sq_pi = shape_encoding(sq, kPi, params);
  for (int i = 0; i < 16; ++i) CHECK(sq0[i] == doctest::Approx(sq_pi[i]).epsilon(1e-9));

  // Independent ray-march oracle at an asymmetric angle.
  double angle = kPi / 4.0;
  std::vector<double> enc = shape_encoding(sq, angle, params);
  for (int k = 0; k < 16; ++k) {
    double a = kTwoPi * k / 16.0;
    Vec2 origin{params.probe_radius * std::cos(a), params.probe_radius * std::sin(a)};
    Vec2 dir = (origin * -1.0).normalized();
    double ref = oracle::ray_march_distance(sq, angle, origin, dir, 2.0 * params.probe_radius,
                                            2.0 * params.probe_radius);
    CHECK(enc[k] == doctest::Approx(ref).epsilon(1e-6));
  }
}
