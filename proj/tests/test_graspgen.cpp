#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "graspcritic/graspgen.hpp"
#include "oracles.hpp"

using namespace graspcritic;
namespace oracle = graspcritic::testing;

namespace {

ObjectShape rect_long() {
  return ObjectShape("rect_long", {{0.12, -0.03}, {0.12, 0.03}, {-0.12, 0.03}, {-0.12, -0.03}});
}

EnvConfig config_for(const ObjectShape& shape) {
  EnvConfig cfg;
  cfg.encoding.probe_radius = 1.2 * shape.max_radius();
  return cfg;
}

}  // namespace

TEST_CASE("sample_candidates produces K distinct valid grasps") {
  ObjectShape shape = rect_long();
  EnvConfig cfg = config_for(shape);
  GraspSampleResult res = sample_candidates(shape, 0.7, 200, 42, cfg);
  CHECK(res.grasps.size() == 200);
  CHECK(res.shortfall == 0);

  double p = shape.perimeter();
  std::set<std::string> seen;
  for (const Grasp& g : res.grasps) {
    REQUIRE(g.contact_s.size() == 3);
    CHECK(g.base_angle == 0.0);
    CHECK(g.epsilon >= 0.0);
    // Pairwise distinctness.
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        CHECK(circ_dist(g.contact_s[i], g.contact_s[j], p) > kContactDistinctFrac * p);
      }
    }
    // Every grasp satisfies the reset precondition at base 0.
    CHECK(grasp_fits_workspace(shape, cfg, g));
    char key[128];
    std::snprintf(key, sizeof(key), "%.12f|%.12f|%.12f", g.contact_s[0], g.contact_s[1],
                  g.contact_s[2]);
    seen.insert(key);
  }
  CHECK(seen.size() == 200);  // pairwise-distinct contact tuples
}

TEST_CASE("sample_candidates is deterministic in the seed") {
  ObjectShape shape = rect_long();
  EnvConfig cfg = config_for(shape);
  GraspSampleResult a = sample_candidates(shape, -0.2, 1, 7, cfg);
  GraspSampleResult b = sample_candidates(shape, -0.2, 1, 7, cfg);
  REQUIRE(a.grasps.size() == 1);
  REQUIRE(b.grasps.size() == 1);
  for (int i = 0; i < 3; ++i) CHECK(a.grasps[0].contact_s[i] == b.grasps[0].contact_s[i]);
  CHECK(a.grasps[0].epsilon == b.grasps[0].epsilon);
}

TEST_CASE("sample_candidates reports a shortfall on degenerate arcs") {
  // Many fingers with arcs narrower than twice the distinctness margin force
  // adjacent contacts closer than the margin allows.
  ObjectShape shape = ObjectShape::regular("disc", 64, 0.1);
  EnvConfig cfg = config_for(shape);
  cfg.n_fingers = 60;
  cfg.workspace_arc = 0.01;
  GraspSampleResult res = sample_candidates(shape, 0.0, 10, 3, cfg);
  CHECK(res.shortfall > 0);
  CHECK(res.grasps.size() < 10);
}

TEST_CASE("filter_stable keeps exactly the grasps at or above the threshold") {
  ObjectShape shape = rect_long();
  EnvConfig cfg = config_for(shape);
  GraspSampleResult res = sample_candidates(shape, 0.0, 50, 11, cfg);

  // Oracle epsilons from the independent sampling route decide the expected
  // subset.
  double thr = default_stability_threshold(res.grasps);
  std::vector<int> expected;
  for (const Grasp& g : res.grasps) {
    std::vector<Contact> contacts;
    for (double s : g.contact_s) contacts.push_back(Contact::at(shape, s, nominal_mu(cfg)));
    double ref =
        oracle::epsilon_sampling_oracle(contact_wrenches(shape, contacts, wrench_rho(shape, cfg)));
    // Classify with the oracle value, skipping grasps within its resolution
    // of the threshold.
    if (std::fabs(ref - thr) < 0.005 * thr + 1e-6) continue;
    if (ref >= thr) expected.push_back(g.id);
  }
  std::vector<Grasp> kept = filter_stable(res.grasps, thr);
  std::set<int> kept_ids;
  for (const Grasp& g : kept) kept_ids.insert(g.id);
  for (int id : expected) CHECK(kept_ids.count(id) == 1);
  for (const Grasp& g : res.grasps) {
    std::vector<Contact> contacts;
    for (double s : g.contact_s) contacts.push_back(Contact::at(shape, s, nominal_mu(cfg)));
    double ref =
        oracle::epsilon_sampling_oracle(contact_wrenches(shape, contacts, wrench_rho(shape, cfg)));
    if (ref < thr - 0.005 * thr - 1e-6) CHECK(kept_ids.count(g.id) == 0);
  }

  // Order and ids preserved.
  for (size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1].id < kept[i].id);

  // Identity at threshold zero; idempotence.
  CHECK(filter_stable(res.grasps, 0.0).size() == res.grasps.size());
  std::vector<Grasp> twice = filter_stable(kept, thr);
  CHECK(twice.size() == kept.size());

  // All-zero epsilons: empty-candidate-set error.
  std::vector<Grasp> zeros(3);
  for (int i = 0; i < 3; ++i) zeros[i].epsilon = 0.0;
  CHECK_THROWS_AS(filter_stable(zeros, 0.5), EmptyCandidateSetError);
}

TEST_CASE("enumerate_base_rotations grids") {
  std::vector<double> three = enumerate_base_rotations(kPi / 2.0, kPi / 2.0);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == doctest::Approx(-kPi / 2.0));
  CHECK(three[1] == doctest::Approx(0.0));
  CHECK(three[2] == doctest::Approx(kPi / 2.0));

  CHECK(enumerate_base_rotations(kPi / 2.0, kPi / 16.0).size() == 17);
  CHECK_THROWS_AS(enumerate_base_rotations(1.0, 0.0), ContractViolationError);

  // 200 grasps x 90 base poses = 18000 scoring candidates.
  std::vector<double> grid90 = base_rotation_grid(kPi / 2.0, 90);
  CHECK(grid90.size() == 90);
  CHECK(200 * grid90.size() == 18000);
  CHECK(base_rotation_grid(kPi / 2.0, 1).size() == 1);
}

TEST_CASE("candidate sets cover the workspace arcs") {
  ObjectShape shape = rect_long();
  EnvConfig cfg = config_for(shape);
  double p = shape.perimeter();
  double half = cfg.arc_half_width(p);
  double kappa = p / kTwoPi;

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    double angle = 0.3 * seed;
    GraspSampleResult res = sample_candidates(shape, angle, 200, seed, cfg);
    REQUIRE(res.grasps.size() == 200);
    // 10-bin histogram per finger arc; >= 90% of bins must be populated.
    for (int f = 0; f < cfg.n_fingers; ++f) {
      std::vector<int> hist(10, 0);
      for (const Grasp& g : res.grasps) {
        double u = wrap_pos(g.contact_s[f] + kappa * angle, p);
        double rel = wrap_signed(u - cfg.arc_center(f, p), p);  // in [-half, half]
        int bin = std::clamp(static_cast<int>((rel + half) / (2 * half) * 10), 0, 9);
        hist[bin] += 1;
      }
      int filled = 0;
      for (int c : hist) filled += c > 0 ? 1 : 0;
      CHECK(filled >= 9);
    }
  }
}

TEST_CASE("grasp CSV round-trip") {
  ObjectShape shape = rect_long();
  EnvConfig cfg = config_for(shape);
  GraspSampleResult res = sample_candidates(shape, 0.5, 20, 99, cfg);

  std::string path = std::filesystem::temp_directory_path() / "gc_grasps_test.csv";
  save_grasps_csv(path, res.grasps, cfg.n_fingers, 0xabcdef1234567890ull);
  std::vector<Grasp> loaded = load_grasps_csv(path, cfg.n_fingers);
  REQUIRE(loaded.size() == res.grasps.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == res.grasps[i].id);
    CHECK(loaded[i].initial_object_angle == res.grasps[i].initial_object_angle);
    CHECK(loaded[i].base_angle == res.grasps[i].base_angle);
    CHECK(loaded[i].epsilon == res.grasps[i].epsilon);
    for (int f = 0; f < cfg.n_fingers; ++f) {
      CHECK(loaded[i].contact_s[f] == res.grasps[i].contact_s[f]);
    }
  }
  std::filesystem::remove(path);
}
