#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "graspcritic/checkpoint.hpp"
#include "graspcritic/config.hpp"

using namespace graspcritic;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

Checkpoint make_checkpoint(std::uint64_t seed) {
  Checkpoint ck;
  ck.agent = Agent::init(14, 4, {16, 8}, {12, 12}, seed);
  Rng rng(seed + 1);
  for (auto& t : ck.agent.tensors()) {
    for (size_t i = 0; i < t.size; ++i) t.data[i] += static_cast<float>(0.05 * rng.normal());
  }
  std::vector<float> row(14);
  for (int i = 0; i < 50; ++i) {
    for (float& v : row) v = static_cast<float>(rng.normal());
    ck.agent.norm.update_row(row.data());
  }
  {
    auto params = ck.agent.tensors();
    ck.adam.init(params);
  }
  for (auto& m : ck.adam.m) {
    for (float& v : m) v = static_cast<float>(rng.normal());
  }
  ck.adam.t = 321;
  ck.meta.config_hash = 0x1234abcd5678ef90ull;
  ck.meta.obs_dim = 14;
  ck.meta.action_dim = 4;
  ck.meta.n_fingers = 2;
  ck.meta.actor_hidden = {16, 8};
  ck.meta.critic_hidden = {12, 12};
  ck.meta.gamma = 0.99;
  ck.meta.iteration = 7;
  ck.meta.env_steps = 12345;
  return ck;
}

}  // namespace

TEST_CASE("checkpoint round-trip is exact") {
  Checkpoint ck = make_checkpoint(55);
  std::string path = tmp_path("gc_ckpt_test.ckpt");
  save_checkpoint(path, ck);
  Checkpoint loaded = load_checkpoint(path);

  CHECK(loaded.meta.config_hash == ck.meta.config_hash);
  CHECK(loaded.meta.obs_dim == 14);
  CHECK(loaded.meta.action_dim == 4);
  CHECK(loaded.meta.n_fingers == 2);
  CHECK(loaded.meta.actor_hidden == ck.meta.actor_hidden);
  CHECK(loaded.meta.critic_hidden == ck.meta.critic_hidden);
  CHECK(loaded.meta.iteration == 7);
  CHECK(loaded.meta.env_steps == 12345);
  CHECK(loaded.adam.t == 321);
  CHECK(loaded.agent.norm.count == ck.agent.norm.count);
  for (int i = 0; i < 14; ++i) {
    CHECK(loaded.agent.norm.mean[i] == ck.agent.norm.mean[i]);  // exact, %.17g round-trip
    CHECK(loaded.agent.norm.m2[i] == ck.agent.norm.m2[i]);
  }

  auto orig = ck.agent.tensors();
  auto back = loaded.agent.tensors();
  REQUIRE(orig.size() == back.size());
  for (size_t t = 0; t < orig.size(); ++t) {
    CHECK(orig[t].name == back[t].name);
    REQUIRE(orig[t].size == back[t].size);
    for (size_t i = 0; i < orig[t].size; ++i) CHECK(orig[t].data[i] == back[t].data[i]);
  }
  for (size_t t = 0; t < ck.adam.m.size(); ++t) {
    for (size_t i = 0; i < ck.adam.m[t].size(); ++i) {
      CHECK(loaded.adam.m[t][i] == ck.adam.m[t][i]);
      CHECK(loaded.adam.v[t][i] == ck.adam.v[t][i]);
    }
  }

  // Saving the loaded checkpoint reproduces the file byte for byte.
  std::string path2 = tmp_path("gc_ckpt_test2.ckpt");
  save_checkpoint(path2, loaded);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("malformed checkpoints are rejected") {
  std::string path = tmp_path("gc_ckpt_bad.ckpt");
  {
    std::ofstream out(path);
    out << "graspcritic-checkpoint v999\nconfig_hash 0\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("version mismatch"), CheckpointFormatError);
  {
    std::ofstream out(path);
    out << "not a checkpoint at all\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
  CHECK_THROWS_AS(load_checkpoint(tmp_path("gc_missing.ckpt")), CheckpointFormatError);

  // Truncated tensor data.
  Checkpoint ck = make_checkpoint(66);
  save_checkpoint(path, ck);
  std::error_code ec;
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2, ec);
  REQUIRE_FALSE(ec);
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
  std::filesystem::remove(path);
}

TEST_CASE("config hashing is canonical and sensitive") {
  RunConfig a;
  a.shapes_path = "configs/shapes.json";
  a.shape_names = {"disc32", "hexagon"};
  a.env.encoding.probe_radius = 0.15;
  RunConfig b = a;
  CHECK(config_hash(a) == config_hash(b));

  b.env.success_threshold_theta = 0.41;
  CHECK(config_hash(a) != config_hash(b));

  // Output location and worker count do not change experiment identity.
  RunConfig c = a;
  c.out_dir = "elsewhere";
  c.workers = 4;
  CHECK(config_hash(a) == config_hash(c));
}
