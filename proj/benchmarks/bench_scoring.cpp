#include <benchmark/benchmark.h>

#include "graspcritic/env.hpp"
#include "graspcritic/graspgen.hpp"
#include "graspcritic/scoring.hpp"

namespace gc = graspcritic;

namespace {

gc::EnvConfig bench_config(const gc::ObjectShape& shape) {
  gc::EnvConfig cfg;
  cfg.encoding.probe_radius = 1.2 * shape.max_radius();
  return cfg;
}

gc::ObjectShape rect() {
  return gc::ObjectShape("rect_long", {{0.12, -0.03}, {0.12, 0.03}, {-0.12, 0.03},
                                       {-0.12, -0.03}});
}

}  // namespace

static void BM_EpsilonQuality(benchmark::State& state) {
  gc::ObjectShape shape = rect();
  gc::EnvConfig cfg = bench_config(shape);
  gc::GraspSampleResult sampled = gc::sample_candidates(shape, 0.3, 64, 1234, cfg);
  size_t i = 0;
  for (auto _ : state) {
    const gc::Grasp& g = sampled.grasps[i++ % sampled.grasps.size()];
    benchmark::DoNotOptimize(gc::grasp_epsilon(shape, cfg, g));
  }
}
BENCHMARK(BM_EpsilonQuality);

static void BM_ShapeEncoding(benchmark::State& state) {
  gc::ObjectShape shape = rect();
  gc::EnvConfig cfg = bench_config(shape);
  double angle = 0.0;
  for (auto _ : state) {
    angle += 0.01;
    benchmark::DoNotOptimize(gc::shape_encoding(shape, angle, cfg.encoding));
  }
}
BENCHMARK(BM_ShapeEncoding);

static void BM_EnvStep(benchmark::State& state) {
  gc::ObjectShape shape = rect();
  gc::EnvConfig cfg = bench_config(shape);
  gc::GraspSampleResult sampled = gc::sample_candidates(shape, 0.0, 8, 99, cfg);
  std::vector<gc::Grasp> stable =
      gc::filter_stable(sampled.grasps, gc::default_stability_threshold(sampled.grasps));
  gc::Environment env(shape, cfg);
  env.reset(stable.front(), 1.0, 7);
  std::vector<double> action(cfg.action_dim(), 0.0);
  for (int i = 0; i < cfg.n_fingers; ++i) action[cfg.n_fingers + i] = 1.0;
  for (auto _ : state) {
    if (env.state().terminal) env.reset(stable.front(), 1.0, 7);
    benchmark::DoNotOptimize(env.step(action));
  }
}
BENCHMARK(BM_EnvStep);

// The full candidate-scoring workload: observation construction, shape
// encodings, and one batched critic pass over state.range(0) candidates.
static void BM_ScoreCandidates(benchmark::State& state) {
  gc::ObjectShape shape = rect();
  gc::EnvConfig cfg = bench_config(shape);
  gc::Agent agent = gc::Agent::init(cfg.obs_dim(), cfg.action_dim(), {256, 256}, {256, 256}, 21);

  int n = static_cast<int>(state.range(0));
  int grasps = 200;
  int bases = (n + grasps - 1) / grasps;
  gc::GraspSampleResult sampled = gc::sample_candidates(shape, 0.4, grasps, 77, cfg);
  std::vector<double> grid = gc::base_rotation_grid(gc::kPi / 2.0, bases);
  std::vector<std::pair<gc::Grasp, double>> cands;
  for (double b : grid) {
    for (const gc::Grasp& g : sampled.grasps) cands.emplace_back(g, b);
  }
  cands.resize(n);

  for (auto _ : state) {
    benchmark::DoNotOptimize(gc::score_candidates(agent, cands, 0.9, shape, cfg));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ScoreCandidates)->Arg(200)->Arg(3400)->Arg(18000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
