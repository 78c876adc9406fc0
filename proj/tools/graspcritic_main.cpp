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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "graspcritic/checkpoint.hpp"
#include "graspcritic/config.hpp"
#include "graspcritic/evalharness.hpp"
#include "graspcritic/scoring.hpp"
#include "graspcritic/train.hpp"

namespace gc = graspcritic;

namespace {

// Exit codes shared with the test suite:
//   0 success, 2 invalid config / missing file, 3 empty stable candidate set,
//   4 malformed or mismatched checkpoint.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyCandidates = 3;
constexpr int kExitCheckpoint = 4;

struct CommonOpts {
  std::string config_path = "configs/default.json";
  std::string out_dir;
  std::uint64_t train_seed = 0, grasp_seed = 0, eval_seed = 0;
  bool has_train_seed = false, has_grasp_seed = false, has_eval_seed = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Run config JSON");
  cmd->add_option("--out", o.out_dir, "Output directory (overrides config and GRASPCRITIC_OUT)");
  cmd->add_option("--seed-train", o.train_seed)->each([&](const std::string&) {
    o.has_train_seed = true;
  });
  cmd->add_option("--seed-grasp", o.grasp_seed)->each([&](const std::string&) {
    o.has_grasp_seed = true;
  });
  cmd->add_option("--seed-eval", o.eval_seed)->each([&](const std::string&) {
    o.has_eval_seed = true;
  });
  cmd->add_option("--workers", o.workers, "Worker threads; 1 = bitwise-reproducible runs");
}

gc::RunConfig load_config_or_exit(const CommonOpts& o) {
  if (!std::filesystem::exists(o.config_path)) {
    std::fprintf(stderr, "error: config file not found: %s\n", o.config_path.c_str());
    std::exit(kExitConfig);
  }
  gc::RunConfig cfg = gc::load_run_config(o.config_path);
  if (!o.out_dir.empty()) {
    cfg.out_dir = o.out_dir;
  } else if (const char* env_out = std::getenv("GRASPCRITIC_OUT")) {
    cfg.out_dir = env_out;
  }
  if (o.has_train_seed) cfg.train_seed = o.train_seed;
  if (o.has_grasp_seed) cfg.grasp_seed = o.grasp_seed;
  if (o.has_eval_seed) cfg.eval_seed = o.eval_seed;
  if (o.workers > 0) cfg.workers = o.workers;
  return cfg;
}

std::vector<gc::ObjectShape> resolve_or_exit(gc::RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.shapes_path)) {
    std::fprintf(stderr, "error: shape library not found: %s\n", cfg.shapes_path.c_str());
    std::exit(kExitConfig);
  }
  return gc::resolve_shapes(cfg);
}

gc::Checkpoint load_checkpoint_or_exit(const std::string& path) {
  try {
    return gc::load_checkpoint(path);
  } catch (const gc::CheckpointFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::exit(kExitCheckpoint);
  }
}

int run_train(const CommonOpts& opts, std::int64_t total_steps_override, bool has_total,
              const std::string& resume_path) {
  gc::RunConfig cfg = load_config_or_exit(opts);
  std::vector<gc::ObjectShape> shapes = resolve_or_exit(cfg);
  if (has_total) cfg.train.total_steps = total_steps_override;
  cfg.train.out_dir = cfg.out_dir;
  std::uint64_t hash = gc::config_hash(cfg);

  gc::Checkpoint resume;
  bool resuming = !resume_path.empty();
  if (resuming) resume = load_checkpoint_or_exit(resume_path);

  gc::TrainResult result =
      gc::train(shapes, cfg.env, cfg.train, cfg.train_seed, cfg.grasp_seed, hash,
                resuming ? &resume : nullptr);
  std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
  std::printf("log: %s\n", result.log_path.c_str());
  return kExitOk;
}

int run_score(const CommonOpts& opts, const std::string& ckpt_path, const std::string& shape_name,
              double object_angle, double goal_angle, int k_override, int grid_override) {
  gc::RunConfig cfg = load_config_or_exit(opts);
  std::vector<gc::ObjectShape> shapes = resolve_or_exit(cfg);
  std::uint64_t hash = gc::config_hash(cfg);
  gc::Checkpoint ck = load_checkpoint_or_exit(ckpt_path);

  const gc::ObjectShape* shape = nullptr;
  for (const gc::ObjectShape& s : shapes) {
    if (s.name() == shape_name) shape = &s;
  }
  if (!shape) {
    std::fprintf(stderr, "error: shape '%s' is not in the configured set\n", shape_name.c_str());
    return kExitConfig;
  }

  int k = k_override > 0 ? k_override : cfg.score.candidates;
  int grid_n = grid_override > 0 ? grid_override : cfg.score.base_grid;

  gc::GraspSampleResult sampled =
      gc::sample_candidates(*shape, object_angle, k, gc::derive_seed(cfg.grasp_seed, 0x5C0), cfg.env);
  std::vector<gc::Grasp> stable;
  try {
    stable = gc::filter_stable(sampled.grasps, gc::default_stability_threshold(sampled.grasps));
  } catch (const gc::EmptyCandidateSetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitEmptyCandidates;
  }

  std::vector<double> grid = gc::base_rotation_grid(cfg.score.base_limit, grid_n);
  std::vector<std::pair<gc::Grasp, double>> cands;
  cands.reserve(stable.size() * grid.size());
  for (double b : grid) {
    for (const gc::Grasp& g : stable) cands.emplace_back(g, b);
  }

  auto t0 = std::chrono::steady_clock::now();
  std::vector<gc::ScoredCandidate> scored =
      gc::score_candidates(ck.agent, cands, goal_angle, *shape, cfg.env);
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::filesystem::create_directories(cfg.out_dir);
  std::string csv_path = cfg.out_dir + "/scores.csv";
  gc::save_scores_csv(csv_path, scored, hash);
  // The stable candidate set itself, for reproducible evaluation sets.
  std::string grasps_path = cfg.out_dir + "/grasps.csv";
  gc::save_grasps_csv(grasps_path, stable, cfg.env.n_fingers, hash);

  // Top-k by sparse-head score.
  std::vector<const gc::ScoredCandidate*> order;
  order.reserve(scored.size());
  for (const gc::ScoredCandidate& c : scored) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->v_s > b->v_s;
  });
  double mean_vs = 0.0;
  for (const gc::ScoredCandidate& c : scored) mean_vs += c.v_s;
  mean_vs /= static_cast<double>(scored.size());

  std::printf("scored %zu candidates (%zu grasps x %zu base angles) in %.3f s\n", scored.size(),
              stable.size(), grid.size(), dt);
  std::printf("mean v_s over all candidates: %.4f\n", mean_vs);
  std::printf("top %d by v_s:\n", cfg.score.top_k);
  std::printf("  %8s %12s %10s %10s %10s\n", "grasp_id", "base_angle", "epsilon", "v_d", "v_s");
  for (int i = 0; i < cfg.score.top_k && i < static_cast<int>(order.size()); ++i) {
    const gc::ScoredCandidate& c = *order[i];
    std::printf("  %8d %12.4f %10.4f %10.4f %10.4f\n", c.grasp_id, c.base_angle, c.epsilon, c.v_d,
                c.v_s);
  }
  std::printf("selected per strategy:\n");
  for (gc::Strategy s : gc::all_strategies()) {
    gc::Rng rng(gc::derive_seed(cfg.eval_seed, 0xA11));
    std::vector<gc::ScoredCandidate> domain;
    if (s == gc::Strategy::kHighestScoringMoveBase) {
      domain = scored;
    } else {
      for (const gc::ScoredCandidate& c : scored) {
        if (c.base_angle == 0.0) domain.push_back(c);
      }
      if (domain.empty()) domain = scored;
    }
    gc::ScoredCandidate pick = gc::select_candidate(s, domain, rng);
    std::printf("  %-26s grasp %4d base %8.4f v_s %8.4f epsilon %.4f\n", gc::strategy_name(s),
                pick.grasp_id, pick.base_angle, pick.v_s, pick.epsilon);
  }
  std::printf("scores csv: %s\n", csv_path.c_str());
  return kExitOk;
}

int run_eval(const CommonOpts& opts, const std::string& ckpt_path, int trials_override,
             const std::vector<std::string>& strategy_names, const std::string& verify_path,
             bool full, bool trace, const std::string& correlation_shape, int pairs_override) {
  gc::RunConfig cfg = load_config_or_exit(opts);
  std::vector<gc::ObjectShape> shapes = resolve_or_exit(cfg);
  std::uint64_t hash = gc::config_hash(cfg);

  if (!verify_path.empty()) {
    if (!std::filesystem::exists(verify_path)) {
      std::fprintf(stderr, "error: report not found: %s\n", verify_path.c_str());
      return kExitConfig;
    }
    auto meta = gc::read_csv_meta(verify_path);
    auto it = meta.find("config_hash");
    std::string expect = gc::hex64(hash);
    if (it == meta.end() || it->second != expect) {
      std::fprintf(stderr, "config hash mismatch: report has %s, current config is %s\n",
                   it == meta.end() ? "(none)" : it->second.c_str(), expect.c_str());
      return kExitConfig;
    }
    std::printf("report %s matches config hash %s\n", verify_path.c_str(), expect.c_str());
    return kExitOk;
  }

  gc::Checkpoint ck = load_checkpoint_or_exit(ckpt_path);
  if (ck.meta.config_hash != hash) {
    std::fprintf(stderr,
                 "error: checkpoint config hash %s does not match current config %s\n",
                 gc::hex64(ck.meta.config_hash).c_str(), gc::hex64(hash).c_str());
    return kExitCheckpoint;
  }

  if (trials_override > 0) cfg.eval.trials_per_cell = trials_override;
  if (pairs_override > 0) cfg.eval.correlation_pairs = pairs_override;
  if (full) {
    cfg.eval.trials_per_cell *= 10;
    cfg.eval.correlation_pairs *= 10;
  }
  if (!strategy_names.empty()) {
    cfg.eval.strategies.clear();
    for (const std::string& n : strategy_names) {
      if (n == "all-strategies") {
        cfg.eval.strategies = gc::all_strategies();
        break;
      }
      cfg.eval.strategies.push_back(gc::strategy_from_name(n));
    }
  }
  cfg.eval.workers = std::max(1, cfg.workers);
  std::filesystem::create_directories(cfg.out_dir);
  if (trace) {
    cfg.eval.trace_first_trial = true;
    cfg.eval.trace_dir = cfg.out_dir + "/traces";
  }

  gc::EvalReport report = gc::run_strategy_eval(ck, shapes, cfg.env, cfg.eval, cfg.eval_seed);
  report.config_hash = hash;
  report.train_seed = cfg.train_seed;
  report.grasp_seed = cfg.grasp_seed;

  std::string report_path = cfg.out_dir + "/eval_report.csv";
  gc::write_report_csv(report_path, report);
  std::printf("report: %s\n", report_path.c_str());

  // Correlation study on one shape (first by default).
  const gc::ObjectShape* cshape = &shapes.front();
  for (const gc::ObjectShape& s : shapes) {
    if (s.name() == correlation_shape) cshape = &s;
  }
  std::string corr_path = cfg.out_dir + "/correlation.csv";
  try {
    gc::CorrelationSection corr =
        gc::run_correlation_eval(ck, *cshape, cfg.env, cfg.eval, cfg.eval_seed);
    gc::write_correlation_csv(corr_path, corr, hash);
    std::printf("correlation: %s (pearson_r=%.3f, v_s range [%.3f, %.3f])\n", corr_path.c_str(),
                corr.pearson_r, corr.v_s_min, corr.v_s_max);
  } catch (const gc::UndefinedStatisticError& e) {
    std::fprintf(stderr, "correlation undefined: %s\n", e.what());
  }
  return kExitOk;
}

int run_report(const std::string& report_path) {
  if (!std::filesystem::exists(report_path)) {
    std::fprintf(stderr, "error: report not found: %s\n", report_path.c_str());
    return kExitConfig;
  }
  std::ifstream in(report_path);
  std::string line;
  std::printf("%-12s %-26s %8s %9s %8s %9s %8s %8s\n", "shape", "strategy", "trials", "success",
              "impr_pts", "dropped%", "t_goal", "skipped");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::printf("%s\n", line.c_str());
      continue;
    }
    if (line.rfind("shape,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 10) continue;
    std::printf("%-12s %-26s %8s %9.3f %8.1f %9.2f %8.2f %8s\n", cells[0].c_str(),
                cells[1].c_str(), cells[2].c_str(), std::atof(cells[4].c_str()),
                std::atof(cells[5].c_str()), std::atof(cells[6].c_str()),
                std::atof(cells[7].c_str()), cells[8].c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar in-hand reorientation with critic-scored grasp selection"};
  app.require_subcommand(1);

  CommonOpts train_opts, score_opts, eval_opts;

  auto* cmd_train = app.add_subcommand("train", "Train the reorientation policy and critic");
  add_common(cmd_train, train_opts);
  std::int64_t total_steps = 0;
  bool has_total = false;
  std::string resume_path;
  cmd_train->add_option("--total-steps", total_steps)->each([&](const std::string&) {
    has_total = true;
  });
  cmd_train->add_option("--resume", resume_path, "Continue from a checkpoint");

  auto* cmd_score = app.add_subcommand("score", "Score candidate grasps with the trained critic");
  add_common(cmd_score, score_opts);
  std::string ckpt_path = "out/run.ckpt";
  std::string shape_name = "rect_long";
  double object_angle = 0.0, goal_angle = 0.0;
  int k_override = 0, grid_override = 0;
  cmd_score->add_option("--checkpoint", ckpt_path);
  cmd_score->add_option("--shape", shape_name);
  cmd_score->add_option("--object-angle", object_angle);
  cmd_score->add_option("--goal", goal_angle);
  cmd_score->add_option("--k", k_override, "Candidate grasps to sample");
  cmd_score->add_option("--base-grid", grid_override, "Base rotation grid size");

  auto* cmd_eval = app.add_subcommand("eval", "Run the strategy comparison and correlation study");
  add_common(cmd_eval, eval_opts);
  std::string eval_ckpt = "out/run.ckpt";
  std::string verify_path;
  std::vector<std::string> strategy_names;
  std::string correlation_shape;
  int trials_override = 0, pairs_override = 0;
  bool full = false, trace = false;
  cmd_eval->add_option("--checkpoint", eval_ckpt);
  cmd_eval->add_option("--trials", trials_override, "Trials per (shape, strategy) cell");
  cmd_eval->add_option("--pairs", pairs_override, "Correlation pairs");
  cmd_eval->add_option("--strategies", strategy_names,
                       "Strategy names, or 'all-strategies'");
  cmd_eval->add_option("--correlation-shape", correlation_shape);
  cmd_eval->add_option("--verify", verify_path, "Check a report's config hash and exit");
  cmd_eval->add_flag("--full", full, "10x trials and pairs");
  cmd_eval->add_flag("--trace", trace, "Dump the first trial's episode trace per shape");

  auto* cmd_report = app.add_subcommand("report", "Pretty-print an eval report CSV");
  std::string report_path = "out/eval_report.csv";
  cmd_report->add_option("path", report_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_train->parsed()) return run_train(train_opts, total_steps, has_total, resume_path);
    if (cmd_score->parsed()) {
      return run_score(score_opts, ckpt_path, shape_name, object_angle, goal_angle, k_override,
                       grid_override);
    }
    if (cmd_eval->parsed()) {
      return run_eval(eval_opts, eval_ckpt, trials_override, strategy_names, verify_path, full,
                      trace, correlation_shape, pairs_override);
    }
    if (cmd_report->parsed()) return run_report(report_path);
  } catch (const gc::EmptyCandidateSetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitEmptyCandidates;
  } catch (const gc::CheckpointFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCheckpoint;
  } catch (const gc::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const gc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
