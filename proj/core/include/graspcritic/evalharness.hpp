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

#include <map>
#include <string>
#include <vector>

#include "graspcritic/checkpoint.hpp"
#include "graspcritic/scoring.hpp"

namespace graspcritic {

struct EvalConfig {
  int candidates = 64;        // grasps sampled per trial
  int base_grid = 17;         // move-base grid size over [-base_limit, base_limit]
  double base_limit = kPi / 2.0;
  int trials_per_cell = 5000; // per (shape, strategy)
  std::vector<Strategy> strategies = all_strategies();
  int correlation_pairs = 5000;
  int correlation_bins = 20;          // v_s quantile bins
  double correlation_angle_cell = 0.3;  // initial-angle grouping granularity, radians
  int wave = 256;             // trials rolled out per batched wave
  int workers = 1;            // threads for per-trial preparation; any value
                              // yields identical results
  bool trace_first_trial = false;
  std::string trace_dir;
};

struct StrategyRow {
  std::string shape;  // shape name or "all" for the aggregate
  Strategy strategy = Strategy::kAll;
  int n_trials = 0;
  int successes = 0;
  int dropped = 0;
  int skipped = 0;  // trials without a stable candidate set
  double success_rate = 0.0;
  double improvement_pts_vs_all = 0.0;  // percentage points against the ALL row
  double dropped_pct = 0.0;
  double avg_time_to_goal_s = 0.0;  // over successful trials; nan when none
  double sum_time_to_goal = 0.0;
  double mean_selected_v_s = 0.0;
};

struct CorrelationBin {
  double mean_v_s = 0.0;
  double success_rate = 0.0;
  int count = 0;
};

struct CorrelationSection {
  std::vector<CorrelationBin> bins;
  double pearson_r = 0.0;
  double v_s_min = 0.0;  // measured score range over the sampled pairs
  double v_s_max = 0.0;
};

struct EvalReport {
  std::vector<StrategyRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t train_seed = 0;
  std::uint64_t grasp_seed = 0;
  std::uint64_t eval_seed = 0;
  std::vector<std::string> notes;
};

/// Weighted Pearson correlation. Throws UndefinedStatisticError with fewer
/// than 2 points or zero variance on either axis.
double weighted_pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& ws);

/// One (score, initial angle, goal, outcome) sample of the correlation study.
struct CorrelationSample {
  double v_s = 0.0;
  double initial_angle = 0.0;
  double goal = 0.0;
  bool success = false;
};

/// Aggregation behind the correlation study, exposed for synthetic fixtures:
/// samples are grouped into (initial angle, goal) cells of angle_cell
/// granularity — the planar stand-in for evaluating one initial/goal
/// rotation pair many times — cell means are binned by v_s quantiles, and
/// the weighted Pearson r is computed over bin means.
/// Throws UndefinedStatisticError when fewer than 3 bins remain.
CorrelationSection correlation_from_samples(const std::vector<CorrelationSample>& samples,
                                            int bins, double angle_cell);

/// Paired strategy comparison: per trial, one candidate set is generated and
/// scored, every requested strategy selects from it, and each selection is
/// rolled out under the same environment seed. Goal resampling is off; a
/// trial succeeds when its single goal is held.
EvalReport run_strategy_eval(const Checkpoint& ck, const std::vector<ObjectShape>& shapes,
                             const EnvConfig& env_config, const EvalConfig& eval_config,
                             std::uint64_t eval_seed);

/// Critic-score vs success-rate study on one shape.
CorrelationSection run_correlation_eval(const Checkpoint& ck, const ObjectShape& shape,
                                        const EnvConfig& env_config, const EvalConfig& eval_config,
                                        std::uint64_t eval_seed);

void write_report_csv(const std::string& path, const EvalReport& report);
void write_correlation_csv(const std::string& path, const CorrelationSection& section,
                           std::uint64_t config_hash);

/// Reads the `# key=value` comment headers of a CSV artifact.
std::map<std::string, std::string> read_csv_meta(const std::string& path);

}  // namespace graspcritic
