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

#include "graspcritic/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace graspcritic {

double weighted_pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& ws) {
  size_t n = xs.size();
  if (n != ys.size() || n != ws.size()) {
    throw ContractViolationError("weighted_pearson: length mismatch");
  }
  if (n < 2) throw UndefinedStatisticError("pearson: need at least 2 points");
  double wsum = 0.0, mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    wsum += ws[i];
    mx += ws[i] * xs[i];
    my += ws[i] * ys[i];
  }
  if (!(wsum > 0.0)) throw UndefinedStatisticError("pearson: zero total weight");
  mx /= wsum;
  my /= wsum;
  double cxy = 0.0, cxx = 0.0, cyy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    cxy += ws[i] * dx * dy;
    cxx += ws[i] * dx * dx;
    cyy += ws[i] * dy * dy;
  }
  if (!(cxx > 0.0) || !(cyy > 0.0)) {
    throw UndefinedStatisticError("pearson: zero variance");
  }
  return cxy / std::sqrt(cxx * cyy);
}

CorrelationSection correlation_from_samples(const std::vector<CorrelationSample>& samples,
                                            int bins, double angle_cell) {
  if (samples.empty()) throw UndefinedStatisticError("correlation: no samples");

  CorrelationSection out;
  out.v_s_min = std::numeric_limits<double>::infinity();
  out.v_s_max = -std::numeric_limits<double>::infinity();
  for (const CorrelationSample& s : samples) {
    out.v_s_min = std::min(out.v_s_min, s.v_s);
    out.v_s_max = std::max(out.v_s_max, s.v_s);
  }

  // (initial angle, goal) cells.
  struct Cell {
    double sum_v = 0.0;
    int successes = 0;
    int count = 0;
  };
  std::map<long, Cell> cells;
  for (const CorrelationSample& s : samples) {
    long ka = std::lround(std::floor((s.initial_angle + kPi) / angle_cell));
    long kg = std::lround(std::floor((s.goal + kPi) / angle_cell));
    Cell& c = cells[1000 * ka + kg];
    c.sum_v += s.v_s;
    c.successes += s.success ? 1 : 0;
    c.count += 1;
  }

  struct CellStat {
    double mean_v;
    int successes;
    int count;
  };
  std::vector<CellStat> stats;
  stats.reserve(cells.size());
  for (const auto& [key, c] : cells) {
    stats.push_back({c.sum_v / c.count, c.successes, c.count});
  }
  std::sort(stats.begin(), stats.end(), [](const CellStat& a, const CellStat& b) {
    return a.mean_v < b.mean_v;
  });

  // Quantile bins over cells, weighted by trial count. A bin closes once the
  // running total crosses its quantile boundary; the remainder forms the last
  // bin.
  int total = 0;
  for (const CellStat& s : stats) total += s.count;
  double per_bin = static_cast<double>(total) / bins;
  std::vector<CorrelationBin> acc;
  double sum_v = 0.0;
  int suc = 0, cnt = 0, consumed = 0;
  for (const CellStat& s : stats) {
    sum_v += s.mean_v * s.count;
    suc += s.successes;
    cnt += s.count;
    consumed += s.count;
    bool boundary = consumed >= per_bin * (acc.size() + 1) - 1e-9;
    if (boundary && static_cast<int>(acc.size()) < bins - 1) {
      acc.push_back({sum_v / cnt, static_cast<double>(suc) / cnt, cnt});
      sum_v = 0.0;
      suc = 0;
      cnt = 0;
    }
  }
  if (cnt > 0) acc.push_back({sum_v / cnt, static_cast<double>(suc) / cnt, cnt});

  out.bins = acc;
  if (out.bins.size() < 3) {
    throw UndefinedStatisticError("correlation: fewer than 3 non-empty bins");
  }
  std::vector<double> xs, ys, ws;
  for (const CorrelationBin& b : out.bins) {
    xs.push_back(b.mean_v_s);
    ys.push_back(b.success_rate);
    ws.push_back(b.count);
  }
  out.pearson_r = weighted_pearson(xs, ys, ws);
  return out;
}

namespace {

/// One prepared trial: per-strategy selected candidates, shared seeds.
struct Trial {
  bool valid = false;
  double goal = 0.0;
  std::vector<Grasp> selected;    // one per requested strategy
  std::vector<float> selected_vs;
  std::uint64_t env_seed = 0;
  std::uint64_t policy_seed = 0;
};

struct RolloutOutcome {
  bool success = false;
  bool dropped = false;
  double time_to_goal = -1.0;
};

/// Rolls out a set of prepared episodes in lockstep with batched forward
/// passes; each episode samples actions from its own derived stream.
std::vector<RolloutOutcome> rollout_batch(const Agent& agent,
                                          std::vector<Environment>& envs,
                                          std::vector<Observation>& first_obs,
                                          const std::vector<std::uint64_t>& policy_seeds,
                                          std::vector<TraceRow>* first_trace) {
  int n = static_cast<int>(envs.size());
  int obs_dim = agent.obs_dim();
  int action_dim = agent.action_dim();
  std::vector<RolloutOutcome> out(n);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (int i = 0; i < n; ++i) rngs.emplace_back(policy_seeds[i]);
  std::vector<std::vector<float>> pending(n);
  std::vector<std::uint8_t> active(n, 1);
  for (int i = 0; i < n; ++i) pending[i] = first_obs[i].flat();
  if (first_trace && n > 0) envs[0].set_trace_enabled(true);

  std::vector<int> ids;
  std::vector<float> rows, means;
  for (;;) {
    ids.clear();
    for (int i = 0; i < n; ++i) {
      if (active[i]) ids.push_back(i);
    }
    if (ids.empty()) break;
    int m = static_cast<int>(ids.size());
    rows.resize(static_cast<size_t>(m) * obs_dim);
    for (int r = 0; r < m; ++r) {
      std::copy(pending[ids[r]].begin(), pending[ids[r]].end(),
                rows.begin() + static_cast<size_t>(r) * obs_dim);
    }
    means.resize(static_cast<size_t>(m) * action_dim);
    actor_mean_batch(agent, rows.data(), m, means.data());
    for (int r = 0; r < m; ++r) {
      int i = ids[r];
      PolicyOutput pol = policy_sample_from_mean(
          agent, means.data() + static_cast<size_t>(r) * action_dim, rngs[i]);
      std::vector<double> action(pol.action.begin(), pol.action.end());
      StepResult sr = envs[i].step(action);
      if (sr.success) {
        out[i].success = true;
        out[i].time_to_goal = sr.time_to_goal.value_or(-1.0);
      }
      if (sr.dropped) out[i].dropped = true;
      if (sr.terminal || out[i].success) {
        active[i] = 0;  // evaluation stops an episode at its first success
      } else {
        pending[i] = sr.obs.flat();
      }
    }
  }
  if (first_trace && n > 0) {
    *first_trace = envs[0].trace();
    envs[0].set_trace_enabled(false);
  }
  return out;
}

}  // namespace

EvalReport run_strategy_eval(const Checkpoint& ck, const std::vector<ObjectShape>& shapes,
                             const EnvConfig& env_config, const EvalConfig& eval_config,
                             std::uint64_t eval_seed) {
  EnvConfig cfg = env_config;
  cfg.goal_resample = false;  // one goal per trial
  cfg.validate();
  if (ck.agent.obs_dim() != cfg.obs_dim()) {
    throw CheckpointFormatError("checkpoint does not match the environment observation size");
  }

  const std::vector<Strategy>& strats = eval_config.strategies;
  size_t n_strats = strats.size();
  std::vector<double> grid = base_rotation_grid(eval_config.base_limit, eval_config.base_grid);

  EvalReport report;
  report.config_hash = ck.meta.config_hash;
  report.eval_seed = eval_seed;
  report.notes.push_back(
      "strategy 'all' draws one candidate uniformly per trial (candidate-average estimator)");
  report.notes.push_back("correlation aggregation: initial-angle cells of " +
                         std::to_string(eval_config.correlation_angle_cell) +
                         " rad, then v_s quantile bins (documented approximation)");

  std::vector<StrategyRow> all_rows;

  for (size_t shape_idx = 0; shape_idx < shapes.size(); ++shape_idx) {
    const ObjectShape& shape = shapes[shape_idx];
    std::vector<StrategyRow> rows(n_strats);
    for (size_t s = 0; s < n_strats; ++s) {
      rows[s].shape = shape.name();
      rows[s].strategy = strats[s];
    }

    int n_trials = eval_config.trials_per_cell;
    int wave = std::max(1, eval_config.wave);
    bool want_trace = eval_config.trace_first_trial;

    for (int wave_start = 0; wave_start < n_trials; wave_start += wave) {
      int wave_n = std::min(wave, n_trials - wave_start);
      std::vector<Trial> trials(wave_n);

      // Prepare: candidates, scores, selections. Trials are independent, so
      // preparation parallelizes without changing any result.
      parallel_for(wave_n, eval_config.workers, [&](int w) {
        int t = wave_start + w;
        Trial& trial = trials[w];
        std::uint64_t tseed = derive_seed(eval_seed, 0xE7A1, shape_idx, t);
        Rng rng(tseed);
        double phi0 = rng.uniform(-kPi, kPi);
        trial.goal = rng.uniform(-kPi, kPi);
        trial.env_seed = derive_seed(tseed, 3);
        trial.policy_seed = derive_seed(tseed, 4);

        GraspSampleResult sampled = sample_candidates(shape, phi0, eval_config.candidates,
                                                      derive_seed(tseed, 1), cfg);
        std::vector<Grasp> stable;
        try {
          stable = filter_stable(sampled.grasps, default_stability_threshold(sampled.grasps));
        } catch (const EmptyCandidateSetError&) {
          return;  // trial skipped, counted below
        }

        std::vector<std::pair<Grasp, double>> cands;
        cands.reserve(stable.size() * grid.size());
        for (double b : grid) {
          for (const Grasp& g : stable) cands.emplace_back(g, b);
        }
        std::vector<ScoredCandidate> scored =
            score_candidates(ck.agent, cands, trial.goal, shape, cfg);
        std::vector<ScoredCandidate> base_zero;
        for (const ScoredCandidate& c : scored) {
          if (c.base_angle == 0.0) base_zero.push_back(c);
        }
        if (base_zero.empty()) {
          // The grid is guaranteed to contain 0 only for odd sizes; fall back
          // to the full set rather than skipping.
          base_zero = scored;
        }

        trial.valid = true;
        trial.selected.resize(n_strats);
        trial.selected_vs.resize(n_strats);
        for (size_t s = 0; s < n_strats; ++s) {
          Rng sel_rng(derive_seed(tseed, 2));
          const std::vector<ScoredCandidate>& domain =
              strats[s] == Strategy::kHighestScoringMoveBase ? scored : base_zero;
          ScoredCandidate pick = select_candidate(strats[s], domain, sel_rng);
          Grasp g = cands[pick.index].first;
          g.base_angle = pick.base_angle;
          trial.selected[s] = g;
          trial.selected_vs[s] = pick.v_s;
        }
      });

      // Roll out every (trial, strategy) episode in one batched wave.
      std::vector<Environment> envs;
      std::vector<Observation> first_obs;
      std::vector<std::uint64_t> policy_seeds;
      std::vector<std::pair<int, int>> owner;  // (trial index, strategy index)
      for (int w = 0; w < wave_n; ++w) {
        if (!trials[w].valid) continue;
        for (size_t s = 0; s < n_strats; ++s) {
          envs.emplace_back(shape, cfg);
          first_obs.push_back(
              envs.back().reset(trials[w].selected[s], trials[w].goal, trials[w].env_seed));
          policy_seeds.push_back(trials[w].policy_seed);
          owner.emplace_back(w, static_cast<int>(s));
        }
      }
      std::vector<TraceRow> trace;
      std::vector<RolloutOutcome> outcomes =
          rollout_batch(ck.agent, envs, first_obs, policy_seeds,
                        want_trace && wave_start == 0 ? &trace : nullptr);
      if (want_trace && wave_start == 0 && !trace.empty()) {
        std::filesystem::create_directories(eval_config.trace_dir);
        write_trace_csv(eval_config.trace_dir + "/trace_" + shape.name() + "_" +
                            strategy_name(strats[0]) + ".csv",
                        trace);
      }

      for (size_t k = 0; k < outcomes.size(); ++k) {
        auto [w, s] = owner[k];
        StrategyRow& row = rows[s];
        row.n_trials += 1;
        row.successes += outcomes[k].success ? 1 : 0;
        row.dropped += outcomes[k].dropped ? 1 : 0;
        if (outcomes[k].success) row.sum_time_to_goal += outcomes[k].time_to_goal;
        row.mean_selected_v_s += trials[w].selected_vs[s];
      }
      for (int w = 0; w < wave_n; ++w) {
        if (!trials[w].valid) {
          for (size_t s = 0; s < n_strats; ++s) rows[s].skipped += 1;
        }
      }
    }

    for (StrategyRow& row : rows) report.rows.push_back(row);
  }

  // Aggregate across shapes.
  for (size_t s = 0; s < n_strats; ++s) {
    StrategyRow agg;
    agg.shape = "all";
    agg.strategy = strats[s];
    for (const StrategyRow& row : report.rows) {
      if (row.strategy != strats[s] || row.shape == "all") continue;
      agg.n_trials += row.n_trials;
      agg.successes += row.successes;
      agg.dropped += row.dropped;
      agg.skipped += row.skipped;
      agg.sum_time_to_goal += row.sum_time_to_goal;
      agg.mean_selected_v_s += row.mean_selected_v_s;
    }
    report.rows.push_back(agg);
  }

  // Rates and improvements vs the ALL row within each shape block.
  for (StrategyRow& row : report.rows) {
    row.success_rate = row.n_trials > 0 ? static_cast<double>(row.successes) / row.n_trials : 0.0;
    row.dropped_pct = row.n_trials > 0 ? 100.0 * row.dropped / row.n_trials : 0.0;
    row.avg_time_to_goal_s = row.successes > 0
                                 ? row.sum_time_to_goal / row.successes
                                 : std::numeric_limits<double>::quiet_NaN();
    row.mean_selected_v_s = row.n_trials > 0 ? row.mean_selected_v_s / row.n_trials : 0.0;
  }
  for (StrategyRow& row : report.rows) {
    double all_rate = std::numeric_limits<double>::quiet_NaN();
    for (const StrategyRow& other : report.rows) {
      if (other.shape == row.shape && other.strategy == Strategy::kAll) {
        all_rate = other.success_rate;
        break;
      }
    }
    row.improvement_pts_vs_all = 100.0 * (row.success_rate - all_rate);
  }
  return report;
}

CorrelationSection run_correlation_eval(const Checkpoint& ck, const ObjectShape& shape,
                                        const EnvConfig& env_config, const EvalConfig& eval_config,
                                        std::uint64_t eval_seed) {
  EnvConfig cfg = env_config;
  cfg.goal_resample = false;
  cfg.validate();

  std::vector<CorrelationSample> samples;
  samples.reserve(eval_config.correlation_pairs);

  int n_pairs = eval_config.correlation_pairs;
  int wave = std::max(1, eval_config.wave);
  for (int wave_start = 0; wave_start < n_pairs; wave_start += wave) {
    int wave_n = std::min(wave, n_pairs - wave_start);
    std::vector<Environment> envs;
    std::vector<Observation> first_obs;
    std::vector<std::uint64_t> policy_seeds;
    std::vector<CorrelationSample> pending;

    for (int w = 0; w < wave_n; ++w) {
      int t = wave_start + w;
      std::uint64_t tseed = derive_seed(eval_seed, 0xC0A1, t);
      Rng rng(tseed);
      double phi0 = rng.uniform(-kPi, kPi);
      double goal = rng.uniform(-kPi, kPi);

      GraspSampleResult sampled =
          sample_candidates(shape, phi0, eval_config.candidates, derive_seed(tseed, 1), cfg);
      std::vector<Grasp> stable;
      try {
        stable = filter_stable(sampled.grasps, default_stability_threshold(sampled.grasps));
      } catch (const EmptyCandidateSetError&) {
        continue;
      }
      Rng pick_rng(derive_seed(tseed, 2));
      const Grasp& grasp = stable[pick_rng.uniform_int(static_cast<int>(stable.size()))];
      std::vector<ScoredCandidate> scored =
          score_candidates(ck.agent, {{grasp, 0.0}}, goal, shape, cfg);

      envs.emplace_back(shape, cfg);
      first_obs.push_back(envs.back().reset(grasp, goal, derive_seed(tseed, 3)));
      policy_seeds.push_back(derive_seed(tseed, 4));
      pending.push_back({scored.front().v_s, phi0, goal, false});
    }

    std::vector<RolloutOutcome> outcomes =
        rollout_batch(ck.agent, envs, first_obs, policy_seeds, nullptr);
    for (size_t k = 0; k < outcomes.size(); ++k) {
      pending[k].success = outcomes[k].success;
      samples.push_back(pending[k]);
    }
  }

  return correlation_from_samples(samples, eval_config.correlation_bins,
                                  eval_config.correlation_angle_cell);
}

namespace {

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open report for writing: " + path);
  out << "# graspcritic eval-report v1\n";
  out << "# config_hash=" << hex64(report.config_hash) << "\n";
  out << "# seeds=train:" << report.train_seed << ",grasp:" << report.grasp_seed
      << ",eval:" << report.eval_seed << "\n";
  for (const std::string& note : report.notes) out << "# note=" << note << "\n";
  out << "shape,strategy,n_trials,successes,success_rate,improvement_pts_vs_all,dropped_pct,"
         "avg_time_to_goal_s,skipped_trials,mean_selected_v_s\n";
  for (const StrategyRow& row : report.rows) {
    out << row.shape << ',' << strategy_name(row.strategy) << ',' << row.n_trials << ','
        << row.successes << ',' << csv_num(row.success_rate) << ','
        << csv_num(row.improvement_pts_vs_all) << ',' << csv_num(row.dropped_pct) << ','
        << csv_num(row.avg_time_to_goal_s) << ',' << row.skipped << ','
        << csv_num(row.mean_selected_v_s) << '\n';
  }
}

void write_correlation_csv(const std::string& path, const CorrelationSection& section,
                           std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open correlation file for writing: " + path);
  out << "# graspcritic correlation v1\n";
  out << "# config_hash=" << hex64(config_hash) << "\n";
  out << "# pearson_r=" << csv_num(section.pearson_r) << "\n";
  out << "# v_s_range=" << csv_num(section.v_s_min) << ":" << csv_num(section.v_s_max) << "\n";
  out << "bin,mean_v_s,success_rate,count\n";
  for (size_t i = 0; i < section.bins.size(); ++i) {
    out << i << ',' << csv_num(section.bins[i].mean_v_s) << ','
        << csv_num(section.bins[i].success_rate) << ',' << section.bins[i].count << '\n';
  }
}

std::map<std::string, std::string> read_csv_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV: " + path);
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(2, eq - 2);
    meta[key] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace graspcritic
