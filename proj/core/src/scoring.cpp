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

#include "graspcritic/scoring.hpp"

#include <cstdio>
#include <fstream>

namespace graspcritic {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kAll:
      return "all";
    case Strategy::kMostRobust:
      return "most_robust";
    case Strategy::kHighestScoring:
      return "highest_scoring";
    case Strategy::kHighestScoringMoveBase:
      return "highest_scoring_move_base";
    case Strategy::kLowestScoring:
      return "lowest_scoring";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  for (Strategy s : all_strategies()) {
    if (name == strategy_name(s)) return s;
  }
  throw ConfigError("unknown strategy: '" + name + "'");
}

std::vector<Strategy> all_strategies() {
  return {Strategy::kAll, Strategy::kMostRobust, Strategy::kHighestScoring,
          Strategy::kHighestScoringMoveBase, Strategy::kLowestScoring};
}

Observation build_initial_obs(const Grasp& grasp, double goal_angle, const ObjectShape& shape,
                              const EnvConfig& config) {
  return initial_observation(shape, config, grasp, goal_angle);
}

std::vector<ScoredCandidate> score_candidates(const Agent& agent,
                                              const std::vector<std::pair<Grasp, double>>& cands,
                                              double goal_angle, const ObjectShape& shape,
                                              const EnvConfig& config) {
  if (cands.empty()) throw EmptyCandidateSetError("score_candidates: empty candidate list");
  int n = static_cast<int>(cands.size());
  int d = config.obs_dim();
  if (agent.obs_dim() != d) {
    throw ContractViolationError("score_candidates: observation dimension mismatch");
  }

  std::vector<float> rows(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    Grasp g = cands[i].first;
    g.base_angle = cands[i].second;
    Observation obs = build_initial_obs(g, goal_angle, shape, config);
    obs.flatten(rows.data() + static_cast<size_t>(i) * d);
  }

  std::vector<CriticOutput> values = critic_eval(agent, rows.data(), n);

  std::vector<ScoredCandidate> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].grasp_id = cands[i].first.id;
    out[i].base_angle = cands[i].second;
    out[i].epsilon = cands[i].first.epsilon;
    out[i].v_d = values[i].v_d;
    out[i].v_s = values[i].v_s;
    out[i].index = i;
  }
  return out;
}

namespace {

/// Tie order: lowest grasp_id first, then smallest |base_angle|.
bool tie_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.grasp_id != b.grasp_id) return a.grasp_id < b.grasp_id;
  return std::fabs(a.base_angle) < std::fabs(b.base_angle);
}

template <typename Key>
const ScoredCandidate& arg_best(const std::vector<ScoredCandidate>& scored, Key key) {
  const ScoredCandidate* best = &scored.front();
  for (const ScoredCandidate& c : scored) {
    double kc = key(c), kb = key(*best);
    if (kc > kb || (kc == kb && tie_before(c, *best))) best = &c;
  }
  return *best;
}

}  // namespace

ScoredCandidate select_candidate(Strategy strategy, const std::vector<ScoredCandidate>& scored,
                                 Rng& rng) {
  if (scored.empty()) throw EmptyCandidateSetError("select_candidate: empty scored list");
  switch (strategy) {
    case Strategy::kAll:
      return scored[rng.uniform_int(static_cast<int>(scored.size()))];
    case Strategy::kMostRobust:
      return arg_best(scored, [](const ScoredCandidate& c) { return c.epsilon; });
    case Strategy::kHighestScoring:
    case Strategy::kHighestScoringMoveBase:
      return arg_best(scored, [](const ScoredCandidate& c) { return static_cast<double>(c.v_s); });
    case Strategy::kLowestScoring:
      return arg_best(scored,
                      [](const ScoredCandidate& c) { return -static_cast<double>(c.v_s); });
  }
  throw ContractViolationError("select_candidate: bad strategy");
}

void save_scores_csv(const std::string& path, const std::vector<ScoredCandidate>& scored,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open score file for writing: " + path);
  out << "# graspcritic scores v1\n";
  out << "# config_hash=" << hex64(config_hash) << "\n";
  out << "grasp_id,base_angle,epsilon,v_d,v_s\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out << buf;
  };
  for (const ScoredCandidate& c : scored) {
    out << c.grasp_id << ',';
    put(c.base_angle);
    out << ',';
    put(c.epsilon);
    out << ',';
    put(c.v_d);
    out << ',';
    put(c.v_s);
    out << '\n';
  }
}

}  // namespace graspcritic
