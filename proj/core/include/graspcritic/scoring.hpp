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
#include <utility>
#include <vector>

#include "graspcritic/env.hpp"
#include "graspcritic/graspgen.hpp"
#include "graspcritic/rl.hpp"

namespace graspcritic {

struct ScoredCandidate {
  int grasp_id = 0;
  double base_angle = 0.0;
  double epsilon = 0.0;
  float v_d = 0.0f;
  float v_s = 0.0f;
  int index = 0;  // position in the scored batch; ties into the candidate list
};

enum class Strategy {
  kAll,
  kMostRobust,
  kHighestScoring,
  kHighestScoringMoveBase,
  kLowestScoring,
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
std::vector<Strategy> all_strategies();

/// The observation the critic sees for a candidate: exactly env reset's t=0
/// observation for (grasp, goal). The grasp's base rotation enters only
/// through the goal seen in the hand frame.
Observation build_initial_obs(const Grasp& grasp, double goal_angle, const ObjectShape& shape,
                              const EnvConfig& config);

/// Scores every (grasp, base_angle) candidate with one batched critic
/// forward pass; order is preserved. Throws EmptyCandidateSetError on empty
/// input.
std::vector<ScoredCandidate> score_candidates(const Agent& agent,
                                              const std::vector<std::pair<Grasp, double>>& cands,
                                              double goal_angle, const ObjectShape& shape,
                                              const EnvConfig& config);

/// Applies a selection strategy. Ties break toward the lowest grasp_id, then
/// the smallest |base_angle|. kAll draws uniformly from `rng`; every other
/// strategy is deterministic.
ScoredCandidate select_candidate(Strategy strategy, const std::vector<ScoredCandidate>& scored,
                                 Rng& rng);

void save_scores_csv(const std::string& path, const std::vector<ScoredCandidate>& scored,
                     std::uint64_t config_hash);

}  // namespace graspcritic
