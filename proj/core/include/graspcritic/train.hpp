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

#include <cstdint>
#include <string>
#include <vector>

#include "graspcritic/checkpoint.hpp"
#include "graspcritic/env.hpp"
#include "graspcritic/graspgen.hpp"
#include "graspcritic/rl.hpp"

namespace graspcritic {

struct TrainConfig {
  std::vector<int> actor_hidden{256, 256};
  std::vector<int> critic_hidden{256, 256};
  PpoHyper hyper;
  int num_envs = 64;                 // one full episode per env slot per iteration
  std::int64_t total_steps = 1'500'000;
  int checkpoint_every = 100;        // iterations between checkpoint snapshots
  int pool_per_shape = 256;          // training grasp pool size per shape
  std::string out_dir = "out";
  std::string run_name = "run";
  bool quiet = false;
};

struct IterationStats {
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
  int episodes = 0;
  int goal_attempts = 0;
  int successes = 0;
  double success_rate = 0.0;  // per goal attempt
  double drop_rate = 0.0;     // per episode
  double mean_dense_return = 0.0;
  double mean_sparse_return = 0.0;
  double mean_episode_len = 0.0;
  PpoStats ppo;
  double seconds = 0.0;
};

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  std::vector<IterationStats> log;
};

/// Training grasp pool: each entry sampled at its own uniform object angle,
/// stability-filtered with the default threshold. Throws
/// EmptyCandidateSetError when nothing survives for a shape.
std::vector<Grasp> sample_training_pool(const ObjectShape& shape, int count, std::uint64_t seed,
                                        const EnvConfig& config);

/// Runs rollout/update iterations until total_steps. Each iteration rolls
/// one complete episode per env slot with RNG streams derived from
/// (train_seed, iteration, slot), so resuming from a checkpoint reproduces an
/// uninterrupted run exactly.
TrainResult train(const std::vector<ObjectShape>& shapes, const EnvConfig& env_config,
                  const TrainConfig& tc, std::uint64_t train_seed, std::uint64_t grasp_seed,
                  std::uint64_t config_hash, const Checkpoint* resume = nullptr);

}  // namespace graspcritic
