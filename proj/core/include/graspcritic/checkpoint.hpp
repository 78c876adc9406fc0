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

#include "graspcritic/rl.hpp"

namespace graspcritic {

// Checkpoint file: a text header (format version, layer sizes, exact
// normalization accumulators, config hash, counters) followed by named
// tensors stored as little-endian IEEE-754 32-bit arrays. The file carries
// the full optimizer state so training can resume bit-exactly.

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  int version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  int obs_dim = 0;
  int action_dim = 0;
  int n_fingers = 0;
  std::vector<int> actor_hidden;
  std::vector<int> critic_hidden;
  double gamma = 0.99;
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  Agent agent;
  AdamState<float> adam;  // aligned with agent.tensors(); empty when not training
};

void save_checkpoint(const std::string& path, Checkpoint& ck);

/// Throws CheckpointFormatError on a malformed file or version mismatch.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace graspcritic
