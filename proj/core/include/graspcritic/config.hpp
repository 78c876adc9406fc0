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

#include "graspcritic/env.hpp"
#include "graspcritic/evalharness.hpp"
#include "graspcritic/train.hpp"

namespace graspcritic {

/// Shape library file: JSON listing named convex polygons as vertex lists in
/// meters, counter-clockwise.
std::vector<ObjectShape> load_shape_library(const std::string& path);

struct ScoreConfig {
  int candidates = 200;
  int base_grid = 17;
  double base_limit = kPi / 2.0;
  int top_k = 10;
};

struct RunConfig {
  std::string shapes_path;
  std::vector<std::string> shape_names;  // empty = every shape in the library
  std::string out_dir = "out";
  std::uint64_t train_seed = 1;
  std::uint64_t grasp_seed = 2;
  std::uint64_t eval_seed = 3;
  int workers = 1;
  EnvConfig env;
  TrainConfig train;
  EvalConfig eval;
  ScoreConfig score;
};

/// Loads a run config JSON; unknown keys are rejected. Throws ConfigError
/// with the offending field name.
RunConfig load_run_config(const std::string& path);

/// Selects the configured shapes from the library (all when shape_names is
/// empty) and resolves the encoding probe radius from the set when unset.
std::vector<ObjectShape> resolve_shapes(RunConfig& config);

/// FNV-1a hash of the canonical serialized config; embedded in every
/// artifact. Call after resolve_shapes so derived fields are included.
std::uint64_t config_hash(const RunConfig& config);

/// Canonical serialization behind config_hash; stable key order and float
/// formatting.
std::string canonical_config_string(const RunConfig& config);

}  // namespace graspcritic
