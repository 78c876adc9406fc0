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
#include "graspcritic/geometry.hpp"

namespace graspcritic {

/// A candidate grasp: one contact arclength per finger on the object
/// boundary, the hand-base rotation scored with it, the object angle it was
/// planned for, and its cached epsilon quality.
struct Grasp {
  int id = 0;
  std::vector<double> contact_s;
  double base_angle = 0.0;
  double initial_object_angle = 0.0;
  double epsilon = 0.0;
};

/// Minimum circular separation between any two contacts, as a fraction of
/// the perimeter.
inline constexpr double kContactDistinctFrac = 0.02;

struct GraspSampleResult {
  std::vector<Grasp> grasps;
  int shortfall = 0;  // grasps not produced because rejection sampling ran out
};

/// Friction coefficient used for cached grasp qualities: the midpoint of the
/// environment's randomization range.
double nominal_mu(const EnvConfig& config);

/// Torque normalization length: config.rho if positive, else the shape's
/// mean vertex radius.
double wrench_rho(const ObjectShape& shape, const EnvConfig& config);

/// Epsilon quality of a grasp's contact set under the nominal friction.
double grasp_epsilon(const ObjectShape& shape, const EnvConfig& config, const Grasp& grasp);

/// Draws K candidate grasps for an object at the given angle: one contact per
/// finger, uniform within its workspace arc, rejection-sampled until all
/// contacts are pairwise distinct (at most 100 retries per grasp). Candidates
/// carry base_angle = 0; the base grid is enumerated at scoring time.
/// Deterministic in the seed. May return fewer than K (see shortfall).
GraspSampleResult sample_candidates(const ObjectShape& shape, double object_angle, int k,
                                    std::uint64_t seed, const EnvConfig& config);

/// Default stability cutoff: 5% of the best epsilon in the batch.
double default_stability_threshold(const std::vector<Grasp>& grasps);

/// Keeps grasps with epsilon >= epsilon_min, preserving order and ids.
/// Throws EmptyCandidateSetError when nothing survives.
std::vector<Grasp> filter_stable(const std::vector<Grasp>& grasps, double epsilon_min);

/// Symmetric rotation grid {-limit, ..., -step, 0, step, ..., +limit}.
std::vector<double> enumerate_base_rotations(double limit, double step);

/// Evenly spaced grid of n angles over [-limit, limit]; n = 1 gives {0}.
std::vector<double> base_rotation_grid(double limit, int n);

void save_grasps_csv(const std::string& path, const std::vector<Grasp>& grasps,
                     int n_fingers, std::uint64_t config_hash);
std::vector<Grasp> load_grasps_csv(const std::string& path, int n_fingers);

}  // namespace graspcritic
