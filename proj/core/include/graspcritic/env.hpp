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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "graspcritic/common.hpp"
#include "graspcritic/geometry.hpp"

namespace graspcritic {

struct Grasp;  // graspgen.hpp

// ---------------------------------------------------------------------------
// Quasi-static planar finger-gaiting environment.
//
// Fingers are position-servoed points on the object boundary. Positions are
// expressed as hand-frame boundary coordinates u in [0, perimeter): the
// boundary is treated as a conveyor that shifts by (perimeter / 2pi) per
// radian of object rotation, so the material point under hand coordinate u at
// object angle phi sits at object arclength s = u - phi * perimeter / 2pi.
// Attached fingers drag the object: one control step rotates it by the
// friction-weighted mean of the fingers' tangential displacements divided by
// the local contact radius, plus slip noise.
// ---------------------------------------------------------------------------

struct EnvConfig {
  int n_fingers = 3;
  double dt = 4.0 / 60.0;        // control period: 15 Hz over a 60 Hz base clock
  double horizon_tau = 10.0;     // episode length, seconds
  double success_threshold_theta = 0.4;  // radians
  double workspace_arc = 0.45;   // per-finger reachable width, fraction of perimeter
  double max_step_frac = 0.04;   // commanded slide per step, fraction of perimeter
  double slip_noise_std = 0.01;  // radians per step
  double obs_window = 0.1;       // seconds
  double obs_rate = 60.0;        // Hz
  double drop_epsilon_min = 1e-3;
  double mu_min = 0.3;
  double mu_max = 0.8;
  double rho = 0.0;              // torque normalization; 0 = mean vertex radius
  bool goal_resample = true;     // draw a fresh goal after each success
  double dwell_time = 0.5;       // seconds the goal must be held
  double w_rot = 1.0;            // dense reward weights
  double w_pos = 0.1;
  double w_drop = 5.0;
  double slip_scale_min = 0.5;   // domain randomization
  double slip_scale_max = 2.0;
  double action_delay_prob = 0.25;
  ShapeEncodingParams encoding;  // probe_radius must be set from the shape set

  void validate() const;

  int horizon_steps() const { return static_cast<int>(std::lround(horizon_tau / dt)); }
  int subframes_per_step() const { return static_cast<int>(std::lround(dt * obs_rate)); }
  int window_frames() const { return static_cast<int>(std::lround(obs_window * obs_rate)); }
  int dwell_steps() const {
    return std::max(1, static_cast<int>(std::ceil(dwell_time / dt - 1e-9)));
  }
  int action_dim() const { return 2 * n_fingers; }
  int obs_dim() const { return window_frames() * 2 * n_fingers + 2 + encoding.probes; }

  /// Center of finger i's workspace arc, hand-frame boundary coordinate.
  double arc_center(int finger, double perimeter) const {
    return perimeter * finger / n_fingers;
  }
  double arc_half_width(double perimeter) const { return 0.5 * workspace_arc * perimeter; }
};

/// Policy/critic input at one control step. `window` holds the base-rate
/// history of measured and commanded finger coordinates, frame-major, oldest
/// first; each frame is [meas_0..meas_{n-1}, cmd_0..cmd_{n-1}], coordinates
/// relative to the finger's arc center and normalized by the perimeter,
/// detached measurements encoded as -1.
struct Observation {
  std::vector<float> window;
  std::array<float, 2> goal_delta{};  // (cos, sin) of wrap(goal - object_angle)
  std::vector<float> shape_enc;

  int dim() const { return static_cast<int>(window.size() + 2 + shape_enc.size()); }
  void flatten(float* dst) const;
  std::vector<float> flat() const;
};

/// Per-episode domain randomization draw.
struct PhysicsDraw {
  double mu = 0.55;
  double slip_scale = 1.0;
  bool action_delay = false;
};

struct EnvState {
  double object_angle = 0.0;
  double goal_angle = 0.0;
  std::vector<double> finger_pos;  // hand-frame boundary coordinate u_i
  std::vector<double> finger_cmd;  // commanded coordinate (the servo target)
  std::vector<std::uint8_t> attached;
  std::vector<double> default_pos;  // reset positions; anchor of the position penalty
  int step = 0;
  int dwell = 0;           // consecutive post-step states within the goal threshold
  int low_eps_steps = 0;   // consecutive steps with epsilon below the drop threshold
  bool terminal = false;
  bool dropped = false;
  std::vector<double> pending_action;  // one-step delay buffer
  PhysicsDraw physics;
  std::uint64_t seed = 0;
  // Episode statistics (per-goal accounting).
  int goals_attempted = 0;
  int goals_succeeded = 0;
  double first_time_to_goal = -1.0;  // seconds; <0 when the first goal was never held

  int attached_count() const;
};

struct StepResult {
  Observation obs;
  double r_dense = 0.0;
  double r_sparse = 0.0;
  bool dropped = false;
  bool success = false;  // the sustained-success event fired on this step
  bool terminal = false;
  std::optional<double> time_to_goal;  // set on the success step
};

struct TraceRow {
  int step;
  double t;
  double object_angle;
  double goal_angle;
  std::vector<double> finger_pos;
  std::vector<double> finger_cmd;
  std::vector<std::uint8_t> attached;
  double r_dense;
  double r_sparse;
  bool dropped;
  bool success;
};

/// The observation emitted by reset() for the given grasp and goal; pure in
/// its inputs, no RNG involved. Scoring uses the same function to build the
/// critic input for a candidate, so the two stay bit-identical.
Observation initial_observation(const ObjectShape& shape, const EnvConfig& config,
                                const Grasp& grasp, double goal_angle);

/// Checks the reset precondition: one contact per finger, each inside its
/// workspace arc at the grasp's initial object angle.
bool grasp_fits_workspace(const ObjectShape& shape, const EnvConfig& config, const Grasp& grasp);

class Environment {
 public:
  Environment(ObjectShape shape, EnvConfig config);

  /// Starts an episode from a grasp. The grasp's base rotation changes only
  /// the goal seen in the hand frame (goal - base_angle); contact validity
  /// does not depend on it. Throws InvalidGraspError when a contact lies
  /// outside its finger's workspace arc.
  Observation reset(const Grasp& grasp, double goal_angle, std::uint64_t seed);

  /// Advances one control step. `action` is [slide_0..slide_{n-1},
  /// attach_0..attach_{n-1}]; slides are clamped to [-1, 1] and scaled by
  /// max_step_frac * perimeter, attach logits toggle contact at 0.
  /// Throws ContractViolationError when called on a terminal state.
  StepResult step(const std::vector<double>& action);

  /// Instantaneous goal-proximity test (the condition the dwell rule counts).
  bool is_success() const { return angle_to_goal() < config_.success_threshold_theta; }
  /// |wrap(goal - object_angle)| in [0, pi].
  double angle_to_goal() const {
    return angle_dist(state_.goal_angle, state_.object_angle);
  }

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  const ObjectShape& shape() const { return shape_; }

  /// Epsilon quality of the currently attached contact set under the
  /// episode's friction draw (0 with fewer than two contacts).
  double current_epsilon() const;

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  Observation observe() const;
  void push_frames(const std::vector<double>& prev_pos);

  ObjectShape shape_;
  EnvConfig config_;
  EnvState state_;
  Rng rng_{0};
  double rho_ = 1.0;
  std::vector<float> window_;  // base-rate frame ring, flattened, oldest first
  bool trace_enabled_ = false;
  std::vector<TraceRow> trace_;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

}  // namespace graspcritic
