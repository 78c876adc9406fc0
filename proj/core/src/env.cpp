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

#include "graspcritic/env.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "graspcritic/graspgen.hpp"

namespace graspcritic {

namespace {

/// Consecutive low-epsilon steps that count as a drop.
constexpr int kLowEpsDropSteps = 3;

double clamp01_sym(double x) { return std::clamp(x, -1.0, 1.0); }

/// Boundary shift per radian of object rotation.
double arc_per_radian(const ObjectShape& shape) { return shape.perimeter() / kTwoPi; }

/// Hand-frame coordinate of the material point at object arclength s.
double hand_coord(const ObjectShape& shape, double s, double object_angle) {
  return wrap_pos(s + arc_per_radian(shape) * object_angle, shape.perimeter());
}

/// Object arclength of the material point under hand coordinate u.
double object_coord(const ObjectShape& shape, double u, double object_angle) {
  return wrap_pos(u - arc_per_radian(shape) * object_angle, shape.perimeter());
}

float measured_channel(const ObjectShape& shape, const EnvConfig& config, int finger, double pos,
                       bool attached) {
  if (!attached) return -1.0f;
  double p = shape.perimeter();
  double rel = wrap_signed(pos - config.arc_center(finger, p), p) / p;
  return static_cast<float>(rel);
}

float command_channel(const ObjectShape& shape, const EnvConfig& config, int finger, double cmd) {
  double p = shape.perimeter();
  return static_cast<float>(wrap_signed(cmd - config.arc_center(finger, p), p) / p);
}

}  // namespace

void EnvConfig::validate() const {
  if (n_fingers < 2) throw ConfigError("env: n_fingers must be >= 2");
  if (!(dt > 0.0) || !(horizon_tau > 0.0)) throw ConfigError("env: dt and horizon_tau must be > 0");
  double steps = horizon_tau / dt;
  if (std::fabs(steps - std::lround(steps)) > 1e-9) {
    throw ConfigError("env: horizon_tau must be an integer multiple of dt");
  }
  double frames = obs_window * obs_rate;
  if (std::fabs(frames - std::lround(frames)) > 1e-9 || std::lround(frames) < 1) {
    throw ConfigError("env: obs_window * obs_rate must be a positive integer");
  }
  double sub = dt * obs_rate;
  if (std::fabs(sub - std::lround(sub)) > 1e-9 || std::lround(sub) < 1) {
    throw ConfigError("env: dt * obs_rate must be a positive integer");
  }
  if (!(success_threshold_theta > 0.0 && success_threshold_theta < kPi)) {
    throw ConfigError("env: success_threshold_theta must lie in (0, pi)");
  }
  if (!(workspace_arc > 0.0 && workspace_arc <= 1.0)) {
    throw ConfigError("env: workspace_arc must lie in (0, 1]");
  }
  if (!(max_step_frac > 0.0)) throw ConfigError("env: max_step_frac must be > 0");
  if (!(mu_min >= 0.0 && mu_max >= mu_min)) throw ConfigError("env: bad friction range");
  if (!(slip_scale_min > 0.0 && slip_scale_max >= slip_scale_min)) {
    throw ConfigError("env: bad slip scale range");
  }
  if (!(action_delay_prob >= 0.0 && action_delay_prob <= 1.0)) {
    throw ConfigError("env: action_delay_prob must lie in [0, 1]");
  }
  if (encoding.probes < 1) throw ConfigError("env: encoding.probes must be >= 1");
  if (!(encoding.probe_radius > 0.0)) throw ConfigError("env: encoding.probe_radius must be > 0");
  if (!(dwell_time >= 0.0)) throw ConfigError("env: dwell_time must be >= 0");
}

void Observation::flatten(float* dst) const {
  float* p = dst;
  std::copy(window.begin(), window.end(), p);
  p += window.size();
  *p++ = goal_delta[0];
  *p++ = goal_delta[1];
  std::copy(shape_enc.begin(), shape_enc.end(), p);
}

std::vector<float> Observation::flat() const {
  std::vector<float> out(dim());
  flatten(out.data());
  return out;
}

int EnvState::attached_count() const {
  int c = 0;
  for (std::uint8_t a : attached) c += a ? 1 : 0;
  return c;
}

bool grasp_fits_workspace(const ObjectShape& shape, const EnvConfig& config, const Grasp& grasp) {
  if (static_cast<int>(grasp.contact_s.size()) != config.n_fingers) return false;
  double p = shape.perimeter();
  double half = config.arc_half_width(p);
  for (int i = 0; i < config.n_fingers; ++i) {
    double u = hand_coord(shape, grasp.contact_s[i], grasp.initial_object_angle);
    if (std::fabs(wrap_signed(u - config.arc_center(i, p), p)) > half + 1e-9) return false;
  }
  return true;
}

Observation initial_observation(const ObjectShape& shape, const EnvConfig& config,
                                const Grasp& grasp, double goal_angle) {
  if (!grasp_fits_workspace(shape, config, grasp)) {
    throw InvalidGraspError("grasp contact outside its finger's workspace arc");
  }
  int n = config.n_fingers;
  double phi = wrap_angle(grasp.initial_object_angle);
  double goal_in_hand = wrap_angle(goal_angle - grasp.base_angle);

  Observation obs;
  int frames = config.window_frames();
  obs.window.resize(static_cast<size_t>(frames) * 2 * n);
  for (int f = 0; f < frames; ++f) {
    float* frame = obs.window.data() + static_cast<size_t>(f) * 2 * n;
    for (int i = 0; i < n; ++i) {
      double u = hand_coord(shape, grasp.contact_s[i], phi);
      frame[i] = measured_channel(shape, config, i, u, true);
      frame[n + i] = command_channel(shape, config, i, u);
    }
  }
  double delta = wrap_angle(goal_in_hand - phi);
  obs.goal_delta = {static_cast<float>(std::cos(delta)), static_cast<float>(std::sin(delta))};

  std::vector<double> enc = shape_encoding(shape, phi, config.encoding);
  obs.shape_enc.resize(enc.size());
  for (size_t i = 0; i < enc.size(); ++i) obs.shape_enc[i] = static_cast<float>(enc[i]);
  return obs;
}

Environment::Environment(ObjectShape shape, EnvConfig config)
    : shape_(std::move(shape)), config_(std::move(config)) {
  config_.validate();
  rho_ = wrench_rho(shape_, config_);
}

Observation Environment::reset(const Grasp& grasp, double goal_angle, std::uint64_t seed) {
  Observation obs = initial_observation(shape_, config_, grasp, goal_angle);

  int n = config_.n_fingers;
  state_ = EnvState{};
  state_.seed = seed;
  rng_ = Rng(seed);
  state_.object_angle = wrap_angle(grasp.initial_object_angle);
  state_.goal_angle = wrap_angle(goal_angle - grasp.base_angle);
  state_.finger_pos.resize(n);
  state_.finger_cmd.resize(n);
  state_.attached.assign(n, 1);
  for (int i = 0; i < n; ++i) {
    state_.finger_pos[i] = hand_coord(shape_, grasp.contact_s[i], state_.object_angle);
    state_.finger_cmd[i] = state_.finger_pos[i];
  }
  state_.default_pos = state_.finger_pos;
  state_.pending_action.assign(config_.action_dim(), 0.0);
  state_.goals_attempted = 1;

  // Domain randomization, one draw per episode.
  state_.physics.mu = rng_.uniform(config_.mu_min, config_.mu_max);
  state_.physics.slip_scale = rng_.uniform(config_.slip_scale_min, config_.slip_scale_max);
  state_.physics.action_delay = rng_.uniform() < config_.action_delay_prob;

  window_ = obs.window;
  trace_.clear();
  return obs;
}

double Environment::current_epsilon() const {
  if (state_.attached_count() < 2) return 0.0;
  std::vector<Contact> contacts;
  contacts.reserve(state_.attached.size());
  for (int i = 0; i < config_.n_fingers; ++i) {
    if (!state_.attached[i]) continue;
    double s = object_coord(shape_, state_.finger_pos[i], state_.object_angle);
    contacts.push_back(Contact::at(shape_, s, state_.physics.mu));
  }
  return epsilon_quality(contact_wrenches(shape_, contacts, rho_));
}

Observation Environment::observe() const {
  Observation obs;
  obs.window = window_;
  double delta = wrap_angle(state_.goal_angle - state_.object_angle);
  obs.goal_delta = {static_cast<float>(std::cos(delta)), static_cast<float>(std::sin(delta))};
  std::vector<double> enc = shape_encoding(shape_, state_.object_angle, config_.encoding);
  obs.shape_enc.resize(enc.size());
  for (size_t i = 0; i < enc.size(); ++i) obs.shape_enc[i] = static_cast<float>(enc[i]);
  return obs;
}

void Environment::push_frames(const std::vector<double>& prev_pos) {
  // Appends the base-rate subframes of this control step: measured positions
  // interpolate from the previous to the new position, commands are the new
  // target held for the whole step.
  int n = config_.n_fingers;
  int sub = config_.subframes_per_step();
  int frames = config_.window_frames();
  size_t frame_sz = static_cast<size_t>(2) * n;
  double p = shape_.perimeter();

  for (int k = 0; k < sub; ++k) {
    // Shift the ring left by one frame.
    std::move(window_.begin() + frame_sz, window_.end(), window_.begin());
    float* frame = window_.data() + static_cast<size_t>(frames - 1) * frame_sz;
    double alpha = static_cast<double>(k + 1) / sub;
    for (int i = 0; i < n; ++i) {
      double u = wrap_pos(prev_pos[i] + alpha * wrap_signed(state_.finger_pos[i] - prev_pos[i], p),
                          p);
      frame[i] = measured_channel(shape_, config_, i, u, state_.attached[i] != 0);
      frame[n + i] = command_channel(shape_, config_, i, state_.finger_cmd[i]);
    }
  }
}

StepResult Environment::step(const std::vector<double>& action) {
  if (state_.terminal) throw ContractViolationError("step() called on a terminal episode");
  if (static_cast<int>(action.size()) != config_.action_dim()) {
    throw ContractViolationError("action dimension mismatch");
  }
  for (double a : action) {
    if (!std::isfinite(a)) throw ContractViolationError("non-finite action");
  }

  int n = config_.n_fingers;
  double p = shape_.perimeter();
  double half = config_.arc_half_width(p);
  double max_step = config_.max_step_frac * p;

  // One-step action delay when the episode drew it.
  std::vector<double> applied(action);
  if (state_.physics.action_delay) {
    applied = state_.pending_action;
    if (state_.step == 0) {
      // Nothing pending yet: hold position, keep the current contact set.
      std::fill(applied.begin(), applied.begin() + n, 0.0);
      for (int i = 0; i < n; ++i) applied[n + i] = state_.attached[i] ? 1.0 : -1.0;
    }
    state_.pending_action = action;
  }

  std::vector<double> prev_pos = state_.finger_pos;
  double prev_angle = state_.object_angle;

  // Slide commands, clamped to the workspace arc.
  for (int i = 0; i < n; ++i) {
    double delta = clamp01_sym(applied[i]) * max_step;
    double center = config_.arc_center(i, p);
    double rel = wrap_signed(state_.finger_cmd[i] - center, p);
    rel = std::clamp(rel + delta, -half, half);
    state_.finger_cmd[i] = wrap_pos(center + rel, p);
  }

  // Attach / detach, thresholded at zero. Attaching snaps the finger onto
  // the commanded boundary point.
  for (int i = 0; i < n; ++i) {
    bool want = applied[n + i] >= 0.0;
    if (!want && state_.attached[i]) {
      state_.attached[i] = 0;
    } else if (want && !state_.attached[i]) {
      state_.attached[i] = 1;
      state_.finger_pos[i] = state_.finger_cmd[i];
    }
  }

  // Quasi-static rotation: friction-weighted mean of the attached fingers'
  // tangential displacements divided by the boundary's rolling radius
  // (perimeter / 2pi, the local radius of the arclength parameterization).
  // Using the same radius that converts rotation to boundary shift keeps
  // synchronized slides drift-free on every shape.
  double rolling_radius = arc_per_radian(shape_);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!state_.attached[i]) continue;
    double d = wrap_signed(state_.finger_cmd[i] - state_.finger_pos[i], p);
    num += state_.physics.mu * (d / rolling_radius);
    den += state_.physics.mu;
  }
  if (den > 0.0) {
    double rotation = num / den;
    if (config_.slip_noise_std > 0.0) {
      rotation += rng_.normal() * config_.slip_noise_std * state_.physics.slip_scale;
    }
    state_.object_angle = wrap_angle(state_.object_angle + rotation);
  }

  // Servo positions reach their targets within the step.
  state_.finger_pos = state_.finger_cmd;

  // Drop rules: fewer than two contacts, or a sustained low-quality grasp.
  bool dropped = false;
  if (state_.attached_count() < 2) {
    dropped = true;
  } else {
    double eps = current_epsilon();
    state_.low_eps_steps = eps < config_.drop_epsilon_min ? state_.low_eps_steps + 1 : 0;
    if (state_.low_eps_steps >= kLowEpsDropSteps) dropped = true;
  }

  // Dense reward: progress toward the goal, position penalty, drop penalty.
  double progress = angle_dist(state_.goal_angle, prev_angle) -
                    angle_dist(state_.goal_angle, state_.object_angle);
  double pos_pen = 0.0;
  for (int i = 0; i < n; ++i) {
    pos_pen += std::fabs(wrap_signed(state_.finger_pos[i] - state_.default_pos[i], p)) / p;
  }
  pos_pen /= n;
  double r_dense =
      config_.w_rot * progress - config_.w_pos * pos_pen - config_.w_drop * (dropped ? 1.0 : 0.0);

  StepResult res;
  res.r_dense = r_dense;

  if (dropped) {
    state_.dropped = true;
    state_.terminal = true;
    state_.dwell = 0;
  } else {
    // Sustained-success rule.
    bool within =
        angle_dist(state_.goal_angle, state_.object_angle) < config_.success_threshold_theta;
    state_.dwell = within ? state_.dwell + 1 : 0;
    if (state_.dwell >= config_.dwell_steps()) {
      res.success = true;
      res.r_sparse = 1.0;
      state_.goals_succeeded += 1;
      if (state_.first_time_to_goal < 0.0) {
        state_.first_time_to_goal = (state_.step + 1) * config_.dt;
      }
      res.time_to_goal = (state_.step + 1) * config_.dt;
      if (config_.goal_resample) {
        state_.goal_angle = rng_.uniform(-kPi, kPi);
        state_.goals_attempted += 1;
        state_.dwell = 0;
      } else {
        state_.terminal = true;
      }
    }
  }

  state_.step += 1;
  if (state_.step >= config_.horizon_steps()) state_.terminal = true;

  push_frames(prev_pos);

  res.dropped = dropped;
  res.terminal = state_.terminal;
  res.obs = observe();

  if (trace_enabled_) {
    TraceRow row;
    row.step = state_.step;
    row.t = state_.step * config_.dt;
    row.object_angle = state_.object_angle;
    row.goal_angle = state_.goal_angle;
    row.finger_pos = state_.finger_pos;
    row.finger_cmd = state_.finger_cmd;
    row.attached = state_.attached;
    row.r_dense = res.r_dense;
    row.r_sparse = res.r_sparse;
    row.dropped = res.dropped;
    row.success = res.success;
    trace_.push_back(std::move(row));
  }
  return res;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open trace file: " + path);
  int n = rows.empty() ? 0 : static_cast<int>(rows.front().finger_pos.size());
  out << "step,t,object_angle,goal_angle";
  for (int i = 0; i < n; ++i) {
    out << ",finger" << i << "_pos,finger" << i << "_cmd,finger" << i << "_attached";
  }
  out << ",r_dense,r_sparse,dropped,success\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out << buf;
  };
  for (const TraceRow& r : rows) {
    out << r.step << ',';
    put(r.t);
    out << ',';
    put(r.object_angle);
    out << ',';
    put(r.goal_angle);
    for (int i = 0; i < n; ++i) {
      out << ',';
      put(r.finger_pos[i]);
      out << ',';
      put(r.finger_cmd[i]);
      out << ',' << (r.attached[i] ? 1 : 0);
    }
    out << ',';
    put(r.r_dense);
    out << ',';
    put(r.r_sparse);
    out << ',' << (r.dropped ? 1 : 0) << ',' << (r.success ? 1 : 0) << '\n';
  }
}

}  // namespace graspcritic
