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

#include "graspcritic/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace graspcritic {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field has wrong type: ") + key);
  }
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown config field: " + where + "." + it.key());
    }
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ObjectShape> load_shape_library(const std::string& path) {
  json j = load_json(path);
  if (!j.contains("shapes") || !j["shapes"].is_array()) {
    throw ConfigError("shape library needs a 'shapes' array: " + path);
  }
  std::vector<ObjectShape> out;
  for (const json& s : j["shapes"]) {
    std::string name = s.value("name", "");
    if (name.empty()) throw ConfigError("shape without a name in " + path);
    if (!s.contains("vertices") || !s["vertices"].is_array()) {
      throw ConfigError("shape '" + name + "' needs a 'vertices' array");
    }
    std::vector<Vec2> verts;
    for (const json& v : s["vertices"]) {
      if (!v.is_array() || v.size() != 2) {
        throw ConfigError("shape '" + name + "': vertices must be [x, y] pairs");
      }
      verts.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    out.emplace_back(name, std::move(verts));
  }
  if (out.empty()) throw ConfigError("shape library is empty: " + path);
  return out;
}

RunConfig load_run_config(const std::string& path) {
  json j = load_json(path);
  check_keys(j, {"shapes_path", "shape_names", "out_dir", "seeds", "workers", "env", "rl", "eval",
                 "score"},
             "");

  RunConfig c;
  read_field(j, "shapes_path", c.shapes_path);
  read_field(j, "shape_names", c.shape_names);
  read_field(j, "out_dir", c.out_dir);
  read_field(j, "workers", c.workers);

  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    check_keys(s, {"train", "grasp", "eval"}, "seeds");
    read_field(s, "train", c.train_seed);
    read_field(s, "grasp", c.grasp_seed);
    read_field(s, "eval", c.eval_seed);
  }

  if (j.contains("env")) {
    const json& e = j["env"];
    check_keys(e,
               {"n_fingers", "dt", "horizon_tau", "success_threshold_theta", "workspace_arc",
                "max_step_frac", "slip_noise_std", "obs_window", "obs_rate", "drop_epsilon_min",
                "mu_min", "mu_max", "rho", "goal_resample", "dwell_time", "w_rot", "w_pos",
                "w_drop", "slip_scale_min", "slip_scale_max", "action_delay_prob", "probes",
                "probe_radius"},
               "env");
    read_field(e, "n_fingers", c.env.n_fingers);
    read_field(e, "dt", c.env.dt);
    read_field(e, "horizon_tau", c.env.horizon_tau);
    read_field(e, "success_threshold_theta", c.env.success_threshold_theta);
    read_field(e, "workspace_arc", c.env.workspace_arc);
    read_field(e, "max_step_frac", c.env.max_step_frac);
    read_field(e, "slip_noise_std", c.env.slip_noise_std);
    read_field(e, "obs_window", c.env.obs_window);
    read_field(e, "obs_rate", c.env.obs_rate);
    read_field(e, "drop_epsilon_min", c.env.drop_epsilon_min);
    read_field(e, "mu_min", c.env.mu_min);
    read_field(e, "mu_max", c.env.mu_max);
    read_field(e, "rho", c.env.rho);
    read_field(e, "goal_resample", c.env.goal_resample);
    read_field(e, "dwell_time", c.env.dwell_time);
    read_field(e, "w_rot", c.env.w_rot);
    read_field(e, "w_pos", c.env.w_pos);
    read_field(e, "w_drop", c.env.w_drop);
    read_field(e, "slip_scale_min", c.env.slip_scale_min);
    read_field(e, "slip_scale_max", c.env.slip_scale_max);
    read_field(e, "action_delay_prob", c.env.action_delay_prob);
    read_field(e, "probes", c.env.encoding.probes);
    read_field(e, "probe_radius", c.env.encoding.probe_radius);
  }

  if (j.contains("rl")) {
    const json& r = j["rl"];
    check_keys(r,
               {"actor_hidden", "critic_hidden", "gamma", "lam", "clip", "epochs", "minibatch",
                "lr", "value_coef", "entropy_coef", "num_envs", "total_steps", "checkpoint_every",
                "pool_per_shape", "run_name"},
               "rl");
    read_field(r, "actor_hidden", c.train.actor_hidden);
    read_field(r, "critic_hidden", c.train.critic_hidden);
    read_field(r, "gamma", c.train.hyper.gamma);
    read_field(r, "lam", c.train.hyper.lam);
    read_field(r, "clip", c.train.hyper.clip);
    read_field(r, "epochs", c.train.hyper.epochs);
    read_field(r, "minibatch", c.train.hyper.minibatch);
    read_field(r, "lr", c.train.hyper.lr);
    read_field(r, "value_coef", c.train.hyper.value_coef);
    read_field(r, "entropy_coef", c.train.hyper.entropy_coef);
    read_field(r, "num_envs", c.train.num_envs);
    read_field(r, "total_steps", c.train.total_steps);
    read_field(r, "checkpoint_every", c.train.checkpoint_every);
    read_field(r, "pool_per_shape", c.train.pool_per_shape);
    read_field(r, "run_name", c.train.run_name);
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e,
               {"candidates", "base_grid", "base_limit", "trials_per_cell", "strategies",
                "correlation_pairs", "correlation_bins", "correlation_angle_cell", "wave"},
               "eval");
    read_field(e, "candidates", c.eval.candidates);
    read_field(e, "base_grid", c.eval.base_grid);
    read_field(e, "base_limit", c.eval.base_limit);
    read_field(e, "trials_per_cell", c.eval.trials_per_cell);
    read_field(e, "correlation_pairs", c.eval.correlation_pairs);
    read_field(e, "correlation_bins", c.eval.correlation_bins);
    read_field(e, "correlation_angle_cell", c.eval.correlation_angle_cell);
    read_field(e, "wave", c.eval.wave);
    if (e.contains("strategies")) {
      std::vector<std::string> names = e["strategies"].get<std::vector<std::string>>();
      c.eval.strategies.clear();
      for (const std::string& n : names) c.eval.strategies.push_back(strategy_from_name(n));
    }
  }

  if (j.contains("score")) {
    const json& s = j["score"];
    check_keys(s, {"candidates", "base_grid", "base_limit", "top_k"}, "score");
    read_field(s, "candidates", c.score.candidates);
    read_field(s, "base_grid", c.score.base_grid);
    read_field(s, "base_limit", c.score.base_limit);
    read_field(s, "top_k", c.score.top_k);
  }

  return c;
}

std::vector<ObjectShape> resolve_shapes(RunConfig& config) {
  if (config.shapes_path.empty()) throw ConfigError("config field missing: shapes_path");
  std::vector<ObjectShape> library = load_shape_library(config.shapes_path);

  std::vector<ObjectShape> selected;
  if (config.shape_names.empty()) {
    selected = library;
    for (const ObjectShape& s : selected) config.shape_names.push_back(s.name());
  } else {
    for (const std::string& name : config.shape_names) {
      auto it = std::find_if(library.begin(), library.end(),
                             [&](const ObjectShape& s) { return s.name() == name; });
      if (it == library.end()) {
        throw ConfigError("shape '" + name + "' not found in " + config.shapes_path);
      }
      selected.push_back(*it);
    }
  }

  if (config.env.encoding.probe_radius <= 0.0) {
    double max_r = 0.0;
    for (const ObjectShape& s : selected) max_r = std::max(max_r, s.max_radius());
    config.env.encoding.probe_radius = 1.2 * max_r;
  }
  return selected;
}

std::string canonical_config_string(const RunConfig& c) {
  json j;
  j["shape_names"] = c.shape_names;
  j["seeds"] = {{"train", c.train_seed}, {"grasp", c.grasp_seed}, {"eval", c.eval_seed}};
  json e;
  e["n_fingers"] = c.env.n_fingers;
  e["dt"] = fmt(c.env.dt);
  e["horizon_tau"] = fmt(c.env.horizon_tau);
  e["success_threshold_theta"] = fmt(c.env.success_threshold_theta);
  e["workspace_arc"] = fmt(c.env.workspace_arc);
  e["max_step_frac"] = fmt(c.env.max_step_frac);
  e["slip_noise_std"] = fmt(c.env.slip_noise_std);
  e["obs_window"] = fmt(c.env.obs_window);
  e["obs_rate"] = fmt(c.env.obs_rate);
  e["drop_epsilon_min"] = fmt(c.env.drop_epsilon_min);
  e["mu_min"] = fmt(c.env.mu_min);
  e["mu_max"] = fmt(c.env.mu_max);
  e["rho"] = fmt(c.env.rho);
  e["goal_resample"] = c.env.goal_resample;
  e["dwell_time"] = fmt(c.env.dwell_time);
  e["w_rot"] = fmt(c.env.w_rot);
  e["w_pos"] = fmt(c.env.w_pos);
  e["w_drop"] = fmt(c.env.w_drop);
  e["slip_scale_min"] = fmt(c.env.slip_scale_min);
  e["slip_scale_max"] = fmt(c.env.slip_scale_max);
  e["action_delay_prob"] = fmt(c.env.action_delay_prob);
  e["probes"] = c.env.encoding.probes;
  e["probe_radius"] = fmt(c.env.encoding.probe_radius);
  j["env"] = e;
  json r;
  r["actor_hidden"] = c.train.actor_hidden;
  r["critic_hidden"] = c.train.critic_hidden;
  r["gamma"] = fmt(c.train.hyper.gamma);
  r["lam"] = fmt(c.train.hyper.lam);
  r["clip"] = fmt(c.train.hyper.clip);
  r["epochs"] = c.train.hyper.epochs;
  r["minibatch"] = c.train.hyper.minibatch;
  r["lr"] = fmt(c.train.hyper.lr);
  r["value_coef"] = fmt(c.train.hyper.value_coef);
  r["entropy_coef"] = fmt(c.train.hyper.entropy_coef);
  r["num_envs"] = c.train.num_envs;
  r["total_steps"] = c.train.total_steps;
  r["pool_per_shape"] = c.train.pool_per_shape;
  j["rl"] = r;
  json ev;
  ev["candidates"] = c.eval.candidates;
  ev["base_grid"] = c.eval.base_grid;
  ev["base_limit"] = fmt(c.eval.base_limit);
  ev["trials_per_cell"] = c.eval.trials_per_cell;
  std::vector<std::string> strat_names;
  for (Strategy s : c.eval.strategies) strat_names.push_back(strategy_name(s));
  ev["strategies"] = strat_names;
  ev["correlation_pairs"] = c.eval.correlation_pairs;
  ev["correlation_bins"] = c.eval.correlation_bins;
  ev["correlation_angle_cell"] = fmt(c.eval.correlation_angle_cell);
  j["eval"] = ev;
  json sc;
  sc["candidates"] = c.score.candidates;
  sc["base_grid"] = c.score.base_grid;
  sc["base_limit"] = fmt(c.score.base_limit);
  j["score"] = sc;
  return j.dump();
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a64(canonical_config_string(config));
}

}  // namespace graspcritic
