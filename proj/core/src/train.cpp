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

#include "graspcritic/train.hpp"

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace graspcritic {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct EpisodeSlot {
  Environment env;
  Rng policy_rng;
  int shape_idx = 0;
  int grasp_id = 0;
  double goal = 0.0;
  bool active = false;
  // Episode-local transition storage, concatenated into the batch afterwards.
  std::vector<float> obs, actions, logp, r_dense, r_sparse, v_dense, v_sparse;
  std::vector<std::uint8_t> terminal;
  std::vector<float> pending_obs;  // raw observation awaiting its transition
};

void write_log_header(std::ofstream& out, std::uint64_t config_hash) {
  out << "# config_hash=" << hex64(config_hash) << "\n";
  out << "iteration,env_steps,episodes,goal_attempts,successes,success_rate,drop_rate,"
         "mean_dense_return,mean_sparse_return,mean_episode_len,policy_loss,value_loss,entropy,"
         "kl,grad_norm_actor,grad_norm_critic,seconds\n";
}

void write_log_row(std::ofstream& out, const IterationStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%lld,%lld,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n",
                static_cast<long long>(s.iteration), static_cast<long long>(s.env_steps),
                s.episodes, s.goal_attempts, s.successes, s.success_rate, s.drop_rate,
                s.mean_dense_return, s.mean_sparse_return, s.mean_episode_len, s.ppo.policy_loss,
                s.ppo.value_loss, s.ppo.entropy, s.ppo.kl, s.ppo.grad_norm_actor,
                s.ppo.grad_norm_critic, s.seconds);
  out << buf;
}

}  // namespace

std::vector<Grasp> sample_training_pool(const ObjectShape& shape, int count, std::uint64_t seed,
                                        const EnvConfig& config) {
  std::vector<Grasp> pool;
  pool.reserve(count);
  Rng rng(derive_seed(seed, 0x9001));
  for (int i = 0; i < count; ++i) {
    double angle = rng.uniform(-kPi, kPi);
    GraspSampleResult one = sample_candidates(shape, angle, 1, derive_seed(seed, 0x9002, i),
                                              config);
    if (one.grasps.empty()) continue;
    Grasp g = std::move(one.grasps.front());
    g.id = static_cast<int>(pool.size());
    pool.push_back(std::move(g));
  }
  return filter_stable(pool, default_stability_threshold(pool));
}

TrainResult train(const std::vector<ObjectShape>& shapes, const EnvConfig& env_config,
                  const TrainConfig& tc, std::uint64_t train_seed, std::uint64_t grasp_seed,
                  std::uint64_t config_hash, const Checkpoint* resume) {
  if (shapes.empty()) throw ConfigError("train: empty shape set");
  env_config.validate();

  // Per-shape training grasp pools; every shape must contribute at least one
  // stable grasp.
  std::vector<std::vector<Grasp>> pools;
  pools.reserve(shapes.size());
  for (size_t i = 0; i < shapes.size(); ++i) {
    pools.push_back(sample_training_pool(shapes[i], tc.pool_per_shape,
                                         derive_seed(grasp_seed, 0x700, i), env_config));
  }

  int obs_dim = env_config.obs_dim();
  int action_dim = env_config.action_dim();

  Checkpoint ck;
  if (resume) {
    ck = *resume;
    if (ck.meta.obs_dim != obs_dim || ck.meta.action_dim != action_dim) {
      throw CheckpointFormatError("resume checkpoint does not match the environment dimensions");
    }
    if (ck.adam.m.empty()) {
      throw CheckpointFormatError("resume checkpoint carries no optimizer state");
    }
    // The resumed run is governed by the current config (e.g. a raised step
    // budget); iteration seeding is independent of it, so the result is
    // byte-identical to an uninterrupted run under that config.
    ck.meta.config_hash = config_hash;
  } else {
    ck.agent = Agent::init(obs_dim, action_dim, tc.actor_hidden, tc.critic_hidden,
                           derive_seed(train_seed, 0x11));
    // Bias the attach logits positive so fresh policies hold their grasp;
    // without this, random detach churn drops every episode within a few
    // steps and only the most forgiving shape ever produces learning signal.
    for (int i = env_config.n_fingers; i < action_dim; ++i) {
      ck.agent.actor.b.back()[i] = 1.0f;
    }
    std::vector<TensorRef<float>> params = ck.agent.tensors();
    ck.adam.init(params);
    ck.meta.config_hash = config_hash;
    ck.meta.obs_dim = obs_dim;
    ck.meta.action_dim = action_dim;
    ck.meta.n_fingers = env_config.n_fingers;
    ck.meta.actor_hidden = tc.actor_hidden;
    ck.meta.critic_hidden = tc.critic_hidden;
    ck.meta.gamma = tc.hyper.gamma;
  }

  std::filesystem::create_directories(tc.out_dir);
  std::string ckpt_path = tc.out_dir + "/" + tc.run_name + ".ckpt";
  std::string log_path = tc.out_dir + "/" + tc.run_name + "_training_log.csv";

  std::ofstream log(log_path, resume ? std::ios::app : std::ios::out);
  if (!log) throw Error("cannot open training log: " + log_path);
  if (!resume) write_log_header(log, config_hash);

  TrainResult result;
  result.checkpoint_path = ckpt_path;
  result.log_path = log_path;

  std::vector<EpisodeSlot> slots;
  slots.reserve(tc.num_envs);
  for (int e = 0; e < tc.num_envs; ++e) {
    slots.push_back(EpisodeSlot{Environment(shapes[0], env_config), Rng(0)});
  }

  RolloutBatch batch;
  std::vector<float> obs_rows, means, mean_row(action_dim);
  std::vector<int> active_ids;

  // total_steps is a hard budget: stop while the next iteration's worst-case
  // step count still fits.
  std::int64_t step_chunk =
      static_cast<std::int64_t>(tc.num_envs) * env_config.horizon_steps();
  while (ck.meta.env_steps + step_chunk <= tc.total_steps) {
    double t0 = now_seconds();
    std::int64_t iter = ck.meta.iteration;

    // Launch one episode per slot.
    for (int e = 0; e < tc.num_envs; ++e) {
      EpisodeSlot& slot = slots[e];
      std::uint64_t eseed = derive_seed(train_seed, 0xE0, iter, e);
      Rng pick(derive_seed(eseed, 1));
      slot.shape_idx = pick.uniform_int(static_cast<int>(shapes.size()));
      const std::vector<Grasp>& pool = pools[slot.shape_idx];
      const Grasp& grasp = pool[pick.uniform_int(static_cast<int>(pool.size()))];
      slot.grasp_id = grasp.id;
      slot.goal = pick.uniform(-kPi, kPi);
      slot.env = Environment(shapes[slot.shape_idx], env_config);
      Observation first = slot.env.reset(grasp, slot.goal, derive_seed(eseed, 2));
      slot.policy_rng = Rng(derive_seed(eseed, 3));
      slot.active = true;
      slot.obs.clear();
      slot.actions.clear();
      slot.logp.clear();
      slot.r_dense.clear();
      slot.r_sparse.clear();
      slot.v_dense.clear();
      slot.v_sparse.clear();
      slot.terminal.clear();
      slot.pending_obs = first.flat();
    }

    // Lockstep rollout with batched forward passes.
    for (;;) {
      active_ids.clear();
      for (int e = 0; e < tc.num_envs; ++e) {
        if (slots[e].active) active_ids.push_back(e);
      }
      if (active_ids.empty()) break;
      int n_active = static_cast<int>(active_ids.size());
      obs_rows.resize(static_cast<size_t>(n_active) * obs_dim);
      for (int r = 0; r < n_active; ++r) {
        std::copy(slots[active_ids[r]].pending_obs.begin(),
                  slots[active_ids[r]].pending_obs.end(),
                  obs_rows.begin() + static_cast<size_t>(r) * obs_dim);
      }
      means.resize(static_cast<size_t>(n_active) * action_dim);
      actor_mean_batch(ck.agent, obs_rows.data(), n_active, means.data());
      std::vector<CriticOutput> values = critic_eval(ck.agent, obs_rows.data(), n_active);

      for (int r = 0; r < n_active; ++r) {
        EpisodeSlot& slot = slots[active_ids[r]];
        PolicyOutput pol = policy_sample_from_mean(
            ck.agent, means.data() + static_cast<size_t>(r) * action_dim, slot.policy_rng);
        std::vector<double> action(pol.action.begin(), pol.action.end());
        StepResult sr = slot.env.step(action);

        slot.obs.insert(slot.obs.end(), slot.pending_obs.begin(), slot.pending_obs.end());
        slot.actions.insert(slot.actions.end(), pol.action.begin(), pol.action.end());
        slot.logp.push_back(pol.log_prob);
        slot.r_dense.push_back(static_cast<float>(sr.r_dense));
        slot.r_sparse.push_back(static_cast<float>(sr.r_sparse));
        slot.v_dense.push_back(values[r].v_d);
        slot.v_sparse.push_back(values[r].v_s);
        slot.terminal.push_back(sr.terminal ? 1 : 0);
        if (sr.terminal) {
          slot.active = false;
        } else {
          slot.pending_obs = sr.obs.flat();
        }
      }
    }

    // Concatenate episodes, slot order.
    batch = RolloutBatch{};
    batch.obs_dim = obs_dim;
    batch.action_dim = action_dim;
    IterationStats stats;
    for (int e = 0; e < tc.num_envs; ++e) {
      EpisodeSlot& slot = slots[e];
      EpisodeMeta meta;
      meta.start = batch.size();
      meta.len = static_cast<int>(slot.logp.size());
      meta.shape_idx = slot.shape_idx;
      meta.grasp_id = slot.grasp_id;
      meta.goal = slot.goal;
      meta.dropped = slot.env.state().dropped;
      meta.goal_attempts = slot.env.state().goals_attempted;
      meta.successes = slot.env.state().goals_succeeded;
      batch.episodes.push_back(meta);
      batch.obs.insert(batch.obs.end(), slot.obs.begin(), slot.obs.end());
      batch.actions.insert(batch.actions.end(), slot.actions.begin(), slot.actions.end());
      batch.logp.insert(batch.logp.end(), slot.logp.begin(), slot.logp.end());
      batch.r_dense.insert(batch.r_dense.end(), slot.r_dense.begin(), slot.r_dense.end());
      batch.r_sparse.insert(batch.r_sparse.end(), slot.r_sparse.begin(), slot.r_sparse.end());
      batch.v_dense.insert(batch.v_dense.end(), slot.v_dense.begin(), slot.v_dense.end());
      batch.v_sparse.insert(batch.v_sparse.end(), slot.v_sparse.begin(), slot.v_sparse.end());
      batch.terminal.insert(batch.terminal.end(), slot.terminal.begin(), slot.terminal.end());

      stats.goal_attempts += meta.goal_attempts;
      stats.successes += meta.successes;
      stats.drop_rate += meta.dropped ? 1.0 : 0.0;
      double dret = 0.0, sret = 0.0;
      for (float v : slot.r_dense) dret += v;
      for (float v : slot.r_sparse) sret += v;
      stats.mean_dense_return += dret;
      stats.mean_sparse_return += sret;
    }
    stats.episodes = tc.num_envs;
    stats.mean_episode_len = static_cast<double>(batch.size()) / tc.num_envs;
    stats.drop_rate /= tc.num_envs;
    stats.mean_dense_return /= tc.num_envs;
    stats.mean_sparse_return /= tc.num_envs;
    stats.success_rate =
        stats.goal_attempts > 0 ? static_cast<double>(stats.successes) / stats.goal_attempts : 0.0;

    // Update with the statistics that produced the rollout, then refresh the
    // normalizer for the next iteration. The step size anneals linearly with
    // progress (floored at 10%); it depends only on the step counter and the
    // config, so resumed runs stay byte-identical.
    PpoHyper hyper = tc.hyper;
    double progress = static_cast<double>(ck.meta.env_steps) / tc.total_steps;
    hyper.lr = tc.hyper.lr * std::max(0.1, 1.0 - progress);
    Rng shuffle_rng(derive_seed(train_seed, 0x5F, iter));
    stats.ppo = ppo_update(ck.agent, ck.adam, batch, hyper, shuffle_rng);
    for (int i = 0; i < batch.size(); ++i) {
      ck.agent.norm.update_row(batch.obs.data() + static_cast<size_t>(i) * obs_dim);
    }

    if (std::getenv("GC_DEBUG_STATE_HASH")) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      auto mix = [&h](const void* p, size_t nbytes) {
        const unsigned char* c = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < nbytes; ++i) { h ^= c[i]; h *= 0x100000001b3ULL; }
      };
      for (auto& t : ck.agent.tensors()) mix(t.data, t.size * sizeof(float));
      for (auto& m : ck.adam.m) mix(m.data(), m.size() * sizeof(float));
      for (auto& v : ck.adam.v) mix(v.data(), v.size() * sizeof(float));
      mix(ck.agent.norm.mean.data(), ck.agent.norm.mean.size() * sizeof(double));
      mix(ck.agent.norm.m2.data(), ck.agent.norm.m2.size() * sizeof(double));
      mix(&ck.agent.norm.count, sizeof(ck.agent.norm.count));
      mix(&ck.adam.t, sizeof(ck.adam.t));
      std::printf("[hash] iter %lld steps %lld state %016llx batch %d\n",
                  (long long)ck.meta.iteration, (long long)ck.meta.env_steps,
                  (unsigned long long)h, batch.size());
    }
    ck.meta.iteration += 1;
    ck.meta.env_steps += batch.size();
    stats.iteration = ck.meta.iteration;
    stats.env_steps = ck.meta.env_steps;
    stats.seconds = now_seconds() - t0;

    write_log_row(log, stats);
    log.flush();
    result.log.push_back(stats);
    if (!tc.quiet) {
      std::printf("iter %lld steps %lld success %.3f drop %.3f dret %.3f sret %.3f kl %.4f\n",
                  static_cast<long long>(stats.iteration),
                  static_cast<long long>(stats.env_steps), stats.success_rate, stats.drop_rate,
                  stats.mean_dense_return, stats.mean_sparse_return, stats.ppo.kl);
      std::fflush(stdout);
    }

    if (tc.checkpoint_every > 0 && ck.meta.iteration % tc.checkpoint_every == 0) {
      save_checkpoint(ckpt_path, ck);
    }
  }

  save_checkpoint(ckpt_path, ck);
  return result;
}

}  // namespace graspcritic
