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
#include <vector>

#include "graspcritic/common.hpp"
#include "graspcritic/mlp.hpp"

namespace graspcritic {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Observation normalization with Welford accumulators. Statistics are
/// updated between rollout phases and frozen into checkpoints, so critic
/// scores stay comparable across a candidate batch.
struct RunningNorm {
  std::int64_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  void init(int dim) {
    count = 0;
    mean.assign(dim, 0.0);
    m2.assign(dim, 0.0);
  }
  int dim() const { return static_cast<int>(mean.size()); }

  void update_row(const float* x) {
    count += 1;
    for (size_t i = 0; i < mean.size(); ++i) {
      double d = x[i] - mean[i];
      mean[i] += d / count;
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  /// (x - mean) / sqrt(var + 1e-8), clipped to [-10, 10]. Identity (plus the
  /// clip) until at least two rows have been seen.
  void normalize(const float* in, float* out, int n_rows) const;
};

/// Actor-critic parameter set. The critic's two outputs estimate the dense
/// and sparse discounted returns separately; log_std is a state-independent
/// learned parameter clamped to [kLogStdMin, kLogStdMax] at use.
struct Agent {
  Mlp<float> actor;
  std::vector<float> log_std;
  Mlp<float> critic;
  RunningNorm norm;

  int obs_dim() const { return actor.in_dim(); }
  int action_dim() const { return actor.out_dim(); }

  static Agent init(int obs_dim, int action_dim, const std::vector<int>& actor_hidden,
                    const std::vector<int>& critic_hidden, std::uint64_t seed);

  /// All learnable tensors, fixed order: actor weights, actor.log_std,
  /// critic weights. Adam state and checkpoints follow this order.
  std::vector<TensorRef<float>> tensors();
};

struct PolicyOutput {
  std::vector<float> mean;
  std::vector<float> log_std;  // clamped values
  std::vector<float> action;
  float log_prob = 0.0f;
};

struct CriticOutput {
  float v_d = 0.0f;
  float v_s = 0.0f;
};

/// Log-density of a diagonal Gaussian with the given (clamped) log stds.
double gaussian_log_prob(const std::vector<float>& mean, const std::vector<float>& log_std,
                         const std::vector<float>& action);

/// Batched actor forward on raw observations (normalization applied
/// internally). Writes n x action_dim means.
void actor_mean_batch(const Agent& agent, const float* raw_obs, int n, float* means_out);

/// Samples an action given a precomputed mean row.
PolicyOutput policy_sample_from_mean(const Agent& agent, const float* mean_row, Rng& rng);

/// Single-row convenience wrapper: forward + sample.
PolicyOutput policy_sample(const Agent& agent, const float* raw_obs, Rng& rng);

/// Batched critic forward on raw observations; row i equals a single-row
/// call on observation i exactly.
std::vector<CriticOutput> critic_eval(const Agent& agent, const float* raw_obs, int n);

// ---------------------------------------------------------------------------
// Rollout storage.
// ---------------------------------------------------------------------------

struct EpisodeMeta {
  int start = 0;
  int len = 0;
  int shape_idx = 0;
  int grasp_id = 0;
  double goal = 0.0;
  bool dropped = false;
  int goal_attempts = 0;
  int successes = 0;
};

struct RolloutBatch {
  int obs_dim = 0;
  int action_dim = 0;
  std::vector<float> obs;      // n x obs_dim, raw (unnormalized)
  std::vector<float> actions;  // n x action_dim
  std::vector<float> logp;     // n
  std::vector<float> r_dense;  // n
  std::vector<float> r_sparse;
  std::vector<float> v_dense;  // critic values at collection time
  std::vector<float> v_sparse;
  std::vector<std::uint8_t> terminal;  // 1 on the final transition of an episode
  std::vector<EpisodeMeta> episodes;

  int size() const { return static_cast<int>(logp.size()); }
};

enum class RewardHead { kDense, kSparse };

struct GaeResult {
  std::vector<float> advantages;
  std::vector<float> returns;
};

/// Generalized advantage estimation backward recursion with bootstrap value
/// zero at terminals. Terminal flags mark the last transition of an episode.
template <typename T>
void gae_core(const T* rewards, const T* values, const std::uint8_t* terminal, int n, T gamma,
              T lam, T* adv_out, T* ret_out) {
  T last = T(0);
  for (int t = n - 1; t >= 0; --t) {
    T nonterm = (terminal[t] || t == n - 1) ? T(0) : T(1);
    T next_v = nonterm == T(0) ? T(0) : values[t + 1];
    T delta = rewards[t] + gamma * next_v - values[t];
    last = delta + gamma * lam * nonterm * last;
    adv_out[t] = last;
    ret_out[t] = last + values[t];
  }
}

GaeResult gae(const RolloutBatch& batch, double gamma, double lam, RewardHead head);

// ---------------------------------------------------------------------------
// Clipped-surrogate update.
// ---------------------------------------------------------------------------

struct PpoHyper {
  double clip = 0.2;
  int epochs = 4;
  int minibatch = 1024;
  double lr = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  double gamma = 0.99;
  double lam = 0.95;
};

/// One minibatch as seen by the loss: observations already normalized,
/// advantages already combined across heads.
template <typename T>
struct PpoBatchView {
  const T* obs = nullptr;      // n x obs_dim
  const T* actions = nullptr;  // n x action_dim
  const T* logp_old = nullptr;
  const T* adv = nullptr;
  const T* ret_d = nullptr;
  const T* ret_s = nullptr;
  int n = 0;
};

template <typename T>
struct PpoLossResult {
  T pg_loss = T(0);
  T value_loss = T(0);  // summed over both heads, halved
  T entropy = T(0);
  T kl = T(0);  // mean(ratio - 1 - log ratio)
  T total = T(0);
  MlpGrads<T> actor_grads;
  std::vector<T> log_std_grads;
  MlpGrads<T> critic_grads;
  bool finite = true;
};

/// Total objective: pg_loss - entropy_coef * entropy + value_coef * value_loss.
template <typename T>
T ppo_objective(const Mlp<T>& actor, const std::vector<T>& log_std, const Mlp<T>& critic,
                const PpoBatchView<T>& view, T clip, T value_coef, T entropy_coef);

/// Objective plus analytic gradients of every parameter.
template <typename T>
PpoLossResult<T> ppo_loss_and_grads(const Mlp<T>& actor, const std::vector<T>& log_std,
                                    const Mlp<T>& critic, const PpoBatchView<T>& view, T clip,
                                    T value_coef, T entropy_coef);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double grad_norm_actor = 0.0;
  double grad_norm_critic = 0.0;
  int minibatches = 0;
  bool aborted = false;  // non-finite loss; parameters restored
};

/// Runs the clipped-surrogate epochs over the batch: GAE per head, per-head
/// advantage normalization, minibatch shuffling from `shuffle_rng`, Adam
/// steps. On a non-finite loss the update is aborted and parameters restored.
PpoStats ppo_update(Agent& agent, AdamState<float>& adam, const RolloutBatch& batch,
                    const PpoHyper& hyper, Rng& shuffle_rng);

}  // namespace graspcritic
