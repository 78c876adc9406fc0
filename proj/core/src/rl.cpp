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

#include "graspcritic/rl.hpp"

#include <algorithm>
#include <numeric>

namespace graspcritic {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 * pi)

template <typename T>
T clamp_log_std(T v) {
  return std::clamp(v, static_cast<T>(kLogStdMin), static_cast<T>(kLogStdMax));
}

}  // namespace

void RunningNorm::normalize(const float* in, float* out, int n_rows) const {
  int d = dim();
  bool identity = count < 2;
  for (int r = 0; r < n_rows; ++r) {
    const float* x = in + static_cast<size_t>(r) * d;
    float* y = out + static_cast<size_t>(r) * d;
    for (int i = 0; i < d; ++i) {
      double v = x[i];
      if (!identity) {
        double var = m2[i] / count;
        v = (v - mean[i]) / std::sqrt(var + 1e-8);
      }
      y[i] = static_cast<float>(std::clamp(v, -10.0, 10.0));
    }
  }
}

Agent Agent::init(int obs_dim, int action_dim, const std::vector<int>& actor_hidden,
                  const std::vector<int>& critic_hidden, std::uint64_t seed) {
  Agent agent;
  Rng rng(derive_seed(seed, 0x0a));
  std::vector<int> asz{obs_dim};
  asz.insert(asz.end(), actor_hidden.begin(), actor_hidden.end());
  asz.push_back(action_dim);
  agent.actor = mlp_init<float>(asz, rng, 0.01);  // small final layer, near-zero initial means
  agent.log_std.assign(action_dim, -0.5f);

  Rng rng_c(derive_seed(seed, 0x0c));
  std::vector<int> csz{obs_dim};
  csz.insert(csz.end(), critic_hidden.begin(), critic_hidden.end());
  csz.push_back(2);
  agent.critic = mlp_init<float>(csz, rng_c, 0.0);  // zero head: fresh critics output (0, 0)

  agent.norm.init(obs_dim);
  return agent;
}

std::vector<TensorRef<float>> Agent::tensors() {
  std::vector<TensorRef<float>> out = actor.tensors("actor");
  out.push_back({"actor.log_std", log_std.data(), log_std.size()});
  std::vector<TensorRef<float>> crit = critic.tensors("critic");
  out.insert(out.end(), crit.begin(), crit.end());
  return out;
}

double gaussian_log_prob(const std::vector<float>& mean, const std::vector<float>& log_std,
                         const std::vector<float>& action) {
  double lp = 0.0;
  for (size_t i = 0; i < mean.size(); ++i) {
    double ls = log_std[i];
    double z = (action[i] - mean[i]) / std::exp(ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
  }
  return lp;
}

void actor_mean_batch(const Agent& agent, const float* raw_obs, int n, float* means_out) {
  std::vector<float> norm(static_cast<size_t>(n) * agent.obs_dim());
  agent.norm.normalize(raw_obs, norm.data(), n);
  mlp_forward(agent.actor, norm.data(), n, means_out);
}

PolicyOutput policy_sample_from_mean(const Agent& agent, const float* mean_row, Rng& rng) {
  int a = agent.action_dim();
  PolicyOutput out;
  out.mean.assign(mean_row, mean_row + a);
  out.log_std.resize(a);
  out.action.resize(a);
  for (int i = 0; i < a; ++i) {
    float ls = static_cast<float>(clamp_log_std(static_cast<double>(agent.log_std[i])));
    out.log_std[i] = ls;
    out.action[i] = out.mean[i] + std::exp(ls) * static_cast<float>(rng.normal());
  }
  out.log_prob = static_cast<float>(gaussian_log_prob(out.mean, out.log_std, out.action));
  return out;
}

PolicyOutput policy_sample(const Agent& agent, const float* raw_obs, Rng& rng) {
  std::vector<float> mean(agent.action_dim());
  actor_mean_batch(agent, raw_obs, 1, mean.data());
  return policy_sample_from_mean(agent, mean.data(), rng);
}

std::vector<CriticOutput> critic_eval(const Agent& agent, const float* raw_obs, int n) {
  std::vector<float> norm(static_cast<size_t>(n) * agent.obs_dim());
  agent.norm.normalize(raw_obs, norm.data(), n);
  std::vector<float> v(static_cast<size_t>(n) * 2);
  mlp_forward(agent.critic, norm.data(), n, v.data());
  std::vector<CriticOutput> out(n);
  for (int i = 0; i < n; ++i) out[i] = {v[2 * i], v[2 * i + 1]};
  return out;
}

GaeResult gae(const RolloutBatch& batch, double gamma, double lam, RewardHead head) {
  if (!(gamma >= 0.0 && gamma <= 1.0 && lam >= 0.0 && lam <= 1.0)) {
    throw ContractViolationError("gae: gamma and lam must lie in [0, 1]");
  }
  int n = batch.size();
  const std::vector<float>& r = head == RewardHead::kDense ? batch.r_dense : batch.r_sparse;
  const std::vector<float>& v = head == RewardHead::kDense ? batch.v_dense : batch.v_sparse;
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  if (n == 0) return out;
  gae_core<float>(r.data(), v.data(), batch.terminal.data(), n, static_cast<float>(gamma),
                  static_cast<float>(lam), out.advantages.data(), out.returns.data());
  return out;
}

// ---------------------------------------------------------------------------
// Clipped-surrogate loss.
// ---------------------------------------------------------------------------

namespace {

template <typename T>
struct PpoForward {
  Mat<T> mean;   // n x A
  Mat<T> value;  // n x 2
  std::vector<T> logp;
  std::vector<T> ratio;
  T pg_loss = T(0);
  T value_loss = T(0);
  T entropy = T(0);
  T kl = T(0);
  T total = T(0);
};

template <typename T>
PpoForward<T> ppo_forward(const Mlp<T>& actor, const std::vector<T>& log_std, const Mlp<T>& critic,
                          const PpoBatchView<T>& view, T clip, T value_coef, T entropy_coef,
                          MlpCache<T>* actor_cache, MlpCache<T>* critic_cache) {
  int n = view.n;
  int adim = actor.out_dim();
  PpoForward<T> f;
  f.mean = Mat<T>(n, adim);
  f.value = Mat<T>(n, 2);
  mlp_forward(actor, view.obs, n, f.mean.a.data(), actor_cache);
  mlp_forward(critic, view.obs, n, f.value.a.data(), critic_cache);

  f.logp.resize(n);
  f.ratio.resize(n);
  T pg = T(0), kl = T(0), vloss = T(0);
  for (int i = 0; i < n; ++i) {
    const T* mu = f.mean.row(i);
    const T* act = view.actions + static_cast<size_t>(i) * adim;
    T lp = T(0);
    for (int j = 0; j < adim; ++j) {
      T ls = clamp_log_std(log_std[j]);
      T z = (act[j] - mu[j]) / std::exp(ls);
      lp += T(-0.5) * z * z - ls - static_cast<T>(kHalfLog2Pi);
    }
    f.logp[i] = lp;
    T logratio = lp - view.logp_old[i];
    T ratio = std::exp(logratio);
    f.ratio[i] = ratio;
    T a = view.adv[i];
    T l1 = ratio * a;
    T l2 = std::clamp(ratio, T(1) - clip, T(1) + clip) * a;
    pg += -std::min(l1, l2);
    kl += (ratio - T(1)) - logratio;

    T dd = f.value.row(i)[0] - view.ret_d[i];
    T ds = f.value.row(i)[1] - view.ret_s[i];
    vloss += dd * dd + ds * ds;
  }
  f.pg_loss = pg / n;
  f.kl = kl / n;
  f.value_loss = T(0.5) * vloss / n;
  T ent = T(0);
  for (int j = 0; j < adim; ++j) {
    ent += clamp_log_std(log_std[j]) + T(0.5) + static_cast<T>(kHalfLog2Pi);
  }
  f.entropy = ent;
  f.total = f.pg_loss - entropy_coef * f.entropy + value_coef * f.value_loss;
  return f;
}

}  // namespace

template <typename T>
T ppo_objective(const Mlp<T>& actor, const std::vector<T>& log_std, const Mlp<T>& critic,
                const PpoBatchView<T>& view, T clip, T value_coef, T entropy_coef) {
  return ppo_forward(actor, log_std, critic, view, clip, value_coef, entropy_coef,
                     static_cast<MlpCache<T>*>(nullptr), static_cast<MlpCache<T>*>(nullptr))
      .total;
}

template <typename T>
PpoLossResult<T> ppo_loss_and_grads(const Mlp<T>& actor, const std::vector<T>& log_std,
                                    const Mlp<T>& critic, const PpoBatchView<T>& view, T clip,
                                    T value_coef, T entropy_coef) {
  int n = view.n;
  int adim = actor.out_dim();
  MlpCache<T> actor_cache, critic_cache;
  PpoForward<T> f = ppo_forward(actor, log_std, critic, view, clip, value_coef, entropy_coef,
                                &actor_cache, &critic_cache);

  PpoLossResult<T> res;
  res.pg_loss = f.pg_loss;
  res.value_loss = f.value_loss;
  res.entropy = f.entropy;
  res.kl = f.kl;
  res.total = f.total;
  res.actor_grads = MlpGrads<T>::zeros_like(actor);
  res.critic_grads = MlpGrads<T>::zeros_like(critic);
  res.log_std_grads.assign(adim, T(0));
  res.finite = std::isfinite(static_cast<double>(f.total));
  if (!res.finite) return res;

  // Surrogate gradient. The clipped branch is active only when the ratio sits
  // outside the clip interval, where its derivative vanishes.
  Mat<T> dmean(n, adim);
  for (int i = 0; i < n; ++i) {
    T a = view.adv[i];
    T ratio = f.ratio[i];
    T l1 = ratio * a;
    T l2 = std::clamp(ratio, T(1) - clip, T(1) + clip) * a;
    T dlogp = (l1 <= l2) ? -a * ratio / n : T(0);
    if (dlogp == T(0)) continue;
    const T* mu = f.mean.row(i);
    const T* act = view.actions + static_cast<size_t>(i) * adim;
    T* dm = dmean.row(i);
    for (int j = 0; j < adim; ++j) {
      T ls = clamp_log_std(log_std[j]);
      T inv_var = std::exp(T(-2) * ls);
      T diff = act[j] - mu[j];
      // d logp / d mean_j and d logp / d log_std_j.
      dm[j] = dlogp * (diff * inv_var);
      if (log_std[j] > static_cast<T>(kLogStdMin) && log_std[j] < static_cast<T>(kLogStdMax)) {
        res.log_std_grads[j] += dlogp * (diff * diff * inv_var - T(1));
      }
    }
  }
  mlp_backward(actor, actor_cache, dmean, res.actor_grads);

  // Entropy term: d entropy / d log_std_j = 1 inside the clamp.
  for (int j = 0; j < adim; ++j) {
    if (log_std[j] > static_cast<T>(kLogStdMin) && log_std[j] < static_cast<T>(kLogStdMax)) {
      res.log_std_grads[j] -= entropy_coef;
    }
  }

  // Value loss, both heads trained jointly.
  Mat<T> dvalue(n, 2);
  for (int i = 0; i < n; ++i) {
    dvalue.row(i)[0] = value_coef * (f.value.row(i)[0] - view.ret_d[i]) / n;
    dvalue.row(i)[1] = value_coef * (f.value.row(i)[1] - view.ret_s[i]) / n;
  }
  mlp_backward(critic, critic_cache, dvalue, res.critic_grads);
  return res;
}

template float ppo_objective<float>(const Mlp<float>&, const std::vector<float>&,
                                    const Mlp<float>&, const PpoBatchView<float>&, float, float,
                                    float);
template double ppo_objective<double>(const Mlp<double>&, const std::vector<double>&,
                                      const Mlp<double>&, const PpoBatchView<double>&, double,
                                      double, double);
template PpoLossResult<float> ppo_loss_and_grads<float>(const Mlp<float>&,
                                                        const std::vector<float>&,
                                                        const Mlp<float>&,
                                                        const PpoBatchView<float>&, float, float,
                                                        float);
template PpoLossResult<double> ppo_loss_and_grads<double>(const Mlp<double>&,
                                                          const std::vector<double>&,
                                                          const Mlp<double>&,
                                                          const PpoBatchView<double>&, double,
                                                          double, double);

namespace {

void normalize_advantages(std::vector<float>& adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (float a : adv) mean += a;
  mean /= adv.size();
  double var = 0.0;
  for (float a : adv) var += (a - mean) * (a - mean);
  var /= adv.size();
  double denom = std::sqrt(var) + 1e-8;
  for (float& a : adv) a = static_cast<float>((a - mean) / denom);
}

double grad_norm(const std::vector<TensorRef<float>>& grads) {
  double s = 0.0;
  for (const auto& g : grads) {
    for (size_t i = 0; i < g.size; ++i) s += static_cast<double>(g.data[i]) * g.data[i];
  }
  return std::sqrt(s);
}

}  // namespace

PpoStats ppo_update(Agent& agent, AdamState<float>& adam, const RolloutBatch& batch,
                    const PpoHyper& hyper, Rng& shuffle_rng) {
  PpoStats stats;
  int n = batch.size();
  if (n == 0) return stats;
  int obs_dim = batch.obs_dim;
  int adim = batch.action_dim;

  std::vector<float> obs_norm(static_cast<size_t>(n) * obs_dim);
  agent.norm.normalize(batch.obs.data(), obs_norm.data(), n);

  GaeResult dense = gae(batch, hyper.gamma, hyper.lam, RewardHead::kDense);
  GaeResult sparse = gae(batch, hyper.gamma, hyper.lam, RewardHead::kSparse);
  normalize_advantages(dense.advantages);
  normalize_advantages(sparse.advantages);
  std::vector<float> adv(n);
  for (int i = 0; i < n; ++i) adv[i] = dense.advantages[i] + sparse.advantages[i];

  // Snapshot for the non-finite abort path.
  std::vector<TensorRef<float>> params = agent.tensors();
  std::vector<std::vector<float>> snapshot;
  snapshot.reserve(params.size());
  for (const auto& p : params) snapshot.emplace_back(p.data, p.data + p.size);

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  AdamConfig adam_cfg;
  adam_cfg.lr = hyper.lr;

  double sum_pg = 0.0, sum_v = 0.0, sum_ent = 0.0, sum_kl = 0.0;
  double sum_gna = 0.0, sum_gnc = 0.0;
  int mbs = 0;

  std::vector<float> mb_obs, mb_act, mb_logp, mb_adv, mb_retd, mb_rets;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    // Fisher-Yates from the deterministic stream.
    for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[shuffle_rng.uniform_int(i + 1)]);
    for (int start = 0; start < n; start += hyper.minibatch) {
      int m = std::min(hyper.minibatch, n - start);
      mb_obs.resize(static_cast<size_t>(m) * obs_dim);
      mb_act.resize(static_cast<size_t>(m) * adim);
      mb_logp.resize(m);
      mb_adv.resize(m);
      mb_retd.resize(m);
      mb_rets.resize(m);
      for (int r = 0; r < m; ++r) {
        int src = idx[start + r];
        std::copy_n(obs_norm.data() + static_cast<size_t>(src) * obs_dim, obs_dim,
                    mb_obs.data() + static_cast<size_t>(r) * obs_dim);
        std::copy_n(batch.actions.data() + static_cast<size_t>(src) * adim, adim,
                    mb_act.data() + static_cast<size_t>(r) * adim);
        mb_logp[r] = batch.logp[src];
        mb_adv[r] = adv[src];
        mb_retd[r] = dense.returns[src];
        mb_rets[r] = sparse.returns[src];
      }
      PpoBatchView<float> view{mb_obs.data(), mb_act.data(), mb_logp.data(),
                               mb_adv.data(), mb_retd.data(), mb_rets.data(), m};
      PpoLossResult<float> loss = ppo_loss_and_grads<float>(
          agent.actor, agent.log_std, agent.critic, view, static_cast<float>(hyper.clip),
          static_cast<float>(hyper.value_coef), static_cast<float>(hyper.entropy_coef));
      if (!loss.finite) {
        for (size_t i = 0; i < params.size(); ++i) {
          std::copy(snapshot[i].begin(), snapshot[i].end(), params[i].data);
        }
        stats.aborted = true;
        return stats;
      }

      std::vector<TensorRef<float>> grads = loss.actor_grads.tensors("actor");
      grads.push_back({"actor.log_std", loss.log_std_grads.data(), loss.log_std_grads.size()});
      std::vector<TensorRef<float>> cg = loss.critic_grads.tensors("critic");
      grads.insert(grads.end(), cg.begin(), cg.end());

      sum_pg += loss.pg_loss;
      sum_v += loss.value_loss;
      sum_ent += loss.entropy;
      sum_kl += loss.kl;
      size_t actor_tensors = grads.size() - cg.size();
      sum_gna += grad_norm({grads.begin(), grads.begin() + actor_tensors});
      sum_gnc += grad_norm({grads.begin() + actor_tensors, grads.end()});
      mbs += 1;

      adam_step(params, grads, adam, adam_cfg);
    }
  }

  stats.policy_loss = sum_pg / mbs;
  stats.value_loss = sum_v / mbs;
  stats.entropy = sum_ent / mbs;
  stats.kl = sum_kl / mbs;
  stats.grad_norm_actor = sum_gna / mbs;
  stats.grad_norm_critic = sum_gnc / mbs;
  stats.minibatches = mbs;
  return stats;
}

}  // namespace graspcritic
