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

#include "graspcritic/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace graspcritic {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_tensor(std::ofstream& out, const std::string& name, const float* data, size_t n) {
  out << "tensor " << name << ' ' << n << '\n';
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  out << '\n';
}

struct TensorBlob {
  std::string name;
  std::vector<float> data;
};

}  // namespace

void save_checkpoint(const std::string& path, Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);

  const CheckpointMeta& m = ck.meta;
  out << "graspcritic-checkpoint v" << m.version << '\n';
  out << "config_hash " << hex64(m.config_hash) << '\n';
  out << "obs_dim " << m.obs_dim << '\n';
  out << "action_dim " << m.action_dim << '\n';
  out << "n_fingers " << m.n_fingers << '\n';
  out << "actor_hidden";
  for (int h : m.actor_hidden) out << ' ' << h;
  out << '\n';
  out << "critic_hidden";
  for (int h : m.critic_hidden) out << ' ' << h;
  out << '\n';
  out << "gamma " << fmt_double(m.gamma) << '\n';
  out << "iteration " << m.iteration << '\n';
  out << "env_steps " << m.env_steps << '\n';
  out << "adam_t " << ck.adam.t << '\n';
  out << "norm_count " << ck.agent.norm.count << '\n';
  out << "norm_mean";
  for (double v : ck.agent.norm.mean) out << ' ' << fmt_double(v);
  out << '\n';
  out << "norm_m2";
  for (double v : ck.agent.norm.m2) out << ' ' << fmt_double(v);
  out << '\n';

  std::vector<TensorRef<float>> params = ck.agent.tensors();
  bool with_adam = !ck.adam.m.empty();
  size_t count = params.size() * (with_adam ? 3 : 1);
  out << "tensors " << count << '\n';
  for (const auto& p : params) write_tensor(out, p.name, p.data, p.size);
  if (with_adam) {
    for (size_t i = 0; i < params.size(); ++i) {
      write_tensor(out, "adam.m." + params[i].name, ck.adam.m[i].data(), ck.adam.m[i].size());
    }
    for (size_t i = 0; i < params.size(); ++i) {
      write_tensor(out, "adam.v." + params[i].name, ck.adam.v[i].data(), ck.adam.v[i].size());
    }
  }
  out << "end\n";
  if (!out) throw Error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointFormatError("cannot open checkpoint: " + path);

  std::string line;
  if (!std::getline(in, line)) throw CheckpointFormatError("empty checkpoint: " + path);
  if (line != "graspcritic-checkpoint v1") {
    throw CheckpointFormatError("checkpoint version mismatch (expected v" +
                                std::to_string(kCheckpointVersion) + "): '" + line + "'");
  }

  Checkpoint ck;
  CheckpointMeta& m = ck.meta;
  std::int64_t adam_t = 0;
  std::int64_t norm_count = 0;
  std::vector<double> norm_mean, norm_m2;
  size_t tensor_count = 0;

  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "config_hash") {
      std::string hexv;
      ss >> hexv;
      m.config_hash = std::stoull(hexv, nullptr, 16);
    } else if (key == "obs_dim") {
      ss >> m.obs_dim;
    } else if (key == "action_dim") {
      ss >> m.action_dim;
    } else if (key == "n_fingers") {
      ss >> m.n_fingers;
    } else if (key == "actor_hidden") {
      int h;
      while (ss >> h) m.actor_hidden.push_back(h);
    } else if (key == "critic_hidden") {
      int h;
      while (ss >> h) m.critic_hidden.push_back(h);
    } else if (key == "gamma") {
      ss >> m.gamma;
    } else if (key == "iteration") {
      ss >> m.iteration;
    } else if (key == "env_steps") {
      ss >> m.env_steps;
    } else if (key == "adam_t") {
      ss >> adam_t;
    } else if (key == "norm_count") {
      ss >> norm_count;
    } else if (key == "norm_mean") {
      double v;
      while (ss >> v) norm_mean.push_back(v);
    } else if (key == "norm_m2") {
      double v;
      while (ss >> v) norm_m2.push_back(v);
    } else if (key == "tensors") {
      ss >> tensor_count;
      break;
    } else {
      throw CheckpointFormatError("unknown checkpoint header line: '" + line + "'");
    }
  }
  if (m.obs_dim <= 0 || m.action_dim <= 0) {
    throw CheckpointFormatError("checkpoint header missing dimensions: " + path);
  }

  ck.agent = Agent::init(m.obs_dim, m.action_dim, m.actor_hidden, m.critic_hidden, 0);
  ck.agent.norm.count = norm_count;
  if (static_cast<int>(norm_mean.size()) != m.obs_dim ||
      static_cast<int>(norm_m2.size()) != m.obs_dim) {
    throw CheckpointFormatError("normalization stats have wrong dimension: " + path);
  }
  ck.agent.norm.mean = norm_mean;
  ck.agent.norm.m2 = norm_m2;

  std::vector<TensorRef<float>> params = ck.agent.tensors();
  ck.adam.init(params);
  ck.adam.t = adam_t;

  auto find_target = [&](const std::string& name) -> TensorRef<float> {
    for (auto& p : params) {
      if (p.name == name) return p;
    }
    for (size_t i = 0; i < params.size(); ++i) {
      if (name == "adam.m." + params[i].name) {
        return {name, ck.adam.m[i].data(), ck.adam.m[i].size()};
      }
      if (name == "adam.v." + params[i].name) {
        return {name, ck.adam.v[i].data(), ck.adam.v[i].size()};
      }
    }
    throw CheckpointFormatError("unexpected tensor '" + name + "' in " + path);
  };

  bool saw_adam = false;
  for (size_t t = 0; t < tensor_count; ++t) {
    if (!std::getline(in, line)) throw CheckpointFormatError("truncated tensor list: " + path);
    std::istringstream ss(line);
    std::string tag, name;
    size_t n = 0;
    ss >> tag >> name >> n;
    if (tag != "tensor") throw CheckpointFormatError("expected tensor line, got: '" + line + "'");
    TensorRef<float> target = find_target(name);
    if (target.size != n) {
      throw CheckpointFormatError("tensor '" + name + "' has size " + std::to_string(n) +
                                  ", expected " + std::to_string(target.size));
    }
    in.read(reinterpret_cast<char*>(target.data), static_cast<std::streamsize>(n * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
      throw CheckpointFormatError("truncated tensor data for '" + name + "'");
    }
    char nl = 0;
    in.read(&nl, 1);
    if (nl != '\n') throw CheckpointFormatError("missing tensor terminator for '" + name + "'");
    if (name.rfind("adam.", 0) == 0) saw_adam = true;
  }
  if (!std::getline(in, line) || line != "end") {
    throw CheckpointFormatError("missing end marker: " + path);
  }
  if (!saw_adam) ck.adam = AdamState<float>{};
  return ck;
}

}  // namespace graspcritic
