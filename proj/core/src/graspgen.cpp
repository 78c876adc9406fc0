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

#include "graspcritic/graspgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace graspcritic {

double nominal_mu(const EnvConfig& config) { return 0.5 * (config.mu_min + config.mu_max); }

double wrench_rho(const ObjectShape& shape, const EnvConfig& config) {
  return config.rho > 0.0 ? config.rho : shape.mean_vertex_radius();
}

double grasp_epsilon(const ObjectShape& shape, const EnvConfig& config, const Grasp& grasp) {
  double mu = nominal_mu(config);
  std::vector<Contact> contacts;
  contacts.reserve(grasp.contact_s.size());
  for (double s : grasp.contact_s) contacts.push_back(Contact::at(shape, s, mu));
  return epsilon_quality(contact_wrenches(shape, contacts, wrench_rho(shape, config)));
}

GraspSampleResult sample_candidates(const ObjectShape& shape, double object_angle, int k,
                                    std::uint64_t seed, const EnvConfig& config) {
  if (k < 1) throw ContractViolationError("sample_candidates: k must be >= 1");
  config.validate();

  double p = shape.perimeter();
  double half = config.arc_half_width(p);
  double kappa = p / kTwoPi;
  double min_dist = kContactDistinctFrac * p;
  int n = config.n_fingers;

  Rng rng(seed);
  GraspSampleResult result;
  result.grasps.reserve(k);

  for (int g = 0; g < k; ++g) {
    bool ok = false;
    std::vector<double> contact(n);
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      for (int i = 0; i < n; ++i) {
        double u = wrap_pos(config.arc_center(i, p) + rng.uniform(-half, half), p);
        contact[i] = wrap_pos(u - kappa * object_angle, p);
      }
      ok = true;
      for (int i = 0; i < n && ok; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (circ_dist(contact[i], contact[j], p) <= min_dist) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) {
      result.shortfall += 1;
      continue;
    }
    Grasp grasp;
    grasp.id = static_cast<int>(result.grasps.size());
    grasp.contact_s = contact;
    grasp.base_angle = 0.0;
    grasp.initial_object_angle = wrap_angle(object_angle);
    grasp.epsilon = grasp_epsilon(shape, config, grasp);
    result.grasps.push_back(std::move(grasp));
  }
  return result;
}

double default_stability_threshold(const std::vector<Grasp>& grasps) {
  double best = 0.0;
  for (const Grasp& g : grasps) best = std::max(best, g.epsilon);
  // Stable means force closure at minimum; an all-zero batch filters empty.
  return std::max(0.05 * best, 1e-12);
}

std::vector<Grasp> filter_stable(const std::vector<Grasp>& grasps, double epsilon_min) {
  std::vector<Grasp> out;
  out.reserve(grasps.size());
  for (const Grasp& g : grasps) {
    if (g.epsilon >= epsilon_min) out.push_back(g);
  }
  if (out.empty()) throw EmptyCandidateSetError("no grasp passed the stability filter");
  return out;
}

std::vector<double> enumerate_base_rotations(double limit, double step) {
  if (!(step > 0.0) || step > limit + 1e-12) {
    throw ContractViolationError("enumerate_base_rotations: need 0 < step <= limit");
  }
  int m = static_cast<int>(std::floor(limit / step + 1e-9));
  std::vector<double> out;
  out.reserve(2 * m + 1);
  for (int i = -m; i <= m; ++i) out.push_back(i * step);
  return out;
}

std::vector<double> base_rotation_grid(double limit, int n) {
  if (n < 1) throw ContractViolationError("base_rotation_grid: n must be >= 1");
  if (n == 1) return {0.0};
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(-limit + 2.0 * limit * i / (n - 1));
  return out;
}

void save_grasps_csv(const std::string& path, const std::vector<Grasp>& grasps, int n_fingers,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open grasp file for writing: " + path);
  out << "# graspcritic grasps v1\n";
  out << "# config_hash=" << hex64(config_hash) << "\n";
  out << "id,object_angle,base_angle,epsilon";
  for (int i = 0; i < n_fingers; ++i) out << ",s" << i;
  out << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (const Grasp& g : grasps) {
    out << g.id << ',';
    put(g.initial_object_angle);
    out << ',';
    put(g.base_angle);
    out << ',';
    put(g.epsilon);
    for (double s : g.contact_s) {
      out << ',';
      put(s);
    }
    out << '\n';
  }
}

std::vector<Grasp> load_grasps_csv(const std::string& path, int n_fingers) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grasp file: " + path);
  std::vector<Grasp> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != 4 + n_fingers) {
      throw Error("grasp file row has wrong column count: " + path);
    }
    Grasp g;
    g.id = std::stoi(cells[0]);
    g.initial_object_angle = std::stod(cells[1]);
    g.base_angle = std::stod(cells[2]);
    g.epsilon = std::stod(cells[3]);
    for (int i = 0; i < n_fingers; ++i) g.contact_s.push_back(std::stod(cells[4 + i]));
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace graspcritic
