// Copyright 2026 The floorloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reference implementations used as test oracles. They are written for
// clarity, not speed, and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "floorloc/encoder.hpp"
#include "floorloc/graph.hpp"
#include "floorloc/map_db.hpp"

namespace oracle {

inline Eigen::MatrixXd pairwise_distances(const floorloc::FloorGraph& g) {
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size();
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dm = double(nodes[i].m) - double(nodes[j].m);
      const double dn = double(nodes[i].n) - double(nodes[j].n);
      a(i, j) = std::sqrt(dm * dm + dn * dn) * g.distance_scale();
    }
  }
  return a;
}

/// D^-1/2 (A + I) D^-1/2 with explicit diagonal matrices.
inline Eigen::MatrixXd normalized(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd at = a + Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = 1.0 / std::sqrt(at.row(i).sum());
  return d * at * d;
}

struct Activations {
  Eigen::MatrixXd z0, z1;
  Eigen::VectorXd e;
};

/// Loop-based forward pass of the encoder.
inline Activations forward(const floorloc::EncoderParams& p,
                           const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  auto relu = [](Eigen::MatrixXd m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::max(0.0, m.data()[i]);
    return m;
  };
  Activations out;
  out.z0 = a * x * p.w0();
  const Eigen::MatrixXd h1 = relu(out.z0);
  out.z1 = a * h1 * p.w1();
  const Eigen::MatrixXd h2 = relu(out.z1);
  const Eigen::MatrixXd h3 = a * h2 * p.w2();
  out.e = Eigen::VectorXd::Zero(h3.cols());
  for (Eigen::Index i = 0; i < h3.rows(); ++i) {
    const double mx = h3.row(i).maxCoeff();
    Eigen::VectorXd f(h3.cols());
    double sum = 0.0;
    for (Eigen::Index k = 0; k < h3.cols(); ++k) sum += f(k) = std::exp(h3(i, k) - mx);
    f /= sum;
    const double alpha = 1.0 / (1.0 + std::exp(-(f.dot(p.gate()) + p.bias())));
    out.e += alpha * f;
  }
  return out;
}

/// Central differences of `loss` with respect to every parameter entry,
/// in EncoderParams::blocks() order.
template <typename Loss>
std::vector<std::vector<double>> numeric_gradient(floorloc::EncoderParams params,
                                                  Loss loss, double step) {
  std::vector<std::vector<double>> out;
  auto blocks = params.blocks();
  for (auto& block : blocks) {
    std::vector<double> g(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
      const double orig = block[i];
      block[i] = orig + step;
      const double up = loss(params);
      block[i] = orig - step;
      const double down = loss(params);
      block[i] = orig;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Worst entry-wise relative error with an absolute floor for tiny values.
inline double max_relative_error(const std::vector<std::span<const double>>& analytic,
                                 const std::vector<std::vector<double>>& numeric,
                                 double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t b = 0; b < analytic.size(); ++b) {
    for (std::size_t i = 0; i < analytic[b].size(); ++i) {
      const double a = analytic[b][i];
      const double n = numeric[b][i];
      const double scale = std::max({std::abs(a), std::abs(n), floor});
      worst = std::max(worst, std::abs(a - n) / scale);
    }
  }
  return worst;
}

/// Density connectivity by brute force: core points, connected components
/// of cores over eps-edges numbered by their smallest core index, border
/// points assigned the smallest adjacent cluster number.
inline std::vector<int> dbscan(const std::vector<Eigen::Vector2d>& pts, double eps,
                               std::size_t min_pts) {
  const std::size_t n = pts.size();
  auto close = [&](std::size_t i, std::size_t j) {
    return (pts[i] - pts[j]).squaredNorm() <= eps * eps;
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) count += close(i, j);
    core[i] = count >= min_pts;
  }
  // Union-find over core points.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (core[i] && core[j] && close(i, j)) {
        const std::size_t a = find(i), b = find(j);
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> root_label(n, -1);
  std::vector<int> labels(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    labels[i] = root_label[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && close(i, j) && (best < 0 || labels[j] < best)) best = labels[j];
    }
    labels[i] = best;
  }
  return labels;
}

/// Full sort of every record by (distance, view id).
inline std::vector<std::pair<floorloc::ViewId, double>> knn(
    const floorloc::MapDatabase& db, const Eigen::VectorXd& q, std::size_t n) {
  std::vector<std::pair<floorloc::ViewId, double>> all;
  for (const auto& r : db.records()) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      const double d = r.embedding.values(k) - q(k);
      s += d * d;
    }
    all.emplace_back(r.view_id, std::sqrt(s));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  all.resize(std::min(n, all.size()));
  return all;
}

}  // namespace oracle
