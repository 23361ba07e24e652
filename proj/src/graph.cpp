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

#include "floorloc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "floorloc/errors.hpp"

namespace floorloc {

FloorGraph::FloorGraph(ViewId view_id, std::vector<Keypoint> nodes,
                       double distance_scale)
    : view_id_(view_id), nodes_(std::move(nodes)),
      distance_scale_(distance_scale) {
  if (nodes_.empty()) {
    throw EmptyView("view " + to_string(view_id_) + " has no keypoints");
  }
  if (!(distance_scale_ > 0.0) || !std::isfinite(distance_scale_)) {
    throw PreconditionError("distance scale must be positive and finite");
  }
}

Eigen::MatrixXd FloorGraph::adjacency() const {
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mi = nodes_[i].m;
    const double ni = nodes_[i].n;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dm = mi - nodes_[j].m;
      const double dn = ni - nodes_[j].n;
      const double w = distance_scale_ * std::sqrt(dm * dm + dn * dn);
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

FloorGraph build_graph(std::span<const Keypoint> keypoints,
                       std::size_t node_count, ViewId view_id,
                       double distance_scale) {
  if (keypoints.empty()) {
    throw EmptyView("view " + to_string(view_id) + " has no keypoints");
  }
  if (node_count == 0) {
    throw PreconditionError("node_count must be at least 1");
  }
  std::vector<std::size_t> order(keypoints.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto stronger = [&](std::size_t a, std::size_t b) {
    const Keypoint& ka = keypoints[a];
    const Keypoint& kb = keypoints[b];
    if (ka.response != kb.response) return ka.response > kb.response;
    return std::tie(ka.m, ka.n) < std::tie(kb.m, kb.n);
  };
  const std::size_t keep = std::min(node_count, keypoints.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), stronger);

  std::vector<Keypoint> nodes;
  nodes.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) nodes.push_back(keypoints[order[i]]);
  return FloorGraph(view_id, std::move(nodes), distance_scale);
}

NormalizedAdjacency normalize_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() == 0) {
    throw ShapeError("adjacency must be a non-empty square matrix");
  }
  const Eigen::Index n = adjacency.rows();
  Eigen::MatrixXd tilde = adjacency;
  tilde.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt_degree =
      tilde.rowwise().sum().array().rsqrt().matrix();
  NormalizedAdjacency out;
  out.matrix.resize(n, n);
  // Fill the upper triangle and mirror it so the result is exactly symmetric.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = inv_sqrt_degree[i] * tilde(i, j) * inv_sqrt_degree[j];
      out.matrix(i, j) = v;
      out.matrix(j, i) = v;
    }
  }
  return out;
}

NormalizedAdjacency normalize_adjacency(const FloorGraph& graph) {
  return normalize_adjacency(graph.adjacency());
}

Eigen::MatrixXd feature_matrix(const FloorGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kDescriptorSize));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Descriptor& d = graph.nodes()[i].descriptor;
    for (std::size_t k = 0; k < kDescriptorSize; ++k) {
      x(i, static_cast<Eigen::Index>(k)) = d[k];
    }
  }
  return x;
}

}  // namespace floorloc
