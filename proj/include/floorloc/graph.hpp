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

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "floorloc/types.hpp"

namespace floorloc {

/// Complete undirected graph over the keypoints of one floor image. Edge
/// weights are pairwise pixel distances (times an optional scale factor).
///
/// Only the nodes are stored; the dense adjacency is a pure function of the
/// node positions and is materialized on request, which keeps large graph
/// stores at O(N) memory per graph.
class FloorGraph {
 public:
  FloorGraph(ViewId view_id, std::vector<Keypoint> nodes,
             double distance_scale = 1.0);

  ViewId view_id() const { return view_id_; }
  const std::vector<Keypoint>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double distance_scale() const { return distance_scale_; }

  /// Symmetric N x N matrix with zero diagonal.
  Eigen::MatrixXd adjacency() const;

  friend bool operator==(const FloorGraph&, const FloorGraph&) = default;

 private:
  ViewId view_id_;
  std::vector<Keypoint> nodes_;
  double distance_scale_;
};

/// D^-1/2 (A + I) D^-1/2 of a FloorGraph.
struct NormalizedAdjacency {
  Eigen::MatrixXd matrix;
};

/// Keeps the `node_count` strongest keypoints (ties by (m, n)) in that order.
/// Throws EmptyView for an empty keypoint list.
FloorGraph build_graph(std::span<const Keypoint> keypoints,
                       std::size_t node_count, ViewId view_id,
                       double distance_scale = 1.0);

NormalizedAdjacency normalize_adjacency(const FloorGraph& graph);
NormalizedAdjacency normalize_adjacency(const Eigen::MatrixXd& adjacency);

/// N x 128 matrix; row i is the descriptor of node i.
Eigen::MatrixXd feature_matrix(const FloorGraph& graph);

}  // namespace floorloc
