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

#include <cstdint>
#include <vector>

#include "floorloc/dataset.hpp"
#include "floorloc/encoder.hpp"
#include "floorloc/geometry.hpp"
#include "floorloc/map_db.hpp"

namespace floorloc {

struct LocalizerConfig {
  std::size_t node_count = 256;
  std::size_t n_neighbors = 3;
  double dbscan_eps = 0.0545;  // half the default footprint width, meters
  std::size_t dbscan_min_pts = 2;
  double ratio = 0.75;
  double distance_scale = 1.0;
  bool use_ransac = false;
  RansacOptions ransac;
};

/// Wall time per pipeline stage in microseconds.
struct StageTiming {
  double graph_us = 0.0;
  double encode_us = 0.0;
  double retrieval_us = 0.0;
  double cluster_us = 0.0;
  double rotation_us = 0.0;

  double total_us() const {
    return graph_us + encode_us + retrieval_us + cluster_us + rotation_us;
  }
};

struct LocalizationResult {
  Pose pose;
  bool position_ok = false;
  bool rotation_ok = false;
  std::vector<ViewId> neighbor_ids;      // retrieval order
  std::vector<double> neighbor_scores;   // embedding distance or similarity
  std::vector<double> rotation_candidates;
  StageTiming timing;
};

/// Localizes one frame from scratch: graph, embedding, n nearest map
/// embeddings, DBSCAN over their positions, and per-neighbor homography
/// rotation candidates reduced by circular median. Failed stages fall back
/// to the nearest neighbor's pose and clear the matching flag.
LocalizationResult localize(const ViewRecord& view, const MapDatabase& db,
                            const EncoderParams& params,
                            const LocalizerConfig& config);

/// Mean over nodes of `a` of the smallest descriptor distance to any node
/// of `b`. One-sided and blind to graph structure.
double baseline_similarity(const FloorGraph& a, const FloorGraph& b);

/// Same pipeline with exhaustive baseline_similarity ranking over every
/// mapped graph in place of embedding retrieval.
LocalizationResult baseline_localize(const ViewRecord& view,
                                     const MapDatabase& db,
                                     const LocalizerConfig& config);

}  // namespace floorloc
