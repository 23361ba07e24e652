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

#include "floorloc/localizer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "floorloc/errors.hpp"

namespace floorloc {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

struct Hit {
  ViewId id;
  Pose pose;
  double score;
};

void check_config(const LocalizerConfig& config) {
  if (config.n_neighbors < 3) {
    throw PreconditionError("localization needs at least 3 neighbors, got " +
                            std::to_string(config.n_neighbors));
  }
  if (config.node_count == 0) throw PreconditionError("node_count must be >= 1");
}

// Shared tail of both pipelines: position by clustering, rotation by
// homography per retrieved graph.
void refine(const FloorGraph& query, const std::vector<Hit>& hits,
            const MapDatabase& db, const LocalizerConfig& config,
            LocalizationResult& result) {
  for (const Hit& h : hits) {
    result.neighbor_ids.push_back(h.id);
    result.neighbor_scores.push_back(h.score);
  }
  const Pose& nearest = hits.front().pose;

  auto start = Clock::now();
  std::vector<Eigen::Vector2d> positions;
  positions.reserve(hits.size());
  for (const Hit& h : hits) positions.emplace_back(h.pose.x, h.pose.y);
  const std::vector<int> labels =
      dbscan(positions, config.dbscan_eps, config.dbscan_min_pts);
  try {
    const Eigen::Vector2d mean = largest_cluster_mean(positions, labels);
    result.pose.x = mean.x();
    result.pose.y = mean.y();
    result.position_ok = true;
  } catch (const NoCluster&) {
    result.pose.x = nearest.x;
    result.pose.y = nearest.y;
    result.position_ok = false;
  }
  result.timing.cluster_us = micros_since(start);

  start = Clock::now();
  for (const Hit& h : hits) {
    const auto matches = match_descriptors(query, db.graph(h.id), config.ratio);
    try {
      const HomographyFit fit =
          config.use_ransac ? estimate_homography_ransac(matches, config.ransac)
                            : estimate_homography(matches);
      const double relative = rotation_from_homography(fit.homography);
      result.rotation_candidates.push_back(wrap_degrees(h.pose.r + relative));
    } catch (const TooFewMatches&) {
    } catch (const DegenerateConfiguration&) {
    }
  }
  if (result.rotation_candidates.empty()) {
    result.pose.r = nearest.r;
    result.rotation_ok = false;
  } else {
    result.pose.r = circular_median(result.rotation_candidates);
    result.rotation_ok = true;
  }
  result.timing.rotation_us = micros_since(start);
}

}  // namespace

LocalizationResult localize(const ViewRecord& view, const MapDatabase& db,
                            const EncoderParams& params,
                            const LocalizerConfig& config) {
  check_config(config);
  LocalizationResult result;

  auto start = Clock::now();
  const FloorGraph graph = build_graph(view.keypoints, config.node_count,
                                       view.view_id, config.distance_scale);
  const Eigen::MatrixXd features = feature_matrix(graph);
  const NormalizedAdjacency a_hat = normalize_adjacency(graph);
  result.timing.graph_us = micros_since(start);

  start = Clock::now();
  const Embedding embedding = encode(params, features, a_hat);
  result.timing.encode_us = micros_since(start);

  start = Clock::now();
  std::vector<Hit> hits;
  for (const Neighbor& n : knn_query(db, embedding, config.n_neighbors)) {
    hits.push_back({n.record.view_id, n.record.pose, n.distance});
  }
  result.timing.retrieval_us = micros_since(start);

  refine(graph, hits, db, config, result);
  return result;
}

double baseline_similarity(const FloorGraph& a, const FloorGraph& b) {
  const std::vector<double> mins = min_descriptor_distances(a, b);
  return std::accumulate(mins.begin(), mins.end(), 0.0) /
         static_cast<double>(mins.size());
}

LocalizationResult baseline_localize(const ViewRecord& view,
                                     const MapDatabase& db,
                                     const LocalizerConfig& config) {
  check_config(config);
  LocalizationResult result;

  auto start = Clock::now();
  const FloorGraph graph = build_graph(view.keypoints, config.node_count,
                                       view.view_id, config.distance_scale);
  result.timing.graph_us = micros_since(start);

  start = Clock::now();
  const auto& records = db.records();
  std::vector<double> score(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    score[i] = baseline_similarity(graph, db.graph(records[i].view_id));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(config.n_neighbors, records.size());
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (score[a] != score[b]) return score[a] < score[b];
                      return a < b;
                    });
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < k; ++i) {
    hits.push_back({records[order[i]].view_id, records[order[i]].pose,
                    score[order[i]]});
  }
  result.timing.retrieval_us = micros_since(start);

  refine(graph, hits, db, config, result);
  return result;
}

}  // namespace floorloc
