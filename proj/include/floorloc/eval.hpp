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
#include <optional>
#include <string>
#include <vector>

#include "floorloc/dataset.hpp"
#include "floorloc/localizer.hpp"
#include "floorloc/map_db.hpp"
#include "floorloc/trainer.hpp"

namespace floorloc {

/// |wrap(estimate - truth)| in degrees, in [0, 180].
double rotation_error(double truth_deg, double estimate_deg);

/// Median of the values; NaN for an empty list. Even counts average the two
/// middle values.
double median(std::vector<double> values);

struct FrameRow {
  ViewId view_id;
  Pose truth;
  Pose estimate;
  double position_error = 0.0;  // meters
  double rotation_error = 0.0;  // degrees
  bool position_ok = false;
  bool rotation_ok = false;
  double time_us = 0.0;
};

struct EvalReport {
  double median_position_error = 0.0;  // over frames with position_ok
  double median_rotation_error = 0.0;  // over frames with rotation_ok
  double failure_rate = 0.0;           // percent of frames without rotation
  std::size_t frames = 0;
  std::vector<FrameRow> rows;
  std::string config_json = "{}";
};

/// Aggregates per-frame rows into the report medians and failure rate.
EvalReport summarize(std::vector<FrameRow> rows, std::string config_json = "{}");

enum class Method { kGraph, kBaseline };

/// Localizes every evaluation view against the map. Throws LeakageError if
/// any evaluation id is also mapped.
EvalReport evaluate(const std::vector<ViewRecord>& eval_views,
                    const MapDatabase& db, const EncoderParams& params,
                    const LocalizerConfig& config,
                    Method method = Method::kGraph,
                    std::string config_json = "{}");

/// Per-frame rows plus one summary row; the timing column is last so it
/// can be dropped when comparing runs.
std::string report_csv(const EvalReport& report, bool include_timing = true);

struct SweepRow {
  std::string setting;
  EvalReport report;
  double runtime_ms = 0.0;  // mean per-frame localization time
  bool failed = false;
  std::string error;
};

struct NodeSweepConfig {
  TrainConfig train;
  LocalizerConfig localizer;
  /// When set, every setting reuses this encoder and only the graph node
  /// count of map and queries varies. Otherwise a fresh encoder is trained
  /// per node count.
  std::optional<EncoderParams> fixed_encoder;
};

std::vector<SweepRow> sweep_nodes(const std::vector<ViewRecord>& map_views,
                                  const std::vector<ViewRecord>& eval_views,
                                  const CameraModel& camera,
                                  const std::vector<std::size_t>& node_counts,
                                  const NodeSweepConfig& config);

/// One row per neighbor count plus a trailing baseline row evaluated with
/// `config.n_neighbors` on at most `baseline_frames` frames (0 = all).
std::vector<SweepRow> sweep_neighbors(const std::vector<ViewRecord>& eval_views,
                                      const MapDatabase& db,
                                      const EncoderParams& params,
                                      const std::vector<std::size_t>& n_list,
                                      const LocalizerConfig& config,
                                      std::size_t baseline_frames = 0);

/// Columns setting,position_error_m,rotation_error_deg,failure_rate_pct
/// [,runtime_ms],status.
std::string sweep_csv(const std::vector<SweepRow>& rows, bool with_runtime,
                      const std::string& config_json = "{}");

/// View centers in stitched-mosaic pixel coordinates.
std::vector<Eigen::Vector2d> stitched_positions(const std::vector<ViewRecord>& views);

struct Best10Trial {
  ViewId query;
  Eigen::Vector2d truth;
  Eigen::Vector2d estimate;
  double distance_px = 0.0;
};

struct Best10Report {
  double best_distance_px = 0.0;
  std::vector<Best10Trial> trials;
};

/// Ten random queries, each localized against a map of all other views.
/// Map positions are the stitched pixel positions, so `config.dbscan_eps`
/// is in pixels. With leave_one_out = false the query stays mapped (control
/// run). Throws InsufficientData below 11 views.
Best10Report best_out_of_10(const std::vector<ViewRecord>& views,
                            const std::vector<Eigen::Vector2d>& pixel_positions,
                            const EncoderParams& params,
                            const LocalizerConfig& config, std::uint64_t seed,
                            bool leave_one_out = true);

struct BenchReport {
  std::size_t frames = 0;
  std::size_t repetitions = 0;
  double graph_ms = 0.0;     // mean per frame
  double baseline_ms = 0.0;  // mean per frame
  double speedup() const { return baseline_ms / graph_ms; }
};

/// Mean wall time per frame of localize() and baseline_localize() over the
/// same frames (at most `max_frames`, 0 = all).
BenchReport bench_runtime(const std::vector<ViewRecord>& eval_views,
                          const MapDatabase& db, const EncoderParams& params,
                          const LocalizerConfig& config,
                          std::size_t repetitions, std::size_t max_frames = 0);

std::string bench_csv(const BenchReport& report, const std::string& config_json = "{}");

/// Minimal SVG documents.
std::string svg_bar_chart(const std::vector<std::string>& labels,
                          const std::vector<double>& values,
                          const std::string& title, const std::string& y_label);
std::string svg_trajectory(const std::vector<Eigen::Vector2d>& truth,
                           const std::vector<Eigen::Vector2d>& estimate,
                           const std::string& title);

}  // namespace floorloc
