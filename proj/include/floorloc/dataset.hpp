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
#include <filesystem>
#include <string>
#include <vector>

#include "floorloc/types.hpp"

namespace floorloc {

/// Axis-aligned floor rectangle in world meters.
struct Extent {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

struct FieldFeature {
  double x = 0.0;
  double y = 0.0;
  float response = 0.0f;
  Descriptor descriptor{};
};

/// Persistent, position-locked synthetic floor texture. Features are kept
/// sorted by x so footprint queries are a range scan.
struct FeatureField {
  std::vector<FieldFeature> features;
  Extent extent;
  std::uint64_t seed = 0;
};

struct ViewRecord {
  ViewId view_id;
  Pose pose;
  std::vector<Keypoint> keypoints;
  CameraModel camera;

  friend bool operator==(const ViewRecord&, const ViewRecord&) = default;
};

/// A recorded traversal plus the metadata written into the file header.
struct Dataset {
  CameraModel camera;
  std::uint64_t field_seed = 0;
  std::vector<ViewRecord> views;
  /// Free-form JSON object echoed into the header (generation config).
  std::string config_json = "{}";
};

/// Uniform feature placement, unit-norm random descriptors, responses in
/// (0, 1]. Feature count is round(density * area).
FeatureField generate_field(const Extent& extent, double density,
                            std::uint64_t seed);

/// Projects the field features that fall inside the rotated camera
/// footprint into pixel coordinates. Column n runs along the heading,
/// row m along the heading rotated by +90 degrees. Descriptor noise is
/// zero-mean Gaussian followed by renormalization (skipped when sigma = 0).
/// Throws EmptyView when no feature is visible.
ViewRecord render_view(const FeatureField& field, const Pose& pose,
                       const CameraModel& camera, double noise_sigma,
                       std::uint64_t seed, ViewId view_id = {});

/// World -> pixel (n, m) for a camera at `pose`, no bounds check.
/// Returns {n, m}.
std::array<double, 2> world_to_pixel(const Pose& pose, const CameraModel& camera,
                                     double wx, double wy);

struct ZigzagOptions {
  /// false: lanes run along x with headings 0/180.
  /// true: lanes run along y with headings 90/-90.
  bool vertical = false;
  /// Grid offset in units of spacing. Positions are origin + spacing * (k +
  /// phase) restricted to the open interval of the extent side.
  double phase = 0.0;
};

/// Boustrophedon sweep: every other lane is traversed in reverse.
std::vector<Pose> zigzag_trajectory(const Extent& extent, double lane_spacing,
                                    double step, ZigzagOptions options = {});

struct RenderOptions {
  double noise_sigma = 0.0;
  /// Std-dev of Gaussian noise added to the recorded (x, y); 0 disables.
  double pose_noise = 0.0;
  std::uint32_t first_id = 0;
  std::uint64_t seed = 0;
  /// Views with no visible feature are dropped instead of throwing.
  bool skip_empty = true;
};

/// Renders one view per pose with consecutive ids starting at first_id.
std::vector<ViewRecord> render_trajectory(const FeatureField& field,
                                          const std::vector<Pose>& poses,
                                          const CameraModel& camera,
                                          const RenderOptions& options);

/// Line-delimited "FGDS1" file: header record, then one record per view.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Joins an external keypoint file with a pose file by view id. See the
/// README for both formats.
std::vector<ViewRecord> import_keypoints(const std::filesystem::path& keypoints,
                                         const std::filesystem::path& poses,
                                         const CameraModel& camera);

}  // namespace floorloc
