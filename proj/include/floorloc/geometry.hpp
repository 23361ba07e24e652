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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "floorloc/graph.hpp"

namespace floorloc {

/// Pixel location as (row m, column n).
struct PixelPoint {
  double m = 0.0;
  double n = 0.0;
};

struct Correspondence {
  PixelPoint p_local;  // query image
  PixelPoint p_base;   // retrieved map image
};

/// Maps homogeneous (n, m, 1) in the query image to the base image.
/// Normalized so that matrix(2, 2) == 1.
struct Homography {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
};

struct HomographyFit {
  Homography homography;
  double rms_error = 0.0;  // pixels, over the fitted correspondences
  std::size_t inliers = 0;
};

/// Nearest and second-nearest base descriptor for every query node, ratio
/// test, then one-to-one resolution keeping the closer match. Output is in
/// query node order.
std::vector<Correspondence> match_descriptors(const FloorGraph& query,
                                              const FloorGraph& base,
                                              double ratio = 0.75);

/// For each row of `query`, the smallest Euclidean distance to any row of
/// `base` (both N x 128). Distances of the winning pair are recomputed
/// exactly, so identical rows give exactly 0.
std::vector<double> min_descriptor_distances(const FloorGraph& query,
                                             const FloorGraph& base);

/// Normalized DLT. Throws TooFewMatches below 4 correspondences and
/// DegenerateConfiguration when the solution is not unique.
HomographyFit estimate_homography(std::span<const Correspondence> matches);

struct RansacOptions {
  std::size_t iterations = 500;
  double inlier_threshold = 3.0;  // pixels
  std::uint64_t seed = 0;
};

/// Robust variant: best 4-point hypothesis by inlier count, refit on its
/// inliers with the plain DLT.
HomographyFit estimate_homography_ransac(std::span<const Correspondence> matches,
                                         const RansacOptions& options);

/// Rotation of the nearest rotation matrix (polar factor) to the upper-left
/// 2x2 block, in degrees in [-180, 180).
double rotation_from_homography(const Homography& h);

/// Median of angles taken as offsets from their circular mean.
double circular_median(std::span<const double> degrees);

inline constexpr int kNoise = -1;

/// Density-based clustering. Neighborhoods are closed balls of radius eps
/// that include the point itself. Cluster labels start at 0 in discovery
/// order; noise is kNoise.
std::vector<int> dbscan(std::span<const Eigen::Vector2d> points, double eps,
                        std::size_t min_pts);

/// Mean of the most populous cluster (lowest label wins ties).
/// Throws NoCluster when every label is noise.
Eigen::Vector2d largest_cluster_mean(std::span<const Eigen::Vector2d> points,
                                     std::span<const int> labels);

}  // namespace floorloc
