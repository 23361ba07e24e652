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

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace floorloc {

inline constexpr std::size_t kDescriptorSize = 128;

using Descriptor = std::array<float, kDescriptorSize>;

/// Identifier of one floor image.
struct ViewId {
  std::uint32_t value = 0;

  friend auto operator<=>(const ViewId&, const ViewId&) = default;
};

inline std::string to_string(ViewId id) { return std::to_string(id.value); }

/// Wraps an angle in degrees into [-180, 180).
double wrap_degrees(double degrees);

/// Planar robot pose: position in meters, heading about z in degrees.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// One detected floor feature: pixel row m, pixel column n, detector
/// response used for node ranking, and its 128-d descriptor.
struct Keypoint {
  float m = 0.0f;
  float n = 0.0f;
  float response = 0.0f;
  Descriptor descriptor{};

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Downward camera: image size in pixels and the floor area it covers.
struct CameraModel {
  std::uint32_t image_width = 808;
  std::uint32_t image_height = 608;
  double footprint_width = 0.109;
  double footprint_height = 0.082;

  double meters_per_pixel_x() const { return footprint_width / image_width; }
  double meters_per_pixel_y() const { return footprint_height / image_height; }

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Throws InvalidExtent unless every dimension is positive.
void validate(const CameraModel& camera);

}  // namespace floorloc

template <>
struct std::hash<floorloc::ViewId> {
  std::size_t operator()(floorloc::ViewId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
