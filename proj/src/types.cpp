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

#include "floorloc/types.hpp"

#include <cmath>

#include "floorloc/errors.hpp"

namespace floorloc {

double wrap_degrees(double degrees) {
  if (degrees >= -180.0 && degrees < 180.0) return degrees;
  double wrapped = std::fmod(degrees + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  wrapped -= 180.0;
  // fmod can land exactly on +180 after the shift for inputs just below -180.
  if (wrapped >= 180.0) wrapped -= 360.0;
  return wrapped;
}

void validate(const CameraModel& camera) {
  if (camera.image_width == 0 || camera.image_height == 0 ||
      !(camera.footprint_width > 0.0) || !(camera.footprint_height > 0.0)) {
    throw InvalidExtent("camera model dimensions must be positive");
  }
}

}  // namespace floorloc
