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

#include "floorloc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

#include "floorloc/errors.hpp"
#include "text_format.hpp"

namespace floorloc {
namespace {

constexpr std::string_view kDatasetVersion = "FGDS1";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void normalize(Descriptor& d) {
  double sq = 0.0;
  for (float v : d) sq += static_cast<double>(v) * v;
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  for (float& v : d) v = static_cast<float>(v * inv);
}

void check_extent(const Extent& extent) {
  if (!(extent.width() > 0.0) || !(extent.height() > 0.0) ||
      !std::isfinite(extent.area())) {
    throw InvalidExtent("extent must have positive finite area");
  }
}

nlohmann::json camera_to_json(const CameraModel& c) {
  return {{"image_width", c.image_width},
          {"image_height", c.image_height},
          {"footprint_width", c.footprint_width},
          {"footprint_height", c.footprint_height}};
}

CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel c;
  c.image_width = j.at("image_width").get<std::uint32_t>();
  c.image_height = j.at("image_height").get<std::uint32_t>();
  c.footprint_width = j.at("footprint_width").get<double>();
  c.footprint_height = j.at("footprint_height").get<double>();
  validate(c);
  return c;
}

bool in_bounds(const Keypoint& k, const CameraModel& camera) {
  return k.m >= 0.0f && k.n >= 0.0f &&
         k.m < static_cast<float>(camera.image_height) &&
         k.n < static_cast<float>(camera.image_width);
}

}  // namespace

FeatureField generate_field(const Extent& extent, double density,
                            std::uint64_t seed) {
  check_extent(extent);
  if (!(density > 0.0)) throw PreconditionError("density must be positive");
  const auto count =
      static_cast<std::size_t>(std::llround(density * extent.area()));

  FeatureField field;
  field.extent = extent;
  field.seed = seed;
  field.features.resize(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(extent.x0, extent.x1);
  std::uniform_real_distribution<double> uy(extent.y0, extent.y1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (FieldFeature& f : field.features) {
    f.x = ux(rng);
    f.y = uy(rng);
    f.response = static_cast<float>(1.0 - unit(rng));
    for (float& v : f.descriptor) v = static_cast<float>(gauss(rng));
    normalize(f.descriptor);
  }
  std::stable_sort(field.features.begin(), field.features.end(),
                   [](const FieldFeature& a, const FieldFeature& b) {
                     return a.x < b.x;
                   });
  return field;
}

std::array<double, 2> world_to_pixel(const Pose& pose, const CameraModel& camera,
                                     double wx, double wy) {
  const double rad = pose.r * M_PI / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double dx = wx - pose.x;
  const double dy = wy - pose.y;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return {0.5 * camera.image_width + u / camera.meters_per_pixel_x(),
          0.5 * camera.image_height + v / camera.meters_per_pixel_y()};
}

ViewRecord render_view(const FeatureField& field, const Pose& pose,
                       const CameraModel& camera, double noise_sigma,
                       std::uint64_t seed, ViewId view_id) {
  validate(camera);
  if (!field.extent.contains(pose.x, pose.y)) {
    throw PreconditionError("pose lies outside the field extent");
  }
  if (noise_sigma < 0.0) throw PreconditionError("noise sigma must be >= 0");

  const double half_w = 0.5 * camera.footprint_width;
  const double half_h = 0.5 * camera.footprint_height;
  const double radius = std::hypot(half_w, half_h);
  auto lower = std::lower_bound(
      field.features.begin(), field.features.end(), pose.x - radius,
      [](const FieldFeature& f, double x) { return f.x < x; });

  const double rad = pose.r * M_PI / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

  ViewRecord view;
  view.view_id = view_id;
  view.pose = pose;
  view.camera = camera;
  for (auto it = lower; it != field.features.end() && it->x <= pose.x + radius;
       ++it) {
    const double dx = it->x - pose.x;
    const double dy = it->y - pose.y;
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    if (std::abs(u) >= half_w || std::abs(v) >= half_h) continue;
    Keypoint k;
    k.n = static_cast<float>(0.5 * camera.image_width +
                             u / camera.meters_per_pixel_x());
    k.m = static_cast<float>(0.5 * camera.image_height +
                             v / camera.meters_per_pixel_y());
    if (!in_bounds(k, camera)) continue;
    k.response = it->response;
    k.descriptor = it->descriptor;
    if (noise_sigma > 0.0) {
      for (float& d : k.descriptor) d = static_cast<float>(d + gauss(rng));
      normalize(k.descriptor);
    }
    view.keypoints.push_back(k);
  }
  if (view.keypoints.empty()) {
    throw EmptyView("no features visible from view " + to_string(view_id));
  }
  return view;
}

std::vector<Pose> zigzag_trajectory(const Extent& extent, double lane_spacing,
                                    double step, ZigzagOptions options) {
  check_extent(extent);
  const double lane_side = options.vertical ? extent.width() : extent.height();
  const double along_side = options.vertical ? extent.height() : extent.width();
  if (!(lane_spacing > 0.0) || !(step > 0.0) || lane_spacing >= lane_side ||
      step >= along_side) {
    throw PreconditionError(
        "lane spacing and step must be positive and smaller than the extent");
  }
  // Offsets k + phase strictly inside (0, side / spacing).
  auto grid = [&](double side, double spacing) {
    std::vector<double> out;
    const double limit = side / spacing - 1e-9;
    for (long k = 0;; ++k) {
      const double t = static_cast<double>(k) + options.phase;
      if (t <= 1e-9) continue;
      if (t >= limit) break;
      out.push_back(t * spacing);
    }
    return out;
  };
  const std::vector<double> lanes = grid(lane_side, lane_spacing);
  const std::vector<double> along = grid(along_side, step);

  std::vector<Pose> poses;
  poses.reserve(lanes.size() * along.size());
  for (std::size_t lane = 0; lane < lanes.size(); ++lane) {
    const bool forward = lane % 2 == 0;
    for (std::size_t j = 0; j < along.size(); ++j) {
      const double a = forward ? along[j] : along[along.size() - 1 - j];
      Pose p;
      if (options.vertical) {
        p.x = extent.x0 + lanes[lane];
        p.y = extent.y0 + a;
        p.r = forward ? 90.0 : -90.0;
      } else {
        p.x = extent.x0 + a;
        p.y = extent.y0 + lanes[lane];
        p.r = forward ? 0.0 : wrap_degrees(180.0);
      }
      poses.push_back(p);
    }
  }
  return poses;
}

std::vector<ViewRecord> render_trajectory(const FeatureField& field,
                                          const std::vector<Pose>& poses,
                                          const CameraModel& camera,
                                          const RenderOptions& options) {
  std::vector<ViewRecord> views;
  views.reserve(poses.size());
  std::mt19937_64 pose_rng(splitmix64(options.seed ^ 0x706f7365ULL));
  std::normal_distribution<double> pose_gauss(
      0.0, options.pose_noise > 0.0 ? options.pose_noise : 1.0);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const ViewId id{options.first_id + static_cast<std::uint32_t>(i)};
    const std::uint64_t view_seed = splitmix64(options.seed + id.value);
    try {
      ViewRecord view = render_view(field, poses[i], camera,
                                    options.noise_sigma, view_seed, id);
      if (options.pose_noise > 0.0) {
        view.pose.x += pose_gauss(pose_rng);
        view.pose.y += pose_gauss(pose_rng);
      }
      views.push_back(std::move(view));
    } catch (const EmptyView&) {
      if (!options.skip_empty) throw;
    }
  }
  return views;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  nlohmann::json header = {
      {"format", kDatasetVersion},
      {"camera", camera_to_json(dataset.camera)},
      {"field_seed", dataset.field_seed},
      {"view_count", dataset.views.size()},
      {"config", nlohmann::json::parse(dataset.config_json)}};
  out << header.dump() << '\n';

  std::string line;
  for (const ViewRecord& v : dataset.views) {
    if (!(v.camera == dataset.camera)) {
      throw PreconditionError("all views must share the dataset camera");
    }
    line.clear();
    line += "{\"view_id\":";
    line += std::to_string(v.view_id.value);
    line += ",\"pose\":[";
    detail::append_double(line, v.pose.x);
    line += ',';
    detail::append_double(line, v.pose.y);
    line += ',';
    detail::append_double(line, v.pose.r);
    line += "],\"camera\":0,\"keypoints\":[";
    for (std::size_t i = 0; i < v.keypoints.size(); ++i) {
      const Keypoint& k = v.keypoints[i];
      if (i) line += ',';
      line += '[';
      detail::append_float(line, k.m);
      line += ',';
      detail::append_float(line, k.n);
      line += ',';
      detail::append_float(line, k.response);
      for (float d : k.descriptor) {
        line += ',';
        detail::append_float(line, d);
      }
      line += ']';
    }
    line += "]}\n";
    out << line;
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  Dataset dataset;
  std::size_t expected = 0;

  if (!std::getline(in, line)) throw ParseError(1, "missing header record");
  ++line_no;
  try {
    const auto header = nlohmann::json::parse(line);
    const auto format = header.at("format").get<std::string>();
    if (format != kDatasetVersion) {
      throw VersionError("unsupported dataset version '" + format +
                         "', expected " + std::string(kDatasetVersion));
    }
    dataset.camera = camera_from_json(header.at("camera"));
    dataset.field_seed = header.at("field_seed").get<std::uint64_t>();
    expected = header.at("view_count").get<std::size_t>();
    if (header.contains("config")) dataset.config_json = header["config"].dump();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad header: ") + e.what());
  }

  dataset.views.reserve(expected);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ViewRecord v;
      v.view_id = ViewId{j.at("view_id").get<std::uint32_t>()};
      const auto& pose = j.at("pose");
      if (pose.size() != 3) throw ParseError(line_no, "pose must have 3 values");
      v.pose = {pose[0].get<double>(), pose[1].get<double>(),
                pose[2].get<double>()};
      if (j.at("camera").get<int>() != 0) {
        throw ParseError(line_no, "unknown camera reference");
      }
      v.camera = dataset.camera;
      const auto& kps = j.at("keypoints");
      v.keypoints.reserve(kps.size());
      for (const auto& row : kps) {
        if (row.size() != 3 + kDescriptorSize) {
          throw ParseError(line_no, "keypoint record must hold 131 values");
        }
        Keypoint k;
        k.m = row[0].get<float>();
        k.n = row[1].get<float>();
        k.response = row[2].get<float>();
        for (std::size_t d = 0; d < kDescriptorSize; ++d) {
          k.descriptor[d] = row[3 + d].get<float>();
        }
        if (!in_bounds(k, v.camera)) {
          throw ParseError(line_no, "keypoint outside image bounds");
        }
        v.keypoints.push_back(k);
      }
      dataset.views.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (dataset.views.size() != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) +
                                  " view records, found " +
                                  std::to_string(dataset.views.size()));
  }
  return dataset;
}

std::vector<ViewRecord> import_keypoints(const std::filesystem::path& keypoints,
                                         const std::filesystem::path& poses,
                                         const CameraModel& camera) {
  validate(camera);
  std::map<ViewId, Pose> pose_by_id;
  {
    std::ifstream in(poses);
    if (!in) throw FormatError("cannot open " + poses.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto fields = detail::split_fields(line);
      if (fields.empty()) continue;
      if (fields.size() != 4) {
        throw ParseError(line_no, "pose line needs: view_id x y r");
      }
      const ViewId id{detail::parse_number<std::uint32_t>(fields[0], line_no)};
      Pose p{detail::parse_number<double>(fields[1], line_no),
             detail::parse_number<double>(fields[2], line_no),
             detail::parse_number<double>(fields[3], line_no)};
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.r)) {
        throw ParseError(line_no, "pose values must be finite");
      }
      p.r = wrap_degrees(p.r);
      if (!pose_by_id.emplace(id, p).second) {
        throw ParseError(line_no, "duplicate pose for view " + to_string(id));
      }
    }
  }

  std::ifstream in(keypoints);
  if (!in) throw FormatError("cannot open " + keypoints.string());
  std::vector<ViewRecord> views;
  std::string line;
  std::size_t line_no = 0;
  std::size_t remaining = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;
    if (remaining == 0) {
      if (fields.size() != 3 || fields[0] != "view") {
        throw ParseError(line_no, "expected block header: view <id> <count>");
      }
      const ViewId id{detail::parse_number<std::uint32_t>(fields[1], line_no)};
      remaining = detail::parse_number<std::size_t>(fields[2], line_no);
      for (const ViewRecord& v : views) {
        if (v.view_id == id) {
          throw ParseError(line_no, "duplicate block for view " + to_string(id));
        }
      }
      const auto pose = pose_by_id.find(id);
      if (pose == pose_by_id.end()) {
        throw JoinError("no pose for view " + to_string(id));
      }
      views.push_back(ViewRecord{id, pose->second, {}, camera});
      views.back().keypoints.reserve(remaining);
      continue;
    }
    if (fields.size() != 3 + kDescriptorSize) {
      throw SchemaError("line " + std::to_string(line_no) + ": descriptor has " +
                        std::to_string(fields.size() < 3 ? 0 : fields.size() - 3) +
                        " values, expected 128");
    }
    Keypoint k;
    k.m = detail::parse_number<float>(fields[0], line_no);
    k.n = detail::parse_number<float>(fields[1], line_no);
    k.response = detail::parse_number<float>(fields[2], line_no);
    for (std::size_t d = 0; d < kDescriptorSize; ++d) {
      k.descriptor[d] = detail::parse_number<float>(fields[3 + d], line_no);
    }
    if (!in_bounds(k, camera)) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": keypoint outside image bounds");
    }
    views.back().keypoints.push_back(k);
    --remaining;
  }
  if (remaining != 0) {
    throw ParseError(line_no, "keypoint block ended early");
  }
  return views;
}

}  // namespace floorloc
