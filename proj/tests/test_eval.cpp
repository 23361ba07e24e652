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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "floorloc/errors.hpp"
#include "floorloc/eval.hpp"

using namespace floorloc;

namespace {

struct Scene {
  std::vector<ViewRecord> map;
  EncoderParams params = init_params(8, {16, 16, 8});
  LocalizerConfig config;
};

Scene grid_scene(double spacing, std::size_t side, std::uint64_t seed = 3) {
  Scene s;
  const double span = spacing * double(side + 1);
  const FeatureField f = generate_field({-0.07, -0.07, span + 0.07, span + 0.07}, 40000, seed);
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < side * side; ++i) {
    poses.push_back({spacing * double(i % side + 1), spacing * double(i / side + 1), double(i * 31 % 360) - 180.0});
  }
  s.map = render_trajectory(f, poses, CameraModel{}, RenderOptions{});
  s.config.distance_scale = 1e-6;
  s.config.node_count = 64;
  return s;
}

// Same frames under ids the map does not hold.
std::vector<ViewRecord> relabeled(std::vector<ViewRecord> views, std::uint32_t offset) {
  for (auto& v : views) v.view_id.value += offset;
  return views;
}

FrameRow row(double pos, double rot, bool rot_ok) {
  FrameRow r;
  r.position_error = pos;
  r.rotation_error = rot;
  r.position_ok = true;
  r.rotation_ok = rot_ok;
  return r;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::size_t count_fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("rotation_error wraps before taking the magnitude") {
  CHECK(rotation_error(179.0, -179.0) == doctest::Approx(2.0));
  CHECK(rotation_error(-179.0, 179.0) == doctest::Approx(2.0));
  CHECK(rotation_error(0.0, 360.0) == 0.0);
  CHECK(rotation_error(10.0, -170.0) == 180.0);
  CHECK(rotation_error(30.0, 45.5) == 15.5);
}

TEST_CASE("median") {
  CHECK(median({0.01, 0.02, 0.03}) == 0.02);
  CHECK(median({0.03, 0.01, 0.02}) == 0.02);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
}

TEST_CASE("summarize") {
  const EvalReport exact = summarize({row(0, 0, true), row(0, 0, true)});
  CHECK(exact.median_position_error == 0.0);
  CHECK(exact.median_rotation_error == 0.0);
  CHECK(exact.failure_rate == 0.0);

  std::vector<FrameRow> rows{row(0.01, 1.0, true), row(0.03, 90.0, false), row(0.02, 3.0, true),
                             row(0.5, 0.5, true)};
  rows[3].position_ok = false;
  const EvalReport r = summarize(rows, R"({"k":1})");
  CHECK(r.frames == 4);
  CHECK(r.median_position_error == 0.02);
  CHECK(r.median_rotation_error == doctest::Approx(1.0));
  CHECK(r.failure_rate == 25.0);
  CHECK(r.config_json == R"({"k":1})");

  std::reverse(rows.begin(), rows.end());
  const EvalReport p = summarize(rows);
  CHECK(p.median_position_error == r.median_position_error);
  CHECK(p.median_rotation_error == r.median_rotation_error);
  CHECK(p.failure_rate == r.failure_rate);
  CHECK(summarize({}).failure_rate == 0.0);
}

TEST_CASE("evaluate") {
  Scene s = grid_scene(0.2, 3);
  s.config.dbscan_min_pts = 1;
  const MapDatabase db = build_map(s.map, s.params, s.config.node_count, s.config.distance_scale);
  CHECK_THROWS_AS(evaluate(s.map, db, s.params, s.config), LeakageError);

  const auto queries = relabeled(s.map, 100);
  const EvalReport r = evaluate(queries, db, s.params, s.config, Method::kGraph, "{}");
  CHECK(r.frames == queries.size());
  CHECK(r.median_position_error == 0.0);
  CHECK(r.median_rotation_error < 1e-6);
  CHECK(r.failure_rate == 0.0);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].view_id == queries[i].view_id);
    CHECK(r.rows[i].truth == queries[i].pose);
  }
  const EvalReport b = evaluate(queries, db, s.params, s.config, Method::kBaseline);
  CHECK(b.median_position_error == 0.0);
}

TEST_CASE("report_csv layout") {
  std::vector<FrameRow> rows{row(0.01, 1.0, true), row(0.03, 90.0, false)};
  rows[0].time_us = 1500;
  const EvalReport r = summarize(rows, R"({"seed":42})");
  const auto timed = lines_of(report_csv(r));
  REQUIRE(timed.size() == 5);
  CHECK(timed[0] == R"(# config: {"seed":42})");
  CHECK(timed[1].rfind("view_id,", 0) == 0);
  CHECK(count_fields(timed[1]) == 13);
  CHECK(count_fields(timed[2]) == 13);
  CHECK(count_fields(timed[4]) == 13);
  CHECK(timed[4].rfind("summary,", 0) == 0);
  const auto plain = lines_of(report_csv(r, false));
  for (std::size_t i = 1; i < plain.size(); ++i) {
    CHECK(count_fields(plain[i]) == 12);
    CHECK(timed[i].rfind(plain[i], 0) == 0);
  }
  CHECK(plain[4].find(",50") != std::string::npos);
  CHECK(report_csv(summarize({})).find("summary,,,,,,,nan,nan,0,0,0") != std::string::npos);
}

TEST_CASE("sweeps") {
  Scene s = grid_scene(0.01, 5);
  s.config.dbscan_eps = 0.03;
  const std::vector<ViewRecord> map(s.map.begin(), s.map.begin() + 20);
  std::vector<ViewRecord> queries = relabeled({s.map.begin() + 20, s.map.end()}, 0);
  const MapDatabase db = build_map(map, s.params, s.config.node_count, s.config.distance_scale);

  const auto rows = sweep_neighbors(queries, db, s.params, {3, 5}, s.config, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].setting == "3 neighbors");
  CHECK(rows[1].setting == "5 neighbors");
  CHECK(rows[2].setting == "baseline");
  CHECK(rows[2].report.frames == 2);
  CHECK(rows[0].report.frames == queries.size());

  const EvalReport direct = evaluate(queries, db, s.params, s.config);
  const auto single = sweep_neighbors(queries, db, s.params, {3}, s.config);
  CHECK(single[0].report.median_position_error == direct.median_position_error);
  CHECK(single[0].report.median_rotation_error == direct.median_rotation_error);
  CHECK(single[0].report.failure_rate == direct.failure_rate);

  const auto bad = sweep_neighbors(queries, db, s.params, {2, 3}, s.config, 1);
  CHECK(bad[0].failed);
  CHECK(bad[0].error.find("PreconditionError") != std::string::npos);
  CHECK_FALSE(bad[1].failed);
  const auto csv = lines_of(sweep_csv(bad, true));
  REQUIRE(csv.size() == 5);
  CHECK(csv[1] == "setting,position_error_m,rotation_error_deg,failure_rate_pct,runtime_ms,status");
  CHECK(csv[2].rfind("2 neighbors,nan,nan,nan,", 0) == 0);
  CHECK(csv[2].substr(csv[2].size() - 7) == ",failed");
  CHECK(csv[3].substr(csv[3].size() - 3) == ",ok");
  CHECK(count_fields(lines_of(sweep_csv(bad, false))[2]) == 5);
  CHECK_THROWS_AS(sweep_neighbors(queries, db, s.params, {}, s.config), PreconditionError);

  NodeSweepConfig nc;
  nc.localizer = s.config;
  nc.fixed_encoder = s.params;
  const auto nodes = sweep_nodes(map, queries, CameraModel{}, {0, 16, 64}, nc);
  REQUIRE(nodes.size() == 3);
  CHECK(nodes[0].failed);
  CHECK_FALSE(nodes[1].failed);
  CHECK(nodes[1].setting == "16 nodes");
  CHECK(nodes[2].report.median_position_error == direct.median_position_error);
  CHECK_THROWS_AS(sweep_nodes(map, queries, CameraModel{}, {}, nc), PreconditionError);

  NodeSweepConfig trained;
  trained.localizer = s.config;
  trained.train.max_epochs = 2;
  trained.train.batch_size = 4;
  trained.train.validation_pairs = 4;
  trained.train.dims = {8, 8, 4};
  trained.train.distance_scale = s.config.distance_scale;
  const auto fitted = sweep_nodes(map, queries, CameraModel{}, {16}, trained);
  REQUIRE(fitted.size() == 1);
  CHECK_FALSE(fitted[0].failed);
  CHECK(fitted[0].report.frames == queries.size());
}

TEST_CASE("best_out_of_10") {
  Scene s = grid_scene(0.2, 4);
  s.config.dbscan_min_pts = 1;
  const auto pixels = stitched_positions(s.map);
  CHECK(pixels[1].x() == doctest::Approx(0.4 / CameraModel{}.meters_per_pixel_x()));
  const Best10Report control = best_out_of_10(s.map, pixels, s.params, s.config, 1, false);
  CHECK(control.trials.size() == 10);
  CHECK(control.best_distance_px == 0.0);
  const Best10Report again = best_out_of_10(s.map, pixels, s.params, s.config, 1, false);
  for (std::size_t i = 0; i < 10; ++i) CHECK(again.trials[i].query == control.trials[i].query);

  const std::vector<ViewRecord> ten(s.map.begin(), s.map.begin() + 10);
  CHECK_THROWS_AS(best_out_of_10(ten, stitched_positions(ten), s.params, s.config, 1),
                  InsufficientData);

  Scene dense = grid_scene(0.01, 6, 4);
  const double stride_px = 0.01 / CameraModel{}.meters_per_pixel_x();
  dense.config.dbscan_eps = 3 * stride_px;
  const Best10Report loo = best_out_of_10(dense.map, stitched_positions(dense.map), dense.params,
                                          dense.config, 5);
  for (const auto& t : loo.trials) CHECK(t.distance_px > 0.0);
  CHECK(loo.best_distance_px <= stride_px);
}

TEST_CASE("bench_runtime") {
  Scene s = grid_scene(0.01, 10);
  const MapDatabase db = build_map(s.map, s.params, s.config.node_count, s.config.distance_scale);
  const auto queries = relabeled({s.map.begin(), s.map.begin() + 3}, 1000);
  const BenchReport b = bench_runtime(queries, db, s.params, s.config, 1, 2);
  CHECK(b.frames == 2);
  CHECK(b.repetitions == 1);
  CHECK(b.graph_ms > 0.0);
  CHECK(b.speedup() >= 1.0);
  const auto csv = lines_of(bench_csv(b));
  REQUIRE(csv.size() == 5);
  CHECK(csv[2].rfind("graph,", 0) == 0);
  CHECK(csv[3].rfind("baseline,", 0) == 0);
  CHECK(csv[4].rfind("speedup,", 0) == 0);
  CHECK_THROWS_AS(bench_runtime(queries, db, s.params, s.config, 0), PreconditionError);
  CHECK_THROWS_AS(bench_runtime({}, db, s.params, s.config, 1), InsufficientData);
}

TEST_CASE("svg writers") {
  const std::string bars = svg_bar_chart({"graph", "a<b"}, {1.5, 3.0}, "T & U", "ms");
  CHECK(bars.rfind("<svg", 0) == 0);
  CHECK(bars.find("</svg>") != std::string::npos);
  CHECK(bars.find("a&lt;b") != std::string::npos);
  CHECK(bars.find("T &amp; U") != std::string::npos);
  CHECK(std::count(bars.begin(), bars.end(), '\n') > 4);
  const std::string path = svg_trajectory({{0, 0}, {1, 2}}, {{0.1, 0}, {1, 2.2}}, "run");
  CHECK(path.rfind("<svg", 0) == 0);
  CHECK(path.find("polyline") != std::string::npos);
  CHECK(svg_bar_chart({}, {}, "", "").find("</svg>") != std::string::npos);
}
