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

#include "floorloc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "floorloc/errors.hpp"
#include "text_format.hpp"

namespace floorloc {
namespace {

using Clock = std::chrono::steady_clock;

void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
  } else {
    detail::append_double(out, v);
  }
}

std::string config_comment(const std::string& config_json) {
  return "# config: " + config_json + "\n";
}

FrameRow frame_row(const ViewRecord& view, const LocalizationResult& r) {
  FrameRow row;
  row.view_id = view.view_id;
  row.truth = view.pose;
  row.estimate = r.pose;
  row.position_error = std::hypot(r.pose.x - view.pose.x, r.pose.y - view.pose.y);
  row.rotation_error = rotation_error(view.pose.r, r.pose.r);
  row.position_ok = r.position_ok;
  row.rotation_ok = r.rotation_ok;
  row.time_us = r.timing.total_us();
  return row;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double rotation_error(double truth_deg, double estimate_deg) {
  return std::abs(wrap_degrees(estimate_deg - truth_deg));
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid]
                                : 0.5 * (values[mid - 1] + values[mid]);
}

EvalReport summarize(std::vector<FrameRow> rows, std::string config_json) {
  EvalReport report;
  report.frames = rows.size();
  std::vector<double> pos, rot;
  std::size_t rotation_failures = 0;
  for (const FrameRow& r : rows) {
    if (r.position_ok) pos.push_back(r.position_error);
    if (r.rotation_ok) {
      rot.push_back(r.rotation_error);
    } else {
      ++rotation_failures;
    }
  }
  report.median_position_error = median(std::move(pos));
  report.median_rotation_error = median(std::move(rot));
  report.failure_rate =
      rows.empty() ? 0.0
                   : 100.0 * static_cast<double>(rotation_failures) /
                         static_cast<double>(rows.size());
  report.rows = std::move(rows);
  report.config_json = std::move(config_json);
  return report;
}

EvalReport evaluate(const std::vector<ViewRecord>& eval_views,
                    const MapDatabase& db, const EncoderParams& params,
                    const LocalizerConfig& config, Method method,
                    std::string config_json) {
  for (const ViewRecord& v : eval_views) {
    if (db.contains(v.view_id)) {
      throw LeakageError("evaluation view " + to_string(v.view_id) +
                         " is part of the map");
    }
  }
  std::vector<FrameRow> rows;
  rows.reserve(eval_views.size());
  for (const ViewRecord& v : eval_views) {
    const LocalizationResult r = method == Method::kGraph
                                     ? localize(v, db, params, config)
                                     : baseline_localize(v, db, config);
    rows.push_back(frame_row(v, r));
  }
  return summarize(std::move(rows), std::move(config_json));
}

std::string report_csv(const EvalReport& report, bool include_timing) {
  std::string out = config_comment(report.config_json);
  out +=
      "view_id,true_x,true_y,true_r,est_x,est_y,est_r,position_error_m,"
      "rotation_error_deg,position_ok,rotation_ok,failure_rate_pct";
  out += include_timing ? ",time_us\n" : "\n";
  double total_us = 0.0;
  std::size_t pos_ok = 0, rot_ok = 0;
  for (const FrameRow& r : report.rows) {
    out += to_string(r.view_id);
    for (double v : {r.truth.x, r.truth.y, r.truth.r, r.estimate.x, r.estimate.y,
                     r.estimate.r, r.position_error, r.rotation_error}) {
      out += ',';
      append_number(out, v);
    }
    out += r.position_ok ? ",1" : ",0";
    out += r.rotation_ok ? ",1," : ",0,";
    if (include_timing) {
      out += ',';
      append_number(out, r.time_us);
    }
    out += '\n';
    total_us += r.time_us;
    pos_ok += r.position_ok;
    rot_ok += r.rotation_ok;
  }
  out += "summary,,,,,,,";
  append_number(out, report.median_position_error);
  out += ',';
  append_number(out, report.median_rotation_error);
  out += ',' + std::to_string(pos_ok) + ',' + std::to_string(rot_ok) + ',';
  append_number(out, report.failure_rate);
  if (include_timing) {
    out += ',';
    append_number(out, report.rows.empty()
                           ? 0.0
                           : total_us / static_cast<double>(report.rows.size()));
  }
  out += '\n';
  return out;
}

std::vector<SweepRow> sweep_nodes(const std::vector<ViewRecord>& map_views,
                                  const std::vector<ViewRecord>& eval_views,
                                  const CameraModel& camera,
                                  const std::vector<std::size_t>& node_counts,
                                  const NodeSweepConfig& config) {
  if (node_counts.empty()) throw PreconditionError("no node counts to sweep");
  std::vector<SweepRow> rows;
  for (std::size_t nodes : node_counts) {
    SweepRow row;
    row.setting = std::to_string(nodes) + " nodes";
    try {
      LocalizerConfig loc = config.localizer;
      loc.node_count = nodes;
      EncoderParams params = config.fixed_encoder
                                 ? *config.fixed_encoder
                                 : [&] {
                                     TrainConfig tc = config.train;
                                     tc.node_count = nodes;
                                     return fit(map_views, camera, tc).params;
                                   }();
      const MapDatabase db = build_map(map_views, params, nodes, loc.distance_scale);
      row.report = evaluate(eval_views, db, params, loc);
      double total = 0.0;
      for (const FrameRow& f : row.report.rows) total += f.time_us;
      row.runtime_ms = row.report.rows.empty()
                           ? 0.0
                           : total / 1000.0 / static_cast<double>(row.report.rows.size());
    } catch (const Error& e) {
      row.failed = true;
      row.error = std::string(e.name()) + ": " + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> sweep_neighbors(const std::vector<ViewRecord>& eval_views,
                                      const MapDatabase& db,
                                      const EncoderParams& params,
                                      const std::vector<std::size_t>& n_list,
                                      const LocalizerConfig& config,
                                      std::size_t baseline_frames) {
  if (n_list.empty()) throw PreconditionError("no neighbor counts to sweep");
  auto run = [&](const std::string& setting, const LocalizerConfig& loc,
                 Method method, const std::vector<ViewRecord>& frames) {
    SweepRow row;
    row.setting = setting;
    try {
      row.report = evaluate(frames, db, params, loc, method);
      double total = 0.0;
      for (const FrameRow& f : row.report.rows) total += f.time_us;
      row.runtime_ms = row.report.rows.empty()
                           ? 0.0
                           : total / 1000.0 / static_cast<double>(row.report.rows.size());
    } catch (const Error& e) {
      row.failed = true;
      row.error = std::string(e.name()) + ": " + e.what();
    }
    return row;
  };
  std::vector<SweepRow> rows;
  rows.push_back(run("baseline", config, Method::kBaseline,
                     baseline_frames == 0 || baseline_frames >= eval_views.size()
                         ? eval_views
                         : std::vector<ViewRecord>(eval_views.begin(),
                                                   eval_views.begin() +
                                                       static_cast<std::ptrdiff_t>(baseline_frames))));
  for (std::size_t n : n_list) {
    LocalizerConfig loc = config;
    loc.n_neighbors = n;
    rows.push_back(run(std::to_string(n) + " neighbors", loc, Method::kGraph,
                       eval_views));
  }
  // Baseline is reported last.
  std::rotate(rows.begin(), rows.begin() + 1, rows.end());
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool with_runtime,
                      const std::string& config_json) {
  std::string out = config_comment(config_json);
  out += "setting,position_error_m,rotation_error_deg,failure_rate_pct";
  out += with_runtime ? ",runtime_ms,status\n" : ",status\n";
  for (const SweepRow& r : rows) {
    out += r.setting;
    for (double v : {r.report.median_position_error, r.report.median_rotation_error,
                     r.report.failure_rate}) {
      out += ',';
      append_number(out, r.failed ? std::numeric_limits<double>::quiet_NaN() : v);
    }
    if (with_runtime) {
      out += ',';
      append_number(out, r.runtime_ms);
    }
    out += r.failed ? ",failed\n" : ",ok\n";
  }
  return out;
}

std::vector<Eigen::Vector2d> stitched_positions(const std::vector<ViewRecord>& views) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(views.size());
  for (const ViewRecord& v : views) {
    out.emplace_back(v.pose.x / v.camera.meters_per_pixel_x(),
                     v.pose.y / v.camera.meters_per_pixel_y());
  }
  return out;
}

Best10Report best_out_of_10(const std::vector<ViewRecord>& views,
                            const std::vector<Eigen::Vector2d>& pixel_positions,
                            const EncoderParams& params,
                            const LocalizerConfig& config, std::uint64_t seed,
                            bool leave_one_out) {
  constexpr std::size_t kTrials = 10;
  if (views.size() < kTrials + 1) {
    throw InsufficientData("best-out-of-10 needs at least 11 views, got " +
                           std::to_string(views.size()));
  }
  if (pixel_positions.size() != views.size()) {
    throw ShapeError("one stitched position per view is required");
  }
  // Poses are not used: the map is keyed by stitched pixel positions.
  std::vector<ViewRecord> placed = views;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    placed[i].pose = {pixel_positions[i].x(), pixel_positions[i].y(), 0.0};
  }
  // Encoding is per view, so dropping the query from one full map equals
  // building the leave-one-out map from scratch.
  const MapDatabase full = build_map(placed, params, config.node_count,
                                     config.distance_scale);

  std::vector<std::size_t> order(views.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Best10Report report;
  report.best_distance_px = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < kTrials; ++t) {
    const ViewRecord& query = placed[order[t]];
    const MapDatabase db = leave_one_out ? full.without(query.view_id) : full;
    const LocalizationResult r = localize(query, db, params, config);
    Best10Trial trial;
    trial.query = query.view_id;
    trial.truth = pixel_positions[order[t]];
    trial.estimate = {r.pose.x, r.pose.y};
    trial.distance_px = (trial.estimate - trial.truth).norm();
    report.best_distance_px = std::min(report.best_distance_px, trial.distance_px);
    report.trials.push_back(trial);
  }
  return report;
}

BenchReport bench_runtime(const std::vector<ViewRecord>& eval_views,
                          const MapDatabase& db, const EncoderParams& params,
                          const LocalizerConfig& config,
                          std::size_t repetitions, std::size_t max_frames) {
  if (repetitions == 0) throw PreconditionError("repetitions must be >= 1");
  if (eval_views.empty()) throw InsufficientData("no frames to benchmark");
  const std::size_t frames = max_frames == 0
                                 ? eval_views.size()
                                 : std::min(max_frames, eval_views.size());
  BenchReport report;
  report.frames = frames;
  report.repetitions = repetitions;
  double graph_total = 0.0;
  double baseline_total = 0.0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (std::size_t i = 0; i < frames; ++i) {
      auto start = Clock::now();
      (void)localize(eval_views[i], db, params, config);
      graph_total +=
          std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      start = Clock::now();
      (void)baseline_localize(eval_views[i], db, config);
      baseline_total +=
          std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
  }
  const double runs = static_cast<double>(frames * repetitions);
  report.graph_ms = graph_total / runs;
  report.baseline_ms = baseline_total / runs;
  return report;
}

std::string bench_csv(const BenchReport& report, const std::string& config_json) {
  std::string out = config_comment(config_json);
  out += "method,mean_ms,frames,repetitions\n";
  out += "graph,";
  append_number(out, report.graph_ms);
  out += ',' + std::to_string(report.frames) + ',' +
         std::to_string(report.repetitions) + '\n';
  out += "baseline,";
  append_number(out, report.baseline_ms);
  out += ',' + std::to_string(report.frames) + ',' +
         std::to_string(report.repetitions) + '\n';
  out += "speedup,";
  append_number(out, report.speedup());
  out += ",,\n";
  return out;
}

std::string svg_bar_chart(const std::vector<std::string>& labels,
                          const std::vector<double>& values,
                          const std::string& title, const std::string& y_label) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kBottom = 60,
                   kTop = 40, kRight = 20;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (!(vmax > 0.0)) vmax = 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
    << "\" height=\"" << kHeight << "\">\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
       "font-size=\"16\">" << escape_xml(title) << "</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
    << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
    << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<text x=\"16\" y=\"" << kTop + plot_h / 2
    << "\" font-size=\"12\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
    << ")\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  s << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4
    << "\" font-size=\"10\" text-anchor=\"end\">" << vmax << "</text>\n";
  const std::size_t n = std::min(labels.size(), values.size());
  const double slot = n ? plot_w / static_cast<double>(n) : plot_w;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = plot_h * std::max(0.0, values[i]) / vmax;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    s << "<rect x=\"" << x << "\" y=\"" << kTop + plot_h - h << "\" width=\""
      << slot * 0.7 << "\" height=\"" << h << "\" fill=\"steelblue\"/>\n";
    s << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kTop + plot_h + 16
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape_xml(labels[i])
      << "</text>\n";
    s << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kTop + plot_h - h - 4
      << "\" font-size=\"10\" text-anchor=\"middle\">" << values[i] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_trajectory(const std::vector<Eigen::Vector2d>& truth,
                           const std::vector<Eigen::Vector2d>& estimate,
                           const std::string& title) {
  constexpr double kSize = 600, kMargin = 40;
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const auto* set : {&truth, &estimate}) {
    for (const auto& p : *set) {
      x0 = std::min(x0, p.x());
      y0 = std::min(y0, p.y());
      x1 = std::max(x1, p.x());
      y1 = std::max(y1, p.y());
    }
  }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  const double scale = (kSize - 2 * kMargin) / std::max(x1 - x0, y1 - y0);
  auto to_svg = [&](const Eigen::Vector2d& p) {
    // World y points up; SVG y points down.
    return Eigen::Vector2d(kMargin + (p.x() - x0) * scale,
                           kSize - kMargin - (p.y() - y0) * scale);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
    << "\" height=\"" << kSize << "\">\n";
  s << "<text x=\"" << kSize / 2 << "\" y=\"24\" text-anchor=\"middle\" "
       "font-size=\"16\">" << escape_xml(title) << "</text>\n";
  auto polyline = [&](const std::vector<Eigen::Vector2d>& pts, const char* color) {
    s << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1\" points=\"";
    for (const auto& p : pts) {
      const Eigen::Vector2d q = to_svg(p);
      s << q.x() << ',' << q.y() << ' ';
    }
    s << "\"/>\n";
  };
  polyline(truth, "green");
  for (const auto& p : estimate) {
    const Eigen::Vector2d q = to_svg(p);
    s << "<circle cx=\"" << q.x() << "\" cy=\"" << q.y()
      << "\" r=\"1.5\" fill=\"red\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace floorloc
