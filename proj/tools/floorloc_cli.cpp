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

// floorloc: command-line driver for dataset generation, training, mapping,
// localization and the evaluation experiments.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "floorloc/dataset.hpp"
#include "floorloc/errors.hpp"
#include "floorloc/eval.hpp"
#include "floorloc/localizer.hpp"
#include "floorloc/map_db.hpp"
#include "floorloc/trainer.hpp"
#include "json.hpp"

using namespace floorloc;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;
constexpr int kExitLocalization = 5;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  usage error or violated precondition\n"
    "  3  data error (missing or malformed file, leakage, divergence)\n"
    "  4  model mismatch (map built by another encoder)\n"
    "  5  localization failure (no position and no rotation)\n";

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kModelMismatch: return kExitModel;
    case ErrorCategory::kLocalization: return kExitLocalization;
    case ErrorCategory::kData:
    case ErrorCategory::kNumeric: return kExitData;
  }
  return kExitData;
}

// Every option of a subcommand with its effective value.
std::string config_json(const CLI::App& app) {
  json j;
  j["command"] = app.get_name();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames()[0];
    if (name == "help") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    j[name] = value;
  }
  return j.dump();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string with_comment(const std::string& config, const std::string& csv) {
  return "# config: " + config + "\n" + csv;
}

// Node count and distance scale the map was built with.
LocalizerConfig map_localizer(const MapDatabase& db) {
  LocalizerConfig c;
  c.node_count = db.node_count();
  c.distance_scale = db.graphs().begin()->second->distance_scale();
  return c;
}

struct LocalizerFlags {
  std::size_t neighbors = 3;
  double eps = 0.0545;
  std::size_t min_pts = 2;
  double ratio = 0.75;
  bool ransac = false;

  void add(CLI::App* app) {
    app->add_option("--neighbors", neighbors, "retrieved map graphs per query (>= 3)");
    app->add_option("--eps", eps, "DBSCAN radius in meters");
    app->add_option("--min-pts", min_pts, "DBSCAN core-point threshold");
    app->add_option("--ratio", ratio, "descriptor ratio-test threshold");
    app->add_flag("--ransac", ransac, "robust homography fit");
  }
  void apply(LocalizerConfig& c) const {
    c.n_neighbors = neighbors;
    c.dbscan_eps = eps;
    c.dbscan_min_pts = min_pts;
    c.ratio = ratio;
    c.use_ransac = ransac;
  }
};

struct TrainFlags {
  std::string data;
  std::size_t nodes = 256;
  double margin = 1.0;
  double lr = 1e-3;
  std::size_t epochs = 1000;
  std::size_t patience = 25;
  bool curriculum = false;
  std::size_t batch = 32;
  std::size_t batches_per_epoch = 1;
  double distance_scale = 1.0;
  std::uint64_t seed = 42;

  void add(CLI::App* app, bool with_nodes) {
    if (with_nodes) app->add_option("--nodes", nodes, "graph nodes per view");
    app->add_option("--margin", margin, "contrastive margin");
    app->add_option("--lr", lr, "SGD learning rate");
    app->add_option("--epochs", epochs, "maximum epochs before the curriculum factor");
    app->add_option("--patience", patience, "early-stopping patience in epochs");
    app->add_flag("--curriculum", curriculum, "easy/medium/hard curriculum, half the epochs");
    app->add_option("--batch", batch, "pairs per batch");
    app->add_option("--batches-per-epoch", batches_per_epoch, "SGD steps per epoch");
    app->add_option("--distance-scale", distance_scale, "factor applied to pixel edge weights");
    app->add_option("--seed", seed, "random seed");
  }
  TrainConfig config() const {
    TrainConfig c;
    c.node_count = nodes;
    c.margin = margin;
    c.learning_rate = lr;
    c.max_epochs = epochs;
    c.patience = patience;
    c.curriculum_enabled = curriculum;
    c.batch_size = batch;
    c.batches_per_epoch = batches_per_epoch;
    c.distance_scale = distance_scale;
    c.seed = seed;
    return c;
  }
};

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw PreconditionError("bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw PreconditionError("empty list");
  return out;
}

std::string pose_json(const ViewRecord& v, const LocalizationResult& r) {
  json j;
  j["view_id"] = v.view_id.value;
  j["x"] = r.pose.x;
  j["y"] = r.pose.y;
  j["r"] = r.pose.r;
  j["position_ok"] = r.position_ok;
  j["rotation_ok"] = r.rotation_ok;
  std::vector<std::uint32_t> ids;
  for (ViewId id : r.neighbor_ids) ids.push_back(id.value);
  j["neighbors"] = ids;
  j["time_ms"] = r.timing.total_us() / 1000.0;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Floor-texture localization with graph embeddings", "floorloc"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "render a synthetic zig-zag traversal (FGDS1)");
  std::vector<double> extent{0, 0, 1, 1};
  double density = 5000, lane = 0.02, step = 0.021, sigma = 0.02, pose_noise = 0.0, phase = 0.0;
  double pad = 0.068;
  bool vertical = false;
  std::uint32_t first_id = 0;
  std::size_t max_views = 0;
  std::uint64_t gen_seed = 42, render_seed = 1;
  std::string gen_out;
  gen->add_option("--extent", extent, "trajectory extent x0 y0 x1 y1 in meters")->expected(4);
  gen->add_option("--density", density, "field features per square meter");
  gen->add_option("--pad", pad, "field margin beyond the extent in meters");
  gen->add_option("--lane-spacing", lane, "distance between zig-zag lanes in meters");
  gen->add_option("--step", step, "distance between views along a lane in meters");
  gen->add_option("--phase", phase, "grid offset in units of lane spacing / step");
  gen->add_flag("--vertical", vertical, "lanes along y instead of x");
  gen->add_option("--sigma", sigma, "descriptor noise std-dev");
  gen->add_option("--pose-noise", pose_noise, "recorded pose noise std-dev in meters");
  gen->add_option("--first-id", first_id, "id of the first view");
  gen->add_option("--max-views", max_views, "evenly subsample to at most this many views (0 = all)");
  gen->add_option("--seed", gen_seed, "field seed");
  gen->add_option("--render-seed", render_seed, "noise seed");
  gen->add_option("--out", gen_out, "output dataset")->required();

  // import
  auto* imp = app.add_subcommand("import", "join external keypoints with poses into FGDS1");
  std::string imp_kp, imp_poses, imp_out;
  CameraModel imp_cam;
  imp->add_option("--keypoints", imp_kp, "keypoint blocks file")->required()->check(CLI::ExistingFile);
  imp->add_option("--poses", imp_poses, "pose table file")->required()->check(CLI::ExistingFile);
  imp->add_option("--width", imp_cam.image_width, "image width in pixels");
  imp->add_option("--height", imp_cam.image_height, "image height in pixels");
  imp->add_option("--footprint-width", imp_cam.footprint_width, "floor width per image in meters");
  imp->add_option("--footprint-height", imp_cam.footprint_height, "floor height per image in meters");
  imp->add_option("--out", imp_out, "output dataset")->required();

  // train
  auto* train = app.add_subcommand("train", "fit the Siamese GCN encoder (FGENC1 + log CSV)");
  TrainFlags tf;
  std::string train_out, train_log;
  train->add_option("--data", tf.data, "mapping dataset")->required()->check(CLI::ExistingFile);
  tf.add(train, true);
  train->add_option("--out", train_out, "output encoder")->required();
  train->add_option("--log", train_log, "training log CSV (default: <out>.csv)");

  // build-map
  auto* bmap = app.add_subcommand("build-map", "encode a dataset into a map database (FGMAP1)");
  std::string bm_data, bm_enc, bm_out;
  std::size_t bm_nodes = 256;
  double bm_scale = 1.0;
  bmap->add_option("--data", bm_data, "mapping dataset")->required()->check(CLI::ExistingFile);
  bmap->add_option("--encoder", bm_enc, "encoder file")->required()->check(CLI::ExistingFile);
  bmap->add_option("--nodes", bm_nodes, "graph nodes per view");
  bmap->add_option("--distance-scale", bm_scale, "factor applied to pixel edge weights");
  bmap->add_option("--out", bm_out, "output map")->required();

  // localize
  auto* loc = app.add_subcommand("localize", "localize query views, one JSON line per view");
  std::string lc_map, lc_enc, lc_query;
  std::vector<std::uint32_t> lc_views;
  LocalizerFlags lf;
  loc->add_option("--map", lc_map, "map file")->required()->check(CLI::ExistingFile);
  loc->add_option("--encoder", lc_enc, "encoder file")->required()->check(CLI::ExistingFile);
  loc->add_option("--query", lc_query, "dataset holding the query views")->required()->check(CLI::ExistingFile);
  loc->add_option("--view", lc_views, "view ids to localize (default: all)");
  lf.add(loc);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a traversal against a map (report CSV)");
  std::string ev_map, ev_enc, ev_data, ev_out, ev_method = "graph";
  bool ev_no_timing = false;
  LocalizerFlags ef;
  ev->add_option("--map", ev_map, "map file")->required()->check(CLI::ExistingFile);
  ev->add_option("--encoder", ev_enc, "encoder file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "evaluation dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--method", ev_method, "graph or baseline")->check(CLI::IsMember({"graph", "baseline"}));
  ev->add_flag("--no-timing", ev_no_timing, "omit the timing column");
  ev->add_option("--out", ev_out, "report CSV")->required();
  ef.add(ev);

  // sweep-nodes
  auto* sn = app.add_subcommand("sweep-nodes", "position/rotation/failure per graph node count");
  std::string sn_eval, sn_enc, sn_out, sn_list = "16,32,64,128,192,256,384,512";
  TrainFlags sf;
  LocalizerFlags snl;
  sn->add_option("--data", sf.data, "mapping dataset")->required()->check(CLI::ExistingFile);
  sn->add_option("--eval-data", sn_eval, "evaluation dataset")->required()->check(CLI::ExistingFile);
  sn->add_option("--node-counts", sn_list, "comma-separated node counts");
  sn->add_option("--encoder", sn_enc, "reuse this encoder instead of training per setting");
  sf.add(sn, false);
  snl.add(sn);
  sn->add_option("--out", sn_out, "sweep CSV")->required();

  // sweep-neighbors
  auto* snb = app.add_subcommand("sweep-neighbors", "accuracy and runtime per neighbor count");
  std::string nb_map, nb_enc, nb_data, nb_out, nb_list = "3,7,9,11,15,19";
  std::size_t nb_baseline = 20;
  LocalizerFlags nbl;
  snb->add_option("--map", nb_map, "map file")->required()->check(CLI::ExistingFile);
  snb->add_option("--encoder", nb_enc, "encoder file")->required()->check(CLI::ExistingFile);
  snb->add_option("--data", nb_data, "evaluation dataset")->required()->check(CLI::ExistingFile);
  snb->add_option("--neighbor-counts", nb_list, "comma-separated neighbor counts");
  snb->add_option("--baseline-frames", nb_baseline, "frames for the baseline row (0 = all)");
  nbl.add(snb);
  snb->add_option("--out", nb_out, "sweep CSV")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "per-frame runtime of graph pipeline vs baseline");
  std::string bn_map, bn_enc, bn_data, bn_out, bn_svg;
  std::size_t bn_reps = 1, bn_frames = 10;
  LocalizerFlags bnl;
  bench->add_option("--map", bn_map, "map file")->required()->check(CLI::ExistingFile);
  bench->add_option("--encoder", bn_enc, "encoder file")->required()->check(CLI::ExistingFile);
  bench->add_option("--data", bn_data, "evaluation dataset")->required()->check(CLI::ExistingFile);
  bench->add_option("--reps", bn_reps, "repetitions per frame");
  bench->add_option("--frames", bn_frames, "frames to time (0 = all)");
  bnl.add(bench);
  bench->add_option("--out", bn_out, "runtime CSV")->required();
  bench->add_option("--svg", bn_svg, "bar chart (default: <out>.svg)");

  // best10
  auto* b10 = app.add_subcommand("best10", "best-out-of-10 pixel distance without poses");
  std::string b10_data, b10_enc, b10_out;
  std::uint64_t b10_seed = 42;
  std::size_t b10_nodes = 256;
  double b10_scale = 1.0;
  bool b10_control = false;
  LocalizerFlags b10l;
  b10l.eps = 404.0;
  b10->add_option("--data", b10_data, "dataset")->required()->check(CLI::ExistingFile);
  b10->add_option("--encoder", b10_enc, "encoder file")->required()->check(CLI::ExistingFile);
  b10->add_option("--seed", b10_seed, "query selection seed");
  b10->add_option("--nodes", b10_nodes, "graph nodes per view");
  b10->add_option("--distance-scale", b10_scale, "factor applied to pixel edge weights");
  b10->add_flag("--control", b10_control, "keep each query in its map");
  b10l.add(b10);
  b10->get_option("--eps")->description("DBSCAN radius in stitched-image pixels");
  b10->add_option("--out", b10_out, "per-trial CSV (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const Extent ext{extent[0], extent[1], extent[2], extent[3]};
      if (!(ext.width() > 0 && ext.height() > 0)) throw InvalidExtent("extent must have positive size");
      const FeatureField field =
          generate_field({ext.x0 - pad, ext.y0 - pad, ext.x1 + pad, ext.y1 + pad}, density, gen_seed);
      std::vector<Pose> poses = zigzag_trajectory(ext, lane, step, {vertical, phase});
      if (max_views > 0 && poses.size() > max_views) {
        std::vector<Pose> kept;
        const std::size_t stride = (poses.size() + max_views - 1) / max_views;
        for (std::size_t i = 0; i < poses.size(); i += stride) kept.push_back(poses[i]);
        poses = std::move(kept);
      }
      RenderOptions opt;
      opt.noise_sigma = sigma;
      opt.pose_noise = pose_noise;
      opt.first_id = first_id;
      opt.seed = render_seed;
      Dataset ds;
      ds.field_seed = gen_seed;
      ds.views = render_trajectory(field, poses, ds.camera, opt);
      ds.config_json = config_json(*gen);
      write_dataset(ds, gen_out);
      std::cout << "wrote " << ds.views.size() << " views to " << gen_out << "\n";
    } else if (imp->parsed()) {
      validate(imp_cam);
      Dataset ds;
      ds.camera = imp_cam;
      ds.views = import_keypoints(imp_kp, imp_poses, imp_cam);
      ds.config_json = config_json(*imp);
      write_dataset(ds, imp_out);
      std::cout << "imported " << ds.views.size() << " views to " << imp_out << "\n";
    } else if (train->parsed()) {
      const Dataset ds = read_dataset(tf.data);
      const TrainResult r = fit(ds.views, ds.camera, tf.config());
      save_params(r.params, train_out);
      write_text(train_log.empty() ? train_out + ".csv" : train_log,
                 with_comment(config_json(*train), training_log_csv(r.log)));
      std::cout << "trained " << r.log.size() << " epochs, best epoch " << r.best_epoch
                << ", wrote " << train_out << "\n";
    } else if (bmap->parsed()) {
      const Dataset ds = read_dataset(bm_data);
      const EncoderParams params = load_params(bm_enc);
      BuildLog log;
      const MapDatabase db = build_map(ds.views, params, bm_nodes, bm_scale, &log);
      save_map(db, bm_out);
      for (const auto& s : log.skipped) std::cerr << "skipped " << s << "\n";
      std::cout << "mapped " << db.size() << " views to " << bm_out << "\n";
    } else if (loc->parsed()) {
      const EncoderParams params = load_params(lc_enc);
      const MapDatabase db = load_map(lc_map, fingerprint(params));
      LocalizerConfig cfg = map_localizer(db);
      lf.apply(cfg);
      const Dataset ds = read_dataset(lc_query);
      bool any_lost = false;
      std::size_t done = 0;
      for (const ViewRecord& v : ds.views) {
        if (!lc_views.empty() &&
            std::find(lc_views.begin(), lc_views.end(), v.view_id.value) == lc_views.end()) {
          continue;
        }
        const LocalizationResult r = localize(v, db, params, cfg);
        std::cout << pose_json(v, r) << "\n";
        any_lost = any_lost || (!r.position_ok && !r.rotation_ok);
        ++done;
      }
      if (done == 0) throw PreconditionError("no matching query views");
      if (any_lost) return kExitLocalization;
    } else if (ev->parsed()) {
      const EncoderParams params = load_params(ev_enc);
      const MapDatabase db = load_map(ev_map, fingerprint(params));
      LocalizerConfig cfg = map_localizer(db);
      ef.apply(cfg);
      const Dataset ds = read_dataset(ev_data);
      const EvalReport r = evaluate(ds.views, db, params, cfg,
                                    ev_method == "graph" ? Method::kGraph : Method::kBaseline,
                                    config_json(*ev));
      write_text(ev_out, report_csv(r, !ev_no_timing));
      std::printf("frames %zu, median position %.4f m, median rotation %.4f deg, failures %.2f %%\n",
                  r.frames, r.median_position_error, r.median_rotation_error, r.failure_rate);
    } else if (sn->parsed()) {
      const Dataset map_ds = read_dataset(sf.data);
      const Dataset eval_ds = read_dataset(sn_eval);
      NodeSweepConfig cfg;
      cfg.train = sf.config();
      cfg.localizer.distance_scale = sf.distance_scale;
      snl.apply(cfg.localizer);
      if (!sn_enc.empty()) cfg.fixed_encoder = load_params(sn_enc);
      const auto rows = sweep_nodes(map_ds.views, eval_ds.views, map_ds.camera,
                                    parse_list(sn_list), cfg);
      write_text(sn_out, sweep_csv(rows, false, config_json(*sn)));
      for (const auto& r : rows) {
        if (r.failed) std::cerr << r.setting << ": " << r.error << "\n";
      }
    } else if (snb->parsed()) {
      const EncoderParams params = load_params(nb_enc);
      const MapDatabase db = load_map(nb_map, fingerprint(params));
      LocalizerConfig cfg = map_localizer(db);
      nbl.apply(cfg);
      const Dataset ds = read_dataset(nb_data);
      const auto rows = sweep_neighbors(ds.views, db, params, parse_list(nb_list), cfg, nb_baseline);
      write_text(nb_out, sweep_csv(rows, true, config_json(*snb)));
      for (const auto& r : rows) {
        if (r.failed) std::cerr << r.setting << ": " << r.error << "\n";
      }
    } else if (bench->parsed()) {
      const EncoderParams params = load_params(bn_enc);
      const MapDatabase db = load_map(bn_map, fingerprint(params));
      LocalizerConfig cfg = map_localizer(db);
      bnl.apply(cfg);
      const Dataset ds = read_dataset(bn_data);
      const BenchReport b = bench_runtime(ds.views, db, params, cfg, bn_reps, bn_frames);
      const std::string config = config_json(*bench);
      write_text(bn_out, bench_csv(b, config));
      write_text(bn_svg.empty() ? bn_out + ".svg" : bn_svg,
                 svg_bar_chart({"graph", "baseline"}, {b.graph_ms, b.baseline_ms},
                               "Mean time per frame", "ms"));
      std::printf("graph %.3f ms, baseline %.3f ms, speedup %.1f\n", b.graph_ms, b.baseline_ms,
                  b.speedup());
    } else if (b10->parsed()) {
      const Dataset ds = read_dataset(b10_data);
      const EncoderParams params = load_params(b10_enc);
      LocalizerConfig cfg;
      cfg.node_count = b10_nodes;
      cfg.distance_scale = b10_scale;
      b10l.apply(cfg);
      const Best10Report r = best_out_of_10(ds.views, stitched_positions(ds.views), params, cfg,
                                            b10_seed, !b10_control);
      if (!b10_out.empty()) {
        std::string csv = "query,truth_px_x,truth_px_y,est_px_x,est_px_y,distance_px\n";
        for (const auto& t : r.trials) {
          char buf[256];
          std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g,%.17g,%.17g,%.17g\n", t.query.value,
                        t.truth.x(), t.truth.y(), t.estimate.x(), t.estimate.y(), t.distance_px);
          csv += buf;
        }
        write_text(b10_out, with_comment(config_json(*b10), csv));
      }
      json j;
      j["best_distance_px"] = r.best_distance_px;
      j["trials"] = r.trials.size();
      std::cout << j.dump() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
