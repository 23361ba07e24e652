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

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "floorloc/dataset.hpp"
#include "floorloc/errors.hpp"
#include "floorloc/eval.hpp"
#include "floorloc/geometry.hpp"
#include "floorloc/localizer.hpp"
#include "floorloc/map_db.hpp"
#include "floorloc/trainer.hpp"

namespace py = pybind11;
using namespace floorloc;

namespace {

py::array_t<float> descriptor_array(const Descriptor& d) {
  py::array_t<float> out(kDescriptorSize);
  std::copy(d.begin(), d.end(), out.mutable_data());
  return out;
}

Descriptor to_descriptor(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != kDescriptorSize) {
    throw ShapeError("descriptor must have 128 entries");
  }
  Descriptor d;
  std::copy(a.data(), a.data() + kDescriptorSize, d.begin());
  return d;
}

std::vector<Eigen::Vector2d> to_points(const Eigen::MatrixX2d& m) {
  std::vector<Eigen::Vector2d> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m(i, 0), m(i, 1));
  return out;
}

template <typename T>
void register_error(py::module_& m, const char* name, py::handle base) {
  py::register_exception<T>(m, name, base);
}

}  // namespace

PYBIND11_MODULE(_floorloc, m) {
  m.doc() = "Floor-texture localization with graph convolutional embeddings";

  auto& base = py::register_exception<Error>(m, "FloorlocError", PyExc_RuntimeError);
  register_error<PreconditionError>(m, "PreconditionError", base);
  register_error<ShapeError>(m, "ShapeError", base);
  register_error<EmptyView>(m, "EmptyView", base);
  register_error<InvalidExtent>(m, "InvalidExtent", base);
  register_error<InsufficientData>(m, "InsufficientData", base);
  register_error<VersionError>(m, "VersionError", base);
  register_error<JoinError>(m, "JoinError", base);
  register_error<SchemaError>(m, "SchemaError", base);
  register_error<FormatError>(m, "FormatError", base);
  register_error<ParseError>(m, "ParseError", base);
  register_error<EmptyDatabase>(m, "EmptyDatabase", base);
  register_error<LeakageError>(m, "LeakageError", base);
  register_error<EncoderMismatch>(m, "EncoderMismatch", base);
  register_error<TooFewMatches>(m, "TooFewMatches", base);
  register_error<DegenerateConfiguration>(m, "DegenerateConfiguration", base);
  register_error<NoCluster>(m, "NoCluster", base);
  register_error<NonFiniteLoss>(m, "NonFiniteLoss", base);

  m.def("wrap_degrees", &wrap_degrees);

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](double x, double y, double r) { return Pose{x, y, r}; }),
           py::arg("x"), py::arg("y"), py::arg("r") = 0.0)
      .def_readwrite("x", &Pose::x)
      .def_readwrite("y", &Pose::y)
      .def_readwrite("r", &Pose::r)
      .def(py::self == py::self)
      .def("__repr__", [](const Pose& p) {
        return "Pose(x=" + std::to_string(p.x) + ", y=" + std::to_string(p.y) +
               ", r=" + std::to_string(p.r) + ")";
      });

  py::class_<CameraModel>(m, "CameraModel")
      .def(py::init<>())
      .def_readwrite("image_width", &CameraModel::image_width)
      .def_readwrite("image_height", &CameraModel::image_height)
      .def_readwrite("footprint_width", &CameraModel::footprint_width)
      .def_readwrite("footprint_height", &CameraModel::footprint_height)
      .def("meters_per_pixel_x", &CameraModel::meters_per_pixel_x)
      .def("meters_per_pixel_y", &CameraModel::meters_per_pixel_y);

  py::class_<Keypoint>(m, "Keypoint")
      .def(py::init<>())
      .def_readwrite("m", &Keypoint::m)
      .def_readwrite("n", &Keypoint::n)
      .def_readwrite("response", &Keypoint::response)
      .def_property(
          "descriptor", [](const Keypoint& k) { return descriptor_array(k.descriptor); },
          [](Keypoint& k, py::array_t<float> a) { k.descriptor = to_descriptor(a); });

  py::class_<ViewRecord>(m, "ViewRecord")
      .def(py::init<>())
      .def_property(
          "view_id", [](const ViewRecord& v) { return v.view_id.value; },
          [](ViewRecord& v, std::uint32_t id) { v.view_id = ViewId{id}; })
      .def_readwrite("pose", &ViewRecord::pose)
      .def_readwrite("keypoints", &ViewRecord::keypoints)
      .def_readwrite("camera", &ViewRecord::camera)
      .def(py::self == py::self);

  py::class_<Extent>(m, "Extent")
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return Extent{x0, y0, x1, y1};
           }),
           py::arg("x0") = 0.0, py::arg("y0") = 0.0, py::arg("x1") = 1.0, py::arg("y1") = 1.0)
      .def_readwrite("x0", &Extent::x0)
      .def_readwrite("y0", &Extent::y0)
      .def_readwrite("x1", &Extent::x1)
      .def_readwrite("y1", &Extent::y1);

  py::class_<FeatureField>(m, "FeatureField")
      .def_property_readonly("size", [](const FeatureField& f) { return f.features.size(); })
      .def_readonly("extent", &FeatureField::extent);

  py::class_<RenderOptions>(m, "RenderOptions")
      .def(py::init<>())
      .def_readwrite("noise_sigma", &RenderOptions::noise_sigma)
      .def_readwrite("pose_noise", &RenderOptions::pose_noise)
      .def_readwrite("first_id", &RenderOptions::first_id)
      .def_readwrite("seed", &RenderOptions::seed)
      .def_readwrite("skip_empty", &RenderOptions::skip_empty);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("camera", &Dataset::camera)
      .def_readwrite("field_seed", &Dataset::field_seed)
      .def_readwrite("views", &Dataset::views)
      .def_readwrite("config_json", &Dataset::config_json);

  m.def("generate_field", &generate_field, py::arg("extent"), py::arg("density"),
        py::arg("seed"));
  m.def(
      "zigzag_trajectory",
      [](const Extent& e, double lane, double step, bool vertical, double phase) {
        return zigzag_trajectory(e, lane, step, {vertical, phase});
      },
      py::arg("extent"), py::arg("lane_spacing"), py::arg("step"), py::arg("vertical") = false,
      py::arg("phase") = 0.0);
  m.def("render_view",
        [](const FeatureField& f, const Pose& p, const CameraModel& c, double sigma,
           std::uint64_t seed, std::uint32_t id) { return render_view(f, p, c, sigma, seed, ViewId{id}); },
        py::arg("field"), py::arg("pose"), py::arg("camera") = CameraModel{},
        py::arg("noise_sigma") = 0.0, py::arg("seed") = 0, py::arg("view_id") = 0);
  m.def("render_trajectory", &render_trajectory, py::arg("field"), py::arg("poses"),
        py::arg("camera") = CameraModel{}, py::arg("options") = RenderOptions{});
  m.def("write_dataset", &write_dataset);
  m.def("read_dataset", &read_dataset);
  m.def("import_keypoints", &import_keypoints, py::arg("keypoints"), py::arg("poses"),
        py::arg("camera") = CameraModel{});

  m.def(
      "normalize_adjacency",
      [](const std::vector<Keypoint>& k, double scale) {
        return normalize_adjacency(FloorGraph(ViewId{}, k, scale)).matrix;
      },
      py::arg("keypoints"), py::arg("distance_scale") = 1.0,
      "D^-1/2 (A + I) D^-1/2 of the complete pixel-distance graph over the keypoints.");

  py::class_<EncoderDims>(m, "EncoderDims")
      .def(py::init([](std::uint32_t h0, std::uint32_t h1, std::uint32_t h2) {
             return EncoderDims{h0, h1, h2};
           }),
           py::arg("h0") = 64, py::arg("h1") = 64, py::arg("h2") = 32)
      .def_readwrite("h0", &EncoderDims::h0)
      .def_readwrite("h1", &EncoderDims::h1)
      .def_readwrite("h2", &EncoderDims::h2);

  py::class_<EncoderParams>(m, "EncoderParams")
      .def_property_readonly("dims", &EncoderParams::dims)
      .def_property_readonly("w0", &EncoderParams::w0)
      .def_property_readonly("w1", &EncoderParams::w1)
      .def_property_readonly("w2", &EncoderParams::w2)
      .def_property_readonly("gate", &EncoderParams::gate)
      .def_property_readonly("bias", &EncoderParams::bias)
      .def("parameter_count", &EncoderParams::parameter_count)
      .def("fingerprint", [](const EncoderParams& p) { return fingerprint(p); })
      .def(py::self == py::self);

  m.def("init_params", &init_params, py::arg("seed"), py::arg("dims") = EncoderDims{});
  m.def("save_params", &save_params);
  m.def("load_params", &load_params);
  m.def(
      "encode",
      [](const EncoderParams& p, const ViewRecord& v, std::size_t nodes, double scale) {
        return encode(p, build_graph(v.keypoints, nodes, v.view_id, scale)).values;
      },
      py::arg("params"), py::arg("view"), py::arg("node_count") = 256,
      py::arg("distance_scale") = 1.0, "Graph-level embedding of one view.");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("margin", &TrainConfig::margin)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("batches_per_epoch", &TrainConfig::batches_per_epoch)
      .def_readwrite("validation_pairs", &TrainConfig::validation_pairs)
      .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("curriculum_enabled", &TrainConfig::curriculum_enabled)
      .def_readwrite("curriculum_epoch_factor", &TrainConfig::curriculum_epoch_factor)
      .def_readwrite("node_count", &TrainConfig::node_count)
      .def_readwrite("distance_scale", &TrainConfig::distance_scale)
      .def_readwrite("dims", &TrainConfig::dims);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_property_readonly("log_csv",
                             [](const TrainResult& r) { return training_log_csv(r.log); })
      .def_property_readonly("train_loss", [](const TrainResult& r) {
        std::vector<double> out;
        for (const auto& e : r.log) out.push_back(e.train_loss);
        return out;
      });

  m.def("fit", &fit, py::arg("views"), py::arg("camera") = CameraModel{},
        py::arg("config") = TrainConfig{}, py::call_guard<py::gil_scoped_release>());

  py::class_<MapDatabase>(m, "MapDatabase")
      .def_property_readonly("size", &MapDatabase::size)
      .def_property_readonly("node_count", &MapDatabase::node_count)
      .def_property_readonly("encoder_fingerprint", &MapDatabase::encoder_fingerprint)
      .def("contains", [](const MapDatabase& db, std::uint32_t id) { return db.contains(ViewId{id}); })
      .def("without", [](const MapDatabase& db, std::uint32_t id) { return db.without(ViewId{id}); })
      .def("view_ids",
           [](const MapDatabase& db) {
             std::vector<std::uint32_t> ids;
             for (const auto& r : db.records()) ids.push_back(r.view_id.value);
             return ids;
           })
      .def("knn",
           [](const MapDatabase& db, const Eigen::VectorXd& q, std::size_t n) {
             std::vector<std::pair<std::uint32_t, double>> out;
             for (const Neighbor& nb : knn_query(db, Embedding{q}, n)) {
               out.emplace_back(nb.record.view_id.value, nb.distance);
             }
             return out;
           },
           py::arg("embedding"), py::arg("n"), "(view id, distance) of the n nearest records.")
      .def(py::self == py::self);

  m.def(
      "build_map",
      [](const std::vector<ViewRecord>& views, const EncoderParams& p, std::size_t nodes,
         double scale) { return build_map(views, p, nodes, scale); },
      py::arg("views"), py::arg("params"), py::arg("node_count") = 256,
      py::arg("distance_scale") = 1.0);
  m.def("save_map", &save_map);
  m.def("load_map", &load_map, py::arg("path"), py::arg("expected_fingerprint") = py::none());

  py::class_<LocalizerConfig>(m, "LocalizerConfig")
      .def(py::init<>())
      .def_readwrite("node_count", &LocalizerConfig::node_count)
      .def_readwrite("n_neighbors", &LocalizerConfig::n_neighbors)
      .def_readwrite("dbscan_eps", &LocalizerConfig::dbscan_eps)
      .def_readwrite("dbscan_min_pts", &LocalizerConfig::dbscan_min_pts)
      .def_readwrite("ratio", &LocalizerConfig::ratio)
      .def_readwrite("distance_scale", &LocalizerConfig::distance_scale)
      .def_readwrite("use_ransac", &LocalizerConfig::use_ransac);

  py::class_<LocalizationResult>(m, "LocalizationResult")
      .def_readonly("pose", &LocalizationResult::pose)
      .def_readonly("position_ok", &LocalizationResult::position_ok)
      .def_readonly("rotation_ok", &LocalizationResult::rotation_ok)
      .def_property_readonly("neighbor_ids",
                             [](const LocalizationResult& r) {
                               std::vector<std::uint32_t> ids;
                               for (ViewId id : r.neighbor_ids) ids.push_back(id.value);
                               return ids;
                             })
      .def_readonly("neighbor_scores", &LocalizationResult::neighbor_scores)
      .def_readonly("rotation_candidates", &LocalizationResult::rotation_candidates)
      .def_property_readonly("time_us",
                             [](const LocalizationResult& r) { return r.timing.total_us(); });

  m.def("localize", &localize, py::arg("view"), py::arg("db"), py::arg("params"),
        py::arg("config") = LocalizerConfig{});
  m.def("baseline_localize", &baseline_localize, py::arg("view"), py::arg("db"),
        py::arg("config") = LocalizerConfig{});

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("median_position_error", &EvalReport::median_position_error)
      .def_readonly("median_rotation_error", &EvalReport::median_rotation_error)
      .def_readonly("failure_rate", &EvalReport::failure_rate)
      .def_readonly("frames", &EvalReport::frames)
      .def("csv", [](const EvalReport& r, bool timing) { return report_csv(r, timing); },
           py::arg("include_timing") = true);

  m.def(
      "evaluate",
      [](const std::vector<ViewRecord>& views, const MapDatabase& db, const EncoderParams& p,
         const LocalizerConfig& c, bool baseline) {
        return evaluate(views, db, p, c, baseline ? Method::kBaseline : Method::kGraph);
      },
      py::arg("views"), py::arg("db"), py::arg("params"), py::arg("config") = LocalizerConfig{},
      py::arg("baseline") = false);
  m.def("rotation_error", &rotation_error);

  m.def("dbscan",
        [](const Eigen::MatrixX2d& pts, double eps, std::size_t min_pts) {
          return dbscan(to_points(pts), eps, min_pts);
        },
        py::arg("points"), py::arg("eps"), py::arg("min_pts"),
        "Cluster labels of an (N, 2) array; -1 marks noise.");
  m.def("circular_median",
        [](const std::vector<double>& deg) { return circular_median(deg); });
  m.def(
      "rotation_from_homography",
      [](const Eigen::Matrix3d& h) { return rotation_from_homography(Homography{h}); });
}
