// Copyright 2026 The pathpose Authors
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

// Python bindings. Datasets and models stay C++ objects; array views are
// copied out as numpy arrays.

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pathpose/checkpoint.hpp"
#include "pathpose/data_io.hpp"
#include "pathpose/error.hpp"
#include "pathpose/eval.hpp"
#include "pathpose/geometry.hpp"
#include "pathpose/model.hpp"
#include "pathpose/run_config.hpp"
#include "pathpose/scene.hpp"
#include "pathpose/training.hpp"

namespace py = pybind11;
using namespace pathpose;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

struct Dataset {
  std::vector<FrameRecord> frames;

  int n_classes() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().detections.n_classes());
  }
};

Array presence(const Dataset& d) {
  const auto n = static_cast<py::ssize_t>(d.frames.size());
  const py::ssize_t c = d.n_classes();
  Array out({n, c});
  auto v = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    for (py::ssize_t k = 0; k < c; ++k) v(i, k) = d.frames[i].detections.slots[k].presence;
  }
  return out;
}

Array boxes(const Dataset& d) {
  const auto n = static_cast<py::ssize_t>(d.frames.size());
  const py::ssize_t c = d.n_classes();
  Array out({n, c, py::ssize_t{4}});
  auto v = out.mutable_unchecked<3>();
  for (py::ssize_t i = 0; i < n; ++i) {
    for (py::ssize_t k = 0; k < c; ++k) {
      const BBox& b = d.frames[i].detections.slots[k].box;
      v(i, k, 0) = b.cx;
      v(i, k, 1) = b.cy;
      v(i, k, 2) = b.w;
      v(i, k, 3) = b.h;
    }
  }
  return out;
}

// depth, pitch (deg), yaw (deg); NaN rows for frames without a pose.
Array poses(const Dataset& d) {
  const auto n = static_cast<py::ssize_t>(d.frames.size());
  Array out({n, py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& p = d.frames[i].pose;
    v(i, 0) = p ? p->depth : NAN;
    v(i, 1) = p ? p->pitch.deg() : NAN;
    v(i, 2) = p ? p->yaw.deg() : NAN;
  }
  return out;
}

Array latents_array(const std::vector<LatentCode>& codes) {
  Array out({static_cast<py::ssize_t>(codes.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < v.shape(0); ++i) {
    v(i, 0) = codes[i].z1;
    v(i, 1) = codes[i].z2;
    v(i, 2) = codes[i].z3;
  }
  return out;
}

std::vector<BBox> boxes_from(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 4) throw InputError("boxes must have shape (n, 4)");
  auto v = a.unchecked<2>();
  std::vector<BBox> out;
  for (py::ssize_t i = 0; i < v.shape(0); ++i) out.push_back(BBox{v(i, 0), v(i, 1), v(i, 2), v(i, 3)});
  return out;
}

RunConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return reference_desk_config();
  const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return run_config_from_json(nlohmann::json::parse(text));
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pathpose core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<InputError>(m, "InputError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.def("rotation_matrix",
        [](double pitch_deg, double yaw_deg) {
          const Mat3 r = rotation_matrix(Angle::degrees(pitch_deg), Angle::degrees(yaw_deg)).matrix();
          Array out({py::ssize_t{3}, py::ssize_t{3}});
          auto v = out.mutable_unchecked<2>();
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) v(i, j) = r(i, j);
          return out;
        },
        py::arg("pitch_deg"), py::arg("yaw_deg"));
  m.def("rotate_centers",
        [](const Array& b, double pitch_deg, double yaw_deg) {
          const auto in = boxes_from(b);
          const auto rotated =
              rotate_centers(in, rotation_matrix(Angle::degrees(pitch_deg), Angle::degrees(yaw_deg)));
          Array out({static_cast<py::ssize_t>(rotated.size()), py::ssize_t{4}});
          auto v = out.mutable_unchecked<2>();
          for (py::ssize_t i = 0; i < v.shape(0); ++i) {
            v(i, 0) = rotated[i].cx;
            v(i, 1) = rotated[i].cy;
            v(i, 2) = rotated[i].w;
            v(i, 3) = rotated[i].h;
          }
          return out;
        },
        py::arg("boxes"), py::arg("pitch_deg"), py::arg("yaw_deg"),
        "Rotation-only homography on box centers; rows are (cx, cy, w, h).");
  m.def("latent_to_degrees", [](double z) { return latent_to_angle(z).deg(); });
  m.def("degrees_to_latent", [](double deg) { return angle_to_latent(Angle::degrees(deg)); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  });
  m.def("guidance_delta",
        [](std::array<double, 3> current, std::array<double, 3> reference) {
          const auto d = guidance_delta(LatentCode{current[0], current[1], current[2]},
                                        LatentCode{reference[0], reference[1], reference[2]});
          return py::make_tuple(d.d_pitch_deg, d.d_yaw_deg, d.d_path);
        },
        py::arg("current"), py::arg("reference"),
        "(d_pitch_deg, d_yaw_deg, d_path) steering current toward reference.");

  m.def("reference_config", [] { return to_python(to_json(reference_desk_config())); },
        "The desk-scale run config as a dict.");

  py::class_<Dataset>(m, "Dataset")
      .def_static("read", [](const std::filesystem::path& p) { return Dataset{read_dataset(p)}; })
      .def_static(
          "generate",
          [](int frames, int passes, std::uint64_t seed, int structures, std::uint64_t scene_seed,
             const std::string& video_id) {
            TrajectoryConfig t;
            t.n_frames = frames;
            t.n_passes = passes;
            t.seed = seed;
            return Dataset{to_records(generate_trajectory(default_scene(structures, scene_seed), t),
                                      video_id)};
          },
          py::arg("frames") = 4000, py::arg("passes") = 4, py::arg("seed") = 7,
          py::arg("structures") = 8, py::arg("scene_seed") = 7, py::arg("video_id") = "synthetic")
      .def_static("from_yolo",
                  [](const std::filesystem::path& dir, int classes, std::set<int> drop, int stride) {
                    return Dataset{ingest_yolo_labels(dir, ClassMap::dropping(classes, std::move(drop)),
                                                      stride)};
                  },
                  py::arg("dir"), py::arg("classes") = 16, py::arg("drop") = std::set<int>{},
                  py::arg("stride") = 1)
      .def("write", [](const Dataset& d, const std::filesystem::path& p) { write_dataset(d.frames, p); })
      .def("export_yolo",
           [](const Dataset& d, const std::filesystem::path& dir) { export_yolo_labels(d.frames, dir); })
      .def("__len__", [](const Dataset& d) { return d.frames.size(); })
      .def_property_readonly("n_classes", &Dataset::n_classes)
      .def_property_readonly("video_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& f : d.frames) ids.push_back(f.video_id);
                               return ids;
                             })
      .def_property_readonly("frame_indices",
                             [](const Dataset& d) {
                               std::vector<int> idx;
                               for (const auto& f : d.frames) idx.push_back(f.frame_index);
                               return idx;
                             })
      .def_property_readonly("presence", &presence)
      .def_property_readonly("boxes", &boxes)
      .def_property_readonly("poses", &poses, "(depth, pitch_deg, yaw_deg) per frame; NaN if unknown")
      .def("window_count", [](const Dataset& d, int s) { return windows(d.frames, s).size(); })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a.frames == b.frames; });

  py::class_<ModelParams>(m, "Model")
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p); })
      .def_static("init",
                  [](const py::object& cfg) { return init_params(config_from(cfg).model); },
                  py::arg("config") = py::none())
      .def("save", [](const ModelParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def_property_readonly("parameter_count", [](const ModelParams& p) { return p.parameter_count(); })
      .def_property_readonly("config", [](const ModelParams& p) { return to_python(to_json(p.config)); })
      .def("encode",
           [](const ModelParams& p, const Dataset& d) {
             const auto wins = windows(d.frames, p.config.seq_len);
             return latents_array(model_predictor(p)(d.frames, wins));
           },
           "Latent (z1, z2, z3) of every window, one row per window end frame.");

  m.def("train",
        [](const Dataset& d, const py::object& cfg, bool rotation, const py::object& on_epoch) {
          RunConfig rc = config_from(cfg);
          rc.model.n_classes = d.n_classes();
          rc.model.rotation_enabled = rotation;
          EpochCallback cb;
          if (!on_epoch.is_none()) {
            cb = [&on_epoch](int epoch, const LossBreakdown& l, const ModelParams&) {
              on_epoch(epoch, l.total);
            };
          }
          TrainResult result;
          {
            py::gil_scoped_release release;
            if (cb) {
              cb = [cb](int e, const LossBreakdown& l, const ModelParams& p) {
                py::gil_scoped_acquire acquire;
                cb(e, l, p);
              };
            }
            result = train(d.frames, rc.model, rc.training, cb);
          }
          std::vector<double> history;
          for (const auto& l : result.history) history.push_back(l.total);
          return py::make_tuple(std::move(result.params), history);
        },
        py::arg("dataset"), py::arg("config") = py::none(), py::arg("rotation") = true,
        py::arg("on_epoch") = py::none(),
        "Train on a dataset; returns (model, per-epoch mean loss). `config` is a run-config "
        "dict (default: the reference config); the class count follows the dataset.");

  m.def("evaluate",
        [](const ModelParams* model, const Dataset& d, const py::object& cfg, double corridor_length) {
          const EvalConfig ec = config_from(cfg).eval;
          if (model == nullptr) {
            return to_python(to_json(evaluate(oracle_predictor(corridor_length), d.frames,
                                              reference_desk_config().model.seq_len, ec, "oracle")));
          }
          return to_python(to_json(evaluate(model_predictor(*model), d.frames, model->config.seq_len,
                                            ec, model->config.rotation_enabled ? "rotation"
                                                                               : "no-rotation")));
        },
        py::arg("model"), py::arg("dataset"), py::arg("config") = py::none(),
        py::arg("corridor_length") = 10.0,
        "Evaluation report as a dict. model=None scores the depth oracle instead.");
}
