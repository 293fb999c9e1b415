#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "movdet/config.hpp"
#include "movdet/evaluation.hpp"
#include "movdet/pipeline.hpp"
#include "movdet/synth.hpp"

namespace py = pybind11;
using namespace movdet;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

RgbImage to_rgb(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an HxWx3 uint8 array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

template <typename T, typename A>
Plane<T> to_plane(const A& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Plane<T> p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), p.values().begin());
  return p;
}

template <typename T>
py::array_t<T> to_array(const Plane<T>& p) {
  py::array_t<T> a({p.height(), p.width()});
  std::copy(p.values().begin(), p.values().end(), a.mutable_data());
  return a;
}

py::array_t<std::uint8_t> to_array(const RgbImage& img) {
  py::array_t<std::uint8_t> a({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), a.mutable_data());
  return a;
}

Homography to_homography(const py::array_t<double, py::array::c_style | py::array::forcecast>& m) {
  if (m.ndim() != 2 || m.shape(0) != 3 || m.shape(1) != 3) throw py::value_error("expected a 3x3 matrix");
  std::array<double, 9> v{};
  std::copy(m.data(), m.data() + 9, v.begin());
  return Homography(v);
}

py::array_t<double> from_homography(const Homography& h) {
  py::array_t<double> a({3, 3});
  std::copy(h.matrix().begin(), h.matrix().end(), a.mutable_data());
  return a;
}

using Box = std::tuple<int, int, int, int>;

std::vector<BoundingBox> to_boxes(const std::vector<Box>& in) {
  std::vector<BoundingBox> out;
  for (const auto& [x, y, w, h] : in) out.push_back({x, y, w, h});
  return out;
}

std::vector<Box> from_boxes(const std::vector<BoundingBox>& in) {
  std::vector<Box> out;
  for (const auto& b : in) out.emplace_back(b.x, b.y, b.w, b.h);
  return out;
}

RunConfig config_from(const py::dict& overrides) {
  RunConfig c;
  for (const auto& [k, v] : overrides) {
    set_config_value(c, py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Moving-camera moving-object detection";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("rgb_to_sv", [](const U8Array& frame) {
    const auto sv = rgb_to_sv(to_rgb(frame));
    return py::make_tuple(to_array(sv.s), to_array(sv.v));
  }, "HSV saturation and value planes of an RGB frame");

  m.def("warp_perspective", [](const F32Array& src, const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
                               const std::string& interpolation) {
    const auto mode = interpolation == "nearest" ? Interpolation::nearest : Interpolation::bilinear;
    const auto w = warp_perspective(to_plane<float>(src), to_homography(h), mode);
    return py::make_tuple(to_array(w.image), to_array(w.valid));
  }, py::arg("src"), py::arg("h"), py::arg("interpolation") = "bilinear");

  m.def("select_grid_points", [](int width, int height, int step) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : select_grid_points(width, height, step)) out.emplace_back(p.x, p.y);
    return out;
  });

  m.def("estimate_homography",
        [](const std::vector<std::pair<double, double>>& prev, const std::vector<std::pair<double, double>>& curr,
           double threshold, int max_iterations, std::uint64_t seed) {
          if (prev.size() != curr.size()) throw py::value_error("point lists differ in length");
          std::vector<PointCorrespondence> c(prev.size());
          for (std::size_t i = 0; i < prev.size(); ++i) {
            c[i] = {{prev[i].first, prev[i].second}, {curr[i].first, curr[i].second}, true, 0.0};
          }
          RansacParams params;
          params.reproj_threshold = threshold;
          params.max_iterations = max_iterations;
          params.seed = seed;
          auto r = estimate_homography(c, params);
          r.a_bg = background_motion(c, r.inlier_flags);
          std::vector<bool> flags(r.inlier_flags.begin(), r.inlier_flags.end());
          return py::make_tuple(from_homography(r.h), flags, r.a_bg);
        },
        py::arg("prev"), py::arg("curr"), py::arg("threshold") = 1.0, py::arg("max_iterations") = 500,
        py::arg("seed") = 0);

  m.def("neighborhood_difference", [](const U8Array& frame, const F32Array& mu) {
    return to_array(neighborhood_difference(to_plane<std::uint8_t>(frame), to_plane<float>(mu)));
  });

  m.def("adaptive_threshold", [](double a_bg, double t_base, double lambda1, double lambda2) {
    ForegroundParams p;
    p.t_base = t_base;
    p.lambda1 = lambda1;
    p.lambda2 = lambda2;
    return adaptive_threshold(p, a_bg);
  }, py::arg("a_bg"), py::arg("t_base") = 40.0, py::arg("lambda1") = 0.005, py::arg("lambda2") = 0.25);

  m.def("magnitude_weights", [](const F32Array& mag, double t_mag, double w_cap) {
    return to_array(magnitude_weights(to_plane<float>(mag), t_mag, w_cap));
  }, py::arg("mag"), py::arg("t_mag") = 5.0, py::arg("w_cap") = 4.0);

  m.def("overlap_ratio", [](const Box& gt, const Box& det) {
    return overlap_ratio(to_boxes({gt}).front(), to_boxes({det}).front());
  });

  m.def("evaluate", [](const std::vector<std::vector<Box>>& gt, const std::vector<std::vector<Box>>& det, double tau,
                       int warmup) {
    std::vector<std::vector<BoundingBox>> g, d;
    for (const auto& f : gt) g.push_back(to_boxes(f));
    for (const auto& f : det) d.push_back(to_boxes(f));
    const auto r = evaluate_sequence("sequence", g, d, tau, warmup);
    py::dict out;
    out["o_r"] = r.metrics.o_r;
    out["pr"] = r.metrics.pr;
    out["r"] = r.metrics.r;
    out["f1"] = r.metrics.f1;
    out["tp"] = r.metrics.tp;
    out["fp"] = r.metrics.fp;
    out["fn"] = r.metrics.fn;
    return out;
  }, py::arg("gt"), py::arg("det"), py::arg("tau") = 0.2, py::arg("warmup") = 0);

  m.def("config_defaults", [] {
    const RunConfig c;
    py::dict out;
    for (const auto& k : config_keys()) out[py::str(std::string(k.name))] = get_config_value(c, k.name);
    return out;
  });

  m.def("synth_generate", [](const std::string& config_text) {
    const auto seq = synth_generate(parse_synth_config(config_text));
    py::list frames, truth;
    for (const auto& f : seq.frames) frames.append(to_array(f));
    for (const auto& t : seq.truth) truth.append(from_boxes(t.boxes));
    return py::make_tuple(frames, truth);
  }, "Render a synthetic sequence from 'key = value' config text");

  py::class_<PipelineState>(m, "Detector")
      .def(py::init([](const py::dict& overrides) { return PipelineState(config_from(overrides).pipeline); }),
           py::arg("config") = py::dict())
      .def_property_readonly("frame_index", &PipelineState::frame_index)
      .def("process", [](PipelineState& state, const U8Array& frame) {
        const auto det = process_frame(state, to_rgb(frame));
        py::dict diag;
        diag["a_bg"] = det.diagnostics.a_bg;
        diag["inlier_ratio"] = det.diagnostics.inlier_ratio;
        diag["t_a"] = det.diagnostics.t_a;
        diag["homography_ok"] = det.diagnostics.homography_ok;
        diag["h"] = from_homography(det.diagnostics.h);
        return py::make_tuple(from_boxes(det.boxes), diag);
      }, "Process one HxWx3 RGB frame; returns (boxes, diagnostics)");
}
