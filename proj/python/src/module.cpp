#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rppg/augment.hpp"
#include "rppg/data.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/signal.hpp"
#include "rppg/synth.hpp"

namespace py = pybind11;
using namespace rppg;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

TensorF to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return TensorF(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const TensorF& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  FloatArray out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

// Frames [M,H,W,3] in [0,1] as a clip.
RoiClip to_clip(const FloatArray& frames, float fps) {
  if (frames.ndim() != 4 || frames.shape(3) != 3) throw ShapeError("frames must be [M, H, W, 3]");
  return {to_tensor(frames), fps, "python", 0};
}

RppgSignal to_signal(const DoubleArray& x, double rate) {
  return {std::vector<double>(x.data(), x.data() + x.size()), rate};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-supervised rPPG: heart rate from facial video";

  py::register_exception<SpectrumError>(m, "SpectrumError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  m.def("git_describe", &git_describe);

  m.def(
      "welch_psd",
      [](const DoubleArray& x, double rate) {
        const Spectrum s = welch_psd(to_signal(x, rate));
        return py::make_tuple(py::array(py::cast(s.freqs)), py::array(py::cast(s.power)));
      },
      py::arg("samples"), py::arg("rate"), "(freqs, power) of the default Welch estimate");
  m.def(
      "estimate_hr",
      [](const DoubleArray& x, double rate, double low_hz, double high_hz) {
        HrOptions o;
        o.band = {low_hz, high_hz};
        return estimate_hr(to_signal(x, rate), o);
      },
      py::arg("samples"), py::arg("rate"), py::arg("low_hz") = 0.7, py::arg("high_hz") = 4.0);

  using Vec = std::vector<double>;
  m.def("mean_absolute_error", [](const Vec& p, const Vec& g) { return mean_absolute_error(p, g); },
        py::arg("pred"), py::arg("gt"));
  m.def("root_mean_square_error", [](const Vec& p, const Vec& g) { return root_mean_square_error(p, g); },
        py::arg("pred"), py::arg("gt"));
  m.def("pearson_r", [](const Vec& p, const Vec& g) { return pearson_r(p, g); }, py::arg("pred"), py::arg("gt"));

  m.def(
      "label_subset", [](std::size_t n, double f, std::uint64_t seed) { return label_subset(n, f, seed); },
      py::arg("n"), py::arg("fraction"), py::arg("seed"));

  m.def(
      "preset", [](const std::string& name) { return config_to_kv(preset_by_name(name)); }, py::arg("name"),
      "Named run settings as key -> value strings");
  m.def(
      "config_hash",
      [](const std::map<std::string, std::string>& kv) { return config_hash(config_from_kv(kv, desk_preset())); },
      py::arg("settings"));

  m.def(
      "augment",
      [](const FloatArray& frames, const std::string& kind, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(augment(to_clip(frames, 20.0f), parse_aug_kind(kind), rng).frames);
      },
      py::arg("frames"), py::arg("kind"), py::arg("seed") = 0);

  m.def(
      "synth_video",
      [](double hr_bpm, std::size_t frames, std::size_t size, double noise, std::uint64_t seed) {
        SynthSpec s;
        s.hr_bpm = hr_bpm;
        s.frames = frames;
        s.width = s.height = size;
        s.noise_sigma = noise;
        s.seed = seed;
        const SynthVideo v = synth_video(s);
        py::dict d;
        d["frames"] = to_array(v.video.frames);
        d["fps"] = v.video.fps;
        d["ppg"] = py::array(py::cast(v.ppg.samples));
        d["ppg_rate"] = v.ppg.rate;
        return d;
      },
      py::arg("hr_bpm"), py::arg("frames") = 128, py::arg("size") = 64, py::arg("noise") = 0.0,
      py::arg("seed") = 0);

  py::class_<Model>(m, "Model")
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const Model& self, const std::filesystem::path& p) { save_model(p, self); })
      .def_property_readonly("variant", [](const Model& self) { return std::string(variant_name(self.variant)); })
      .def_property_readonly("has_readouts", [](const Model& self) { return self.readouts; })
      .def(
          "predict",
          [](const Model& self, const FloatArray& frames, float fps) {
            const auto w = predict_waveforms(self, {to_clip(frames, fps)}).front();
            return py::array(py::cast(w));
          },
          py::arg("frames"), py::arg("fps") = 20.0f, "rPPG waveform of one [M,H,W,3] clip");
  m.def(
      "make_model",
      [](const std::string& variant, std::uint64_t seed) {
        return make_model(parse_variant(variant), HeadKind::None, true, seed);
      },
      py::arg("variant") = "3d", py::arg("seed") = 0, "Randomly initialised model with readout heads");
}
