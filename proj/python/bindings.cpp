#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crowdcount/error.hpp"
#include "crowdcount/glcm.hpp"
#include "crowdcount/model_io.hpp"
#include "crowdcount/pipeline.hpp"
#include "crowdcount/synth.hpp"
#include "crowdcount/wavelet.hpp"

namespace py = pybind11;
using namespace crowdcount;

namespace {

GrayImage image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  return GrayImage(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> image_to_array(const GrayImage& img) {
  py::array_t<double> out({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

py::dict summary_dict(const ErrorSummary& s) {
  py::dict d;
  d["n"] = s.n;
  d["mean_ae"] = s.mean_ae;
  d["std_ae"] = s.std_ae;
  d["nae_n"] = s.nae_n;
  d["nae_excluded"] = s.nae_excluded;
  d["mean_nae"] = s.mean_nae;
  d["std_nae"] = s.std_nae;
  return d;
}

Config config_from(const std::string& json_text) {
  return json_text.empty() ? Config{} : Config::from_json(nlohmann::json::parse(json_text));
}

}  // namespace

PYBIND11_MODULE(_crowdcount, m) {
  m.doc() = "Crowd counting by multi-source fusion";

  static py::exception<Error> error(m, "CrowdcountError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("decode_image", [](py::bytes data) { return image_to_array(decode_image(std::string(data))); },
        "Decode P5/P6 bytes into a float array in [0, 1]");
  m.def("read_image", [](const std::string& path) { return image_to_array(read_image(path)); });
  m.def("encode_pgm",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
          return py::bytes(encode_pgm(image_from_array(a)));
        });
  m.def("gradient_magnitude", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return image_to_array(gradient_magnitude(image_from_array(a)));
  });

  m.def(
      "glcm_features",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int levels) {
        const auto f = glcm_features(quantize(image_from_array(a), levels), levels).features();
        return std::vector<double>(f.begin(), f.end());
      },
      py::arg("image"), py::arg("levels") = 8, "16 GLCM features, theta-major (D, H, E, P)");
  m.def("wavelet_energies", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    const auto f = wavelet_features(image_from_array(a)).energies;
    return std::vector<double>(f.begin(), f.end());
  });
  m.def(
      "fourier_peaks",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, double cutoff) {
        FourierParams p;
        p.cutoff = cutoff;
        return fourier_analyze(image_from_array(a), p).maxima_count;
      },
      py::arg("image"), py::arg("cutoff") = 0.25);
  m.def(
      "crowd_confidence",
      [](const std::vector<std::uint32_t>& counts, const std::vector<double>& lp, const std::vector<double>& lm) {
        return crowd_confidence(WordHistogram{counts}, PoissonRates{lp, lm});
      },
      py::arg("counts"), py::arg("lambda_plus"), py::arg("lambda_minus"));

  m.def(
      "evaluate",
      [](const std::vector<double>& gt, const std::vector<double>& est) {
        return summary_dict(evaluate(gt, est).image_summary);
      },
      py::arg("gt"), py::arg("est"), "Mean/std of absolute and normalized absolute errors");

  m.def(
      "synth",
      [](const std::string& out_dir, std::size_t count, std::uint64_t seed, std::size_t min_dots,
         std::size_t max_dots, std::size_t width, std::size_t height) {
        SynthParams p{count, min_dots, max_dots, width, height, seed};
        return write_dataset(synth_dataset(p), out_dir);
      },
      py::arg("out_dir"), py::arg("count"), py::arg("seed"), py::arg("min_dots") = 50, py::arg("max_dots") = 500,
      py::arg("width") = 384, py::arg("height") = 384, "Write a synthetic dataset; returns the manifest path");

  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("config_json", [](const TrainedModel& t) { return t.config.to_json().dump(); })
      .def_property_readonly("config_hash", [](const TrainedModel& t) { return hex64(t.config_hash); })
      .def_property_readonly("digest", [](const TrainedModel& t) { return hex64(model_digest(t)); })
      .def_property_readonly("converged", &TrainedModel::converged)
      .def("save", [](const TrainedModel& t, const std::string& path) { save_model(t, path); })
      .def(
          "count",
          [](const TrainedModel& t, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            const auto r = count_image(image_from_array(a), t);
            std::vector<double> cells;
            for (const auto& c : r.cells) cells.push_back(c.estimate);
            return py::make_tuple(r.total, cells);
          },
          "Returns (total, per-cell estimates)")
      .def("count_file", [](const TrainedModel& t, const std::string& path) {
        return count_image(read_image(path), t).total;
      });

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "train",
      [](const std::string& manifest, std::uint64_t seed, const std::string& config_json) {
        Config c = config_from(config_json);
        c.seed = seed;
        return train(load_samples(load_manifest(manifest)), c);
      },
      py::arg("manifest"), py::arg("seed"), py::arg("config_json") = "");
  m.def(
      "evaluate_model",
      [](const TrainedModel& t, const std::string& manifest) {
        const auto report = evaluate(predict_samples(t, load_samples(load_manifest(manifest))));
        py::dict d;
        d["image"] = summary_dict(report.image_summary);
        d["patch"] = summary_dict(report.patch_summary);
        d["images_csv"] = images_csv(report);
        return d;
      },
      py::arg("model"), py::arg("manifest"));
  m.def("default_config_json", [] { return Config{}.to_json().dump(2); });
}
