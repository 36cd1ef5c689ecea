#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "irsynth/aff.hpp"
#include "irsynth/aff_check.hpp"
#include "irsynth/dataset.hpp"
#include "irsynth/image_io.hpp"
#include "irsynth/metrics.hpp"
#include "irsynth/negatives.hpp"
#include "irsynth/noise.hpp"

namespace py = pybind11;
using namespace irsynth;

namespace {

template <typename T>
py::array_t<T> to_numpy(const Raster<T>& r) {
  py::array_t<T> a({r.height(), r.width()});
  std::copy(r.pixels().begin(), r.pixels().end(), a.mutable_data());
  return a;
}

template <typename T>
Raster<T> from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array (height, width)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Raster<T>(w, h, std::vector<T>(a.data(), a.data() + a.size()));
}

GrayImage image_arg(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) { return from_numpy(a); }
Mask mask_arg(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) { return from_numpy(a); }

py::array_t<double> map_to_numpy(const FeatureMap& f) {
  py::array_t<double> a({f.channels(), f.height(), f.width()});
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

FeatureMap map_arg(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() == 2) {
    return FeatureMap(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                      std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 3) throw py::value_error("expected a (C, H, W) or (H, W) array");
  return FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict target_dict(const TargetInstance& t) {
  py::dict d;
  d["id"] = t.id;
  d["centroid"] = py::make_tuple(t.centroid.x, t.centroid.y);
  d["pixel_count"] = t.pixel_count;
  d["bbox"] = t.bbox;
  return d;
}

py::list checks_list(const std::vector<CheckResult>& checks) {
  py::list out;
  for (const auto& c : checks) {
    py::dict d;
    d["name"] = c.name;
    d["passed"] = c.passed;
    d["detail"] = c.detail;
    d["failures"] = c.failures;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_irsynth, m) {
  m.doc() = "Infrared small-target dataset synthesis: noise displacement, rotated negatives, metrics, AFF kernels";

  // Leaked on purpose: must outlive interpreter finalisation.
  static PyObject* error_type = (new py::exception<Error>(m, "IrsynthError", PyExc_RuntimeError))->ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::invalid_argument) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(error_type, e.what());
      }
    }
  });

  py::class_<Rect>(m, "Rect")
      .def(py::init<int, int, int, int>(), py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &Rect::x)
      .def_readwrite("y", &Rect::y)
      .def_readwrite("w", &Rect::w)
      .def_readwrite("h", &Rect::h)
      .def("__eq__", [](const Rect& a, const Rect& b) { return a == b; })
      .def("__repr__", [](const Rect& r) { return "Rect(" + to_string(r) + ")"; })
      .def("as_tuple", [](const Rect& r) { return py::make_tuple(r.x, r.y, r.w, r.h); });

  // imaging
  m.def("load_image", [](const std::filesystem::path& p) { return to_numpy(load_image(p)); },
        "Load a raster as float64 (H, W) in [0, 1].");
  m.def("save_image", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                         const std::filesystem::path& p) { save_image(image_arg(a), p); });
  m.def("load_mask", [](const std::filesystem::path& p) { return to_numpy(load_mask(p)); },
        "Load a binary mask as uint8 (H, W) in {0, 1}.");
  m.def("save_mask", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
                        const std::filesystem::path& p) { save_mask(mask_arg(a), p); });
  m.def("crop", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, const Rect& r) {
    return to_numpy(crop(image_arg(a), r));
  });
  m.def("paste", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                    const py::array_t<double, py::array::c_style | py::array::forcecast>& patch,
                    const Rect& r) { return to_numpy(paste(image_arg(a), image_arg(patch), r)); });
  m.def("resize_bilinear", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int w, int h) {
    return to_numpy(resize_bilinear(image_arg(a), w, h));
  }, py::arg("img"), py::arg("out_w"), py::arg("out_h"));
  m.def("rotate90", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int turns) {
    return to_numpy(rotate90(image_arg(a), turns));
  }, py::arg("patch"), py::arg("quarter_turns"));

  // noise pipeline
  m.def("partition_regions", [](int w, int h, int grid) { return partition_regions(w, h, grid); }, py::arg("width"),
        py::arg("height"), py::arg("grid") = kDefaultGrid);
  m.def("region_stats", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, const Rect& r) {
    const RegionStats s = region_stats(image_arg(a), r);
    return py::make_tuple(s.mean, s.variance);
  }, "(mean, population variance) of a region in working scale.");
  m.def(
      "select_noise_prone",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, double var_max, double mean_max,
         int grid, std::uint64_t seed) -> py::object {
        NoiseSamplerConfig cfg;
        cfg.grid = grid;
        cfg.var_max = var_max;
        cfg.mean_max = mean_max;
        Rng rng(seed);
        const GrayImage img = image_arg(a);
        const auto region = select_noise_region(img, cfg, rng);
        if (!region) return py::none();
        py::dict d;
        d["rect"] = region->rect;
        d["mean"] = region->mean;
        d["variance"] = region->variance;
        d["field"] = to_numpy(make_noise_field(img, region->rect, img.width(), img.height()).image);
        return d;
      },
      py::arg("img"), py::arg("var_max"), py::arg("mean_max"), py::arg("grid") = kDefaultGrid, py::arg("seed") = 0);
  m.def("displace", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                       const py::array_t<double, py::array::c_style | py::array::forcecast>& noise, double alpha) {
    return to_numpy(displace(image_arg(a), image_arg(noise), alpha));
  }, py::arg("input"), py::arg("noise"), py::arg("alpha") = kDefaultAlpha);

  // negative augmentation
  m.def("extract_targets", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    py::list out;
    for (const auto& t : extract_targets(mask_arg(a))) out.append(target_dict(t));
    return out;
  });
  m.def(
      "make_negatives",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mk, int s) {
        const GrayImage img = image_arg(a);
        const Mask mask = mask_arg(mk);
        const NegativeSet set = make_negatives(img, mask, extract_targets(mask), s);
        py::list out;
        for (const auto& v : set.variants) {
          py::dict d;
          d["image"] = to_numpy(v.image);
          d["mask"] = to_numpy(v.mask);
          d["target_id"] = v.target_id;
          d["beta"] = v.beta;
          d["anchor"] = v.anchor.rect;
          out.append(d);
        }
        return out;
      },
      py::arg("img"), py::arg("mask"), py::arg("s") = kDefaultPatchSide);

  // metrics
  m.def("iou", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& p,
                  const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& g) {
    return iou(mask_arg(p), mask_arg(g));
  });
  m.def(
      "evaluate_masks",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& p,
         const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& g, double max_dist) {
        std::vector<TargetMatch> matches;
        const MetricsReport r = report_from_counts(image_counts(mask_arg(p), mask_arg(g), MatchCriterion{max_dist},
                                                                FalseAlarmMode::pixel, &matches));
        py::dict d;
        d["iou"] = r.iou;
        d["pd"] = r.pd;
        d["fa"] = r.fa;
        d["t_correct"] = r.counts.t_correct;
        d["t_all"] = r.counts.t_all;
        d["false_pixels"] = r.counts.false_pixels;
        d["total_pixels"] = r.counts.total_pixels;
        py::list ml;
        for (const auto& mt : matches) ml.append(py::make_tuple(mt.gt_id, mt.pred_id, mt.distance));
        d["matches"] = ml;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("max_dist") = kDefaultMatchDistance);
  m.def(
      "evaluate_dirs",
      [](const std::filesystem::path& pred, const std::filesystem::path& gt, double max_dist) {
        EvaluateOptions opts;
        opts.criterion.max_centroid_dist = max_dist;
        return format_report(evaluate_report(pred, gt, opts));
      },
      py::arg("pred_dir"), py::arg("gt_dir"), py::arg("max_dist") = kDefaultMatchDistance);

  // AFF and Soft-IoU kernels
  py::class_<AffParams>(m, "AffParams")
      .def_static("zeros", &AffParams::zeros, py::arg("channels"), py::arg("reduction") = kDefaultReduction)
      .def_static(
          "random",
          [](int channels, std::uint64_t seed, int reduction) {
            Rng rng(seed);
            return AffParams::random(channels, rng, reduction);
          },
          py::arg("channels"), py::arg("seed") = 0, py::arg("reduction") = kDefaultReduction)
      .def_readonly("channels", &AffParams::channels)
      .def_readonly("hidden", &AffParams::hidden);
  m.def("channel_attention", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f,
                                const AffParams& p) { return map_to_numpy(channel_attention(map_arg(f), p)); });
  m.def("spatial_attention", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f,
                                const AffParams& p) { return map_to_numpy(spatial_attention(map_arg(f), p)); });
  m.def("feature_pyramid", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f) {
    py::list out;
    for (const auto& l : feature_pyramid(map_arg(f))) out.append(map_to_numpy(l));
    return out;
  });
  m.def(
      "soft_iou_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
         const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& y, double eps) {
        const SoftIouResult r = soft_iou_loss(map_arg(logits), mask_arg(y), eps);
        py::array_t<double> g({r.grad.height(), r.grad.width()});
        std::copy(r.grad.values().begin(), r.grad.values().end(), g.mutable_data());
        return py::make_tuple(r.loss, g);
      },
      py::arg("logits"), py::arg("mask"), py::arg("eps") = kSoftIouEpsilon, "(loss, d loss / d logits)");
  m.def("l_neg", [](const std::vector<double>& losses) {
    const NegLossSummary s = l_neg(losses);
    return py::make_tuple(s.sum, s.min);
  }, "(sum, running minimum) of per-negative losses.");
  m.def("aff_check", [](std::uint64_t seed, const std::string& sizes) {
    return checks_list(run_aff_checks(seed, parse_shapes(sizes)));
  }, py::arg("seed") = 0, py::arg("sizes") = "4x8x8");

  // dataset
  m.def(
      "build_dataset",
      [](const std::filesystem::path& in_dir, const std::filesystem::path& out_dir, double alpha, int s, int grid,
         std::optional<double> var_max, std::optional<double> mean_max, std::uint64_t seed,
         const std::string& negatives_from, bool overwrite, unsigned jobs) {
        BuildConfig cfg;
        cfg.alpha = alpha;
        cfg.s = s;
        cfg.grid = grid;
        cfg.var_max = var_max;
        cfg.mean_max = mean_max;
        cfg.seed = seed;
        cfg.negatives_from = parse_negatives_from(negatives_from);
        cfg.overwrite = overwrite;
        cfg.jobs = jobs;
        DatasetManifest man;
        {
          py::gil_scoped_release release;
          man = build_dataset(in_dir, out_dir, cfg);
        }
        py::dict d;
        d["originals"] = man.counts.originals;
        d["noise_variants"] = man.counts.noise_variants;
        d["negatives"] = man.counts.negatives;
        d["total"] = man.counts.total;
        d["var_max"] = man.var_max;
        d["mean_max"] = man.mean_max;
        return d;
      },
      py::arg("in_dir"), py::arg("out_dir"), py::arg("alpha") = kDefaultAlpha, py::arg("s") = kDefaultPatchSide,
      py::arg("grid") = kDefaultGrid, py::arg("var_max") = py::none(), py::arg("mean_max") = py::none(),
      py::arg("seed") = 0, py::arg("negatives_from") = "both", py::arg("overwrite") = false, py::arg("jobs") = 1);
  m.def("validate_dataset", [](const std::filesystem::path& dir) { return checks_list(validate_dataset(dir).checks); });
}
