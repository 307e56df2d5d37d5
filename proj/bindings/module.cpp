// Python bindings for the core operations: preprocessing, synthetic scenes,
// tile I/O, ambiguity indices, acquisition scores, statistics, and the
// segmenter with MC-dropout inference.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "floodal/acquisition.hpp"
#include "floodal/data.hpp"
#include "floodal/errors.hpp"
#include "floodal/experiment.hpp"
#include "floodal/indices.hpp"
#include "floodal/stats.hpp"
#include "floodal/unet.hpp"

namespace py = pybind11;
using namespace floodal;

namespace {

Tile tile_from_array(const py::array_t<float, py::array::c_style |
                                                  py::array::forcecast>& arr,
                     const std::string& id, const std::string& region) {
  if (arr.ndim() != 3) throw py::value_error("pixels must be C x H x W");
  Tile t;
  t.id = id;
  t.region = region;
  t.channels = static_cast<int>(arr.shape(0));
  t.height = static_cast<int>(arr.shape(1));
  t.width = static_cast<int>(arr.shape(2));
  t.pixels.assign(arr.data(), arr.data() + arr.size());
  return t;
}

py::array_t<float> array_from_tile(const Tile& t) {
  py::array_t<float> arr({t.channels, t.height, t.width});
  std::copy(t.pixels.begin(), t.pixels.end(), arr.mutable_data());
  return arr;
}

LabelMask mask_from_array(
    const py::array_t<std::uint8_t,
                      py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw py::value_error("mask must be H x W");
  LabelMask m;
  m.height = static_cast<int>(arr.shape(0));
  m.width = static_cast<int>(arr.shape(1));
  m.classes.assign(arr.data(), arr.data() + arr.size());
  m.validate();
  return m;
}

py::array_t<std::uint8_t> array_from_mask(const LabelMask& m) {
  py::array_t<std::uint8_t> arr({m.height, m.width});
  std::copy(m.classes.begin(), m.classes.end(), arr.mutable_data());
  return arr;
}

StochasticPrediction pred_from_array(
    const py::array_t<float, py::array::c_style | py::array::forcecast>&
        passes) {
  if (passes.ndim() != 3) throw py::value_error("passes must be T x H x W");
  StochasticPrediction p;
  p.T = static_cast<int>(passes.shape(0));
  p.height = static_cast<int>(passes.shape(1));
  p.width = static_cast<int>(passes.shape(2));
  const std::size_t per = static_cast<std::size_t>(p.height) * p.width;
  p.passes.resize(p.T);
  for (int t = 0; t < p.T; ++t)
    p.passes[t].assign(passes.data() + t * per, passes.data() + (t + 1) * per);
  p.calibrated.resize(per);
  for (std::size_t i = 0; i < per; ++i) {
    double sum = 0.0;
    for (int t = 0; t < p.T; ++t) sum += p.passes[t][i];
    p.calibrated[i] = static_cast<float>(sum / p.T);
  }
  return p;
}

SceneConfig scene_config_from_kwargs(int size, double spectral_separation,
                                     double boundary_complexity,
                                     double flood_fraction_target,
                                     double noise_sigma,
                                     double nodata_fraction) {
  SceneConfig cfg;
  cfg.size = size;
  cfg.spectral_separation = spectral_separation;
  cfg.boundary_complexity = boundary_complexity;
  cfg.flood_fraction_target = flood_fraction_target;
  cfg.noise_sigma = noise_sigma;
  cfg.nodata_fraction = nodata_fraction;
  return cfg;
}

class Segmenter {
 public:
  Segmenter(int in_channels, int depth, int base_channels, double dropout_rate,
            std::uint64_t seed)
      : net_(UNetConfig{in_channels, depth, base_channels, dropout_rate},
             seed) {}
  explicit Segmenter(UNet net) : net_(std::move(net)) {}

  py::dict train_on(
      const py::array_t<float, py::array::c_style | py::array::forcecast>&
          pixels,
      const py::array_t<std::uint8_t,
                        py::array::c_style | py::array::forcecast>& masks,
      const py::array_t<float, py::array::c_style | py::array::forcecast>&
          val_pixels,
      const py::array_t<std::uint8_t,
                        py::array::c_style | py::array::forcecast>& val_masks,
      int max_epochs, int batch_size, double learning_rate,
      double weight_decay, double early_stop_delta, int early_stop_patience,
      bool flip_augment, std::uint64_t seed, int jobs) {
    const auto labeled = entries_from(pixels, masks);
    const auto validation = entries_from(val_pixels, val_masks);
    std::vector<const CorpusEntry*> lp, vp;
    for (const auto& e : labeled) lp.push_back(&e);
    for (const auto& e : validation) vp.push_back(&e);
    TrainConfig cfg;
    cfg.max_epochs = max_epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.weight_decay = weight_decay;
    cfg.early_stop_delta = early_stop_delta;
    cfg.early_stop_patience = early_stop_patience;
    cfg.flip_augment = flip_augment;
    cfg.seed = seed;
    cfg.jobs = jobs;
    TrainResult result;
    {
      py::gil_scoped_release release;
      result = train(net_, lp, vp, cfg);
    }
    py::dict out;
    py::list history;
    for (const auto& e : result.history) {
      py::dict row;
      row["epoch"] = e.epoch;
      row["train_loss"] = e.train_loss;
      row["val_loss"] = e.val_loss;
      row["stopped"] = e.stopped;
      history.append(row);
    }
    out["history"] = history;
    out["best_epoch"] = result.best_epoch;
    out["best_val_loss"] = result.best_val_loss;
    return out;
  }

  py::array_t<float> mc_passes(
      const py::array_t<float, py::array::c_style | py::array::forcecast>&
          pixels,
      int T, std::uint64_t seed, int jobs) {
    const Tile tile = tile_from_array(pixels, "py", "py");
    StochasticPrediction pred;
    {
      py::gil_scoped_release release;
      pred = mc_predict(net_, tile, T, seed, jobs);
    }
    py::array_t<float> out({pred.T, pred.height, pred.width});
    float* dst = out.mutable_data();
    const std::size_t per = static_cast<std::size_t>(pred.height) * pred.width;
    for (int t = 0; t < pred.T; ++t)
      std::copy(pred.passes[t].begin(), pred.passes[t].end(), dst + t * per);
    return out;
  }

  void save(const std::filesystem::path& path) const { net_.save(path); }

  std::size_t parameter_count() const { return net_.parameter_count(); }

 private:
  static std::vector<CorpusEntry> entries_from(
      const py::array_t<float, py::array::c_style | py::array::forcecast>&
          pixels,
      const py::array_t<std::uint8_t,
                        py::array::c_style | py::array::forcecast>& masks) {
    if (pixels.ndim() != 4 || masks.ndim() != 3)
      throw py::value_error("expected pixels N x C x H x W, masks N x H x W");
    const int n = static_cast<int>(pixels.shape(0));
    std::vector<CorpusEntry> entries;
    entries.reserve(n);
    const std::size_t tile_sz = pixels.size() / n;
    const std::size_t mask_sz = masks.size() / n;
    for (int i = 0; i < n; ++i) {
      Tile t;
      t.id = "py/" + std::to_string(i);
      t.channels = static_cast<int>(pixels.shape(1));
      t.height = static_cast<int>(pixels.shape(2));
      t.width = static_cast<int>(pixels.shape(3));
      t.pixels.assign(pixels.data() + i * tile_sz,
                      pixels.data() + (i + 1) * tile_sz);
      LabelMask m;
      m.height = t.height;
      m.width = t.width;
      m.classes.assign(masks.data() + i * mask_sz,
                       masks.data() + (i + 1) * mask_sz);
      entries.push_back({std::move(t), std::move(m)});
    }
    return entries;
  }

  UNet net_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core operations of the floodal active-learning workbench";

  py::register_exception<ConfigError>(m, "FloodalConfigError",
                                      PyExc_ValueError);
  py::register_exception<DataError>(m, "FloodalDataError", PyExc_IOError);
  py::register_exception<RuntimeFailure>(m, "FloodalRuntimeError",
                                         PyExc_RuntimeError);

  m.def(
      "hsv_preprocess",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             raw) {
        return array_from_tile(hsv_preprocess(tile_from_array(raw, "py", "")));
      },
      py::arg("raw"),
      "Min-max scale (red, NIR, SWIR2) reflectances and convert to HSV.");

  m.def(
      "generate_scene",
      [](int size, double spectral_separation, double boundary_complexity,
         double flood_fraction_target, double noise_sigma,
         double nodata_fraction, std::uint64_t seed) {
        const auto [tile, mask] = generate_synthetic_scene(
            scene_config_from_kwargs(size, spectral_separation,
                                     boundary_complexity,
                                     flood_fraction_target, noise_sigma,
                                     nodata_fraction),
            seed, "py/scene", "py");
        return py::make_tuple(array_from_tile(tile), array_from_mask(mask));
      },
      py::arg("size") = 64, py::arg("spectral_separation") = 2.0,
      py::arg("boundary_complexity") = 0.5,
      py::arg("flood_fraction_target") = 0.3, py::arg("noise_sigma") = 0.05,
      py::arg("nodata_fraction") = 0.0, py::arg("seed") = 0,
      "Deterministic synthetic flood scene: (pixels, mask).");

  m.def(
      "quarter",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             pixels,
         const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& mask) {
        const auto parts = quarter_tile(tile_from_array(pixels, "py", ""),
                                        mask_from_array(mask));
        py::list out;
        for (const auto& [t, m] : parts)
          out.append(py::make_tuple(array_from_tile(t), array_from_mask(m)));
        return out;
      },
      py::arg("pixels"), py::arg("mask"),
      "Split into four quadrants (NW, NE, SW, SE).");

  m.def(
      "save_tile",
      [](const std::filesystem::path& path,
         const py::array_t<float, py::array::c_style | py::array::forcecast>&
             pixels,
         const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& mask) {
        save_tile(tile_from_array(pixels, "py", ""), mask_from_array(mask),
                  path);
      },
      py::arg("path"), py::arg("pixels"), py::arg("mask"));

  m.def(
      "load_tile",
      [](const std::filesystem::path& path) {
        const auto [tile, mask] = load_tile(path);
        return py::make_tuple(array_from_tile(tile), array_from_mask(mask));
      },
      py::arg("path"));

  m.def(
      "bpr",
      [](const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& mask) {
        const auto r = compute_bpr(mask_from_array(mask));
        return py::make_tuple(r.bpr, r.bps, r.tps);
      },
      py::arg("mask"), "Boundary pixel ratio: (bpr, bps, tps).");

  m.def(
      "fpr",
      [](const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& mask) {
        const auto r = compute_fpr(mask_from_array(mask));
        return py::make_tuple(r.fpr, r.fps, r.tps);
      },
      py::arg("mask"), "Flood pixel ratio: (fpr, fps, tps).");

  m.def(
      "mdf",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             pixels,
         const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& mask)
          -> py::object {
        const auto r =
            compute_mdf(tile_from_array(pixels, "py", ""), mask_from_array(mask));
        if (!r.has_value()) return py::none();
        return py::float_(*r);
      },
      py::arg("pixels"), py::arg("mask"),
      "Mahalanobis distance between class means, or None.");

  m.def(
      "entropy_score",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             passes) { return entropy_score("py", pred_from_array(passes)).score; },
      py::arg("passes"), "Mean binary entropy of the calibrated map.");
  m.def(
      "margin_score",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             passes) { return margin_score("py", pred_from_array(passes)).score; },
      py::arg("passes"), "Mean |2p-1| of the calibrated map (lower = pick first).");
  m.def(
      "bald_score",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             passes) { return bald_score("py", pred_from_array(passes)).score; },
      py::arg("passes"),
      "Mutual information between predictions and dropout masks.");

  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y)
          -> py::object {
        const auto r = spearman(x, y);
        if (!r.has_value()) return py::none();
        return py::make_tuple(r->rho, r->p_value);
      },
      py::arg("x"), py::arg("y"),
      "Spearman rho with tied-rank averaging: (rho, p) or None.");

  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y)
          -> py::object {
        const auto r = pearson(x, y);
        if (!r.has_value()) return py::none();
        return py::float_(*r);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "split_pearson",
      [](const std::vector<double>& fpr, const std::vector<double>& bpr,
         double threshold) {
        const auto r = split_pearson(fpr, bpr, threshold);
        py::dict out;
        out["below"] = r.below.has_value() ? py::object(py::float_(*r.below))
                                           : py::none();
        out["at_or_above"] = r.at_or_above.has_value()
                                 ? py::object(py::float_(*r.at_or_above))
                                 : py::none();
        out["n_below"] = r.n_below;
        out["n_at_or_above"] = r.n_at_or_above;
        return out;
      },
      py::arg("fpr"), py::arg("bpr"), py::arg("threshold") = 0.5);

  m.def(
      "kde2d",
      [](const std::vector<std::pair<double, double>>& points, int grid_size) {
        const DensityField f = kde2d(points, grid_size);
        py::dict out;
        py::array_t<double> grid({f.grid_size, f.grid_size});
        std::copy(f.grid.begin(), f.grid.end(), grid.mutable_data());
        out["grid"] = grid;
        out["x_range"] = py::make_tuple(f.x0, f.x1);
        out["y_range"] = py::make_tuple(f.y0, f.y1);
        out["bandwidths"] = py::make_tuple(f.bandwidth_x, f.bandwidth_y);
        out["mass"] = f.mass;
        out["degenerate_bandwidth"] = f.degenerate_bandwidth;
        return out;
      },
      py::arg("points"), py::arg("grid_size") = 128,
      "Gaussian KDE on a grid; grid integrates to one, 'mass' is the raw "
      "pre-normalization mass.");

  m.def(
      "iso_levels",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             grid,
         std::pair<double, double> x_range, std::pair<double, double> y_range,
         const std::vector<double>& levels) {
        DensityField f;
        f.grid_size = static_cast<int>(grid.shape(0));
        f.grid.assign(grid.data(), grid.data() + grid.size());
        f.x0 = x_range.first;
        f.x1 = x_range.second;
        f.y0 = y_range.first;
        f.y1 = y_range.second;
        return iso_proportion_levels(
            f, levels.empty() ? default_iso_levels() : levels);
      },
      py::arg("grid"), py::arg("x_range"), py::arg("y_range"),
      py::arg("levels") = std::vector<double>{},
      "Density thresholds whose superlevel sets enclose 1-L of the mass.");

  py::class_<Segmenter>(m, "Segmenter",
                        "Encoder-decoder segmenter with MC-dropout")
      .def(py::init<int, int, int, double, std::uint64_t>(),
           py::arg("in_channels") = 3, py::arg("depth") = 2,
           py::arg("base_channels") = 16, py::arg("dropout_rate") = 0.5,
           py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::filesystem::path& path) {
            return Segmenter(UNet::load(path));
          },
          py::arg("path"))
      .def("save", &Segmenter::save, py::arg("path"))
      .def("parameter_count", &Segmenter::parameter_count)
      .def("train", &Segmenter::train_on, py::arg("pixels"), py::arg("masks"),
           py::arg("val_pixels"), py::arg("val_masks"),
           py::arg("max_epochs") = 50, py::arg("batch_size") = 8,
           py::arg("learning_rate") = 5e-4, py::arg("weight_decay") = 1e-2,
           py::arg("early_stop_delta") = 5e-4,
           py::arg("early_stop_patience") = 5, py::arg("flip_augment") = true,
           py::arg("seed") = 0, py::arg("jobs") = 1)
      .def("mc_passes", &Segmenter::mc_passes, py::arg("pixels"),
           py::arg("T") = 10, py::arg("seed") = 0, py::arg("jobs") = 1,
           "T stochastic forward passes as a T x H x W array.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::filesystem::path& pool,
         const std::filesystem::path& target,
         const std::filesystem::path& out_dir) {
        const auto cfg = config_from_json(
            nlohmann::ordered_json::parse(config_json));
        const Corpus pool_corpus = load_corpus(pool);
        const Corpus target_corpus = load_corpus(target);
        cfg.validate(pool_corpus.entries.size());
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, pool_corpus, target_corpus);
        }
        write_report_files(report, out_dir);
        py::dict out;
        const auto summary = aggregate_runs(report);
        py::list iterations;
        for (const auto& it : summary.iterations) {
          py::dict row;
          row["iteration"] = it.iteration;
          row["labeled_count"] = it.labeled_count;
          row["mf1"] = it.mf1;
          row["sdf1"] = it.sdf1;
          iterations.append(row);
        }
        out["iterations"] = iterations;
        return out;
      },
      py::arg("config_json"), py::arg("pool"), py::arg("target"),
      py::arg("out_dir"),
      "Run the active-learning loop; writes report files, returns mF1/sdF1 "
      "per iteration.");

#ifdef FLOODAL_VERSION
  m.attr("__version__") = FLOODAL_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
