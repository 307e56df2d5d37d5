// floodal: active-learning workbench for binary flood segmentation.
// Subcommands: gen-data, run, analyze, plot, baseline.
// Exit codes: 0 success, 2 config error, 3 data error, 4 runtime failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "floodal/csv.hpp"
#include "floodal/data.hpp"
#include "floodal/errors.hpp"
#include "floodal/experiment.hpp"
#include "floodal/indices.hpp"
#include "floodal/plot.hpp"
#include "floodal/stats.hpp"

using json = nlohmann::ordered_json;
using namespace floodal;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

std::string default_out_dir() {
  const char* env = std::getenv("FLOODAL_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : "out";
}

// A generator knob that is either fixed or sampled uniformly from [lo,hi].
struct ParamRange {
  double lo = 0.0, hi = 0.0;
  double sample(Rng& rng) const {
    return lo == hi ? lo : rng.uniform(lo, hi);
  }
};

ParamRange range_from_json(const json& j, const std::string& key,
                           double fallback) {
  if (!j.contains(key)) return {fallback, fallback};
  const auto& v = j[key];
  if (v.is_number()) return {v.get<double>(), v.get<double>()};
  if (v.is_array() && v.size() == 2)
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError("gen-data: " + key + " must be a number or [lo,hi]");
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  const json cfg = load_json_file(config_path);
  const std::uint64_t seed = cfg.value("seed", 0ull);
  const int tile_size = cfg.value("tile_size", 64);
  if (!cfg.contains("regions") || !cfg["regions"].is_array() ||
      cfg["regions"].empty())
    throw ConfigError("gen-data: config needs a non-empty regions array");

  Corpus corpus;
  int region_idx = 0;
  for (const auto& region : cfg["regions"]) {
    const std::string name = region.value("name", std::string{});
    if (name.empty()) throw ConfigError("gen-data: region without a name");
    const int count = region.value("count", 0);
    if (count < 1) throw ConfigError("gen-data: region count must be >= 1");
    const ParamRange separation =
        range_from_json(region, "spectral_separation", 2.0);
    const ParamRange complexity =
        range_from_json(region, "boundary_complexity", 0.5);
    const ParamRange flood = range_from_json(region, "flood_fraction", 0.3);
    const ParamRange noise = range_from_json(region, "noise_sigma", 0.05);
    const ParamRange nodata = range_from_json(region, "nodata_fraction", 0.0);
    for (int i = 0; i < count; ++i) {
      const std::uint64_t tile_seed =
          derive_seed(seed, "gen-tile", region_idx, i);
      Rng knobs(derive_seed(tile_seed, "knobs"));
      SceneConfig sc;
      sc.size = region.value("tile_size", tile_size);
      sc.spectral_separation = separation.sample(knobs);
      sc.boundary_complexity = complexity.sample(knobs);
      sc.flood_fraction_target = flood.sample(knobs);
      sc.noise_sigma = noise.sample(knobs);
      sc.nodata_fraction = nodata.sample(knobs);
      char id[64];
      std::snprintf(id, sizeof(id), "%s/s%04d", name.c_str(), i);
      auto [tile, mask] = generate_synthetic_scene(sc, tile_seed, id, name);
      corpus.entries.push_back({std::move(tile), std::move(mask)});
    }
    ++region_idx;
  }
  corpus.sort_by_id();
  save_corpus(corpus, out_dir);
  std::cerr << "gen-data: wrote " << corpus.entries.size() << " tiles to "
            << out_dir << "\n";
  return 0;
}

ExperimentConfig resolve_run_config(const std::string& config_path,
                                    const json& overrides) {
  json merged = config_path.empty() ? json::object()
                                    : load_json_file(config_path);
  for (const auto& [key, value] : overrides.items()) {
    if (key == "unet" || key == "train" || key == "kmeans") {
      for (const auto& [k2, v2] : value.items()) merged[key][k2] = v2;
    } else {
      merged[key] = value;
    }
  }
  return config_from_json(merged);
}

int cmd_run(const ExperimentConfig& config, const std::string& pool_path,
            const std::string& target_path, const std::string& out_dir,
            bool dry_run) {
  if (dry_run) {
    config.validate(0);
    json plan;
    plan["config"] = config_to_json(config);
    plan["pool"] = pool_path;
    plan["target"] = target_path;
    plan["out"] = out_dir;
    std::cout << plan.dump(2) << "\n";
    return 0;
  }
  const Corpus pool = load_corpus(pool_path);
  const Corpus target = load_corpus(target_path);
  config.validate(pool.entries.size());
  const RunReport report = run_experiment(
      config, pool, target,
      [](const std::string& msg) { std::cerr << "[run] " << msg << "\n"; });
  write_report_files(report, out_dir);

  int failed = 0;
  for (const auto& run : report.runs)
    if (run.failed) ++failed;
  const ExperimentSummary summary = aggregate_runs(report);
  for (const auto& it : summary.iterations)
    std::cerr << "[run] iteration " << it.iteration << " labeled "
              << it.labeled_count << ": mF1=" << format_double(it.mf1)
              << " sdF1=" << format_double(it.sdf1) << " (" << it.n_runs
              << " runs)\n";
  if (failed > 0)
    std::cerr << "[run] " << failed << " run(s) failed and were excluded\n";
  std::cerr << "[run] report written to " << out_dir << "\n";
  return 0;
}

int cmd_baseline(const ExperimentConfig& config, const std::string& pool_path,
                 const std::string& target_path, const std::string& out_dir) {
  const Corpus pool = load_corpus(pool_path);
  const Corpus target = load_corpus(target_path);
  config.validate(pool.entries.size());
  const auto f1s = full_data_baseline(
      config, pool, target,
      [](const std::string& msg) { std::cerr << "[baseline] " << msg << "\n"; });
  const auto [mf1, sdf1] = aggregate_f1(f1s);
  std::filesystem::create_directories(out_dir);
  json j;
  j["config"] = config_to_json(config);
  j["f1_per_run"] = f1s;
  j["mf1"] = mf1;
  j["sdf1"] = sdf1;
  std::ofstream out(std::filesystem::path(out_dir) / "baseline.json",
                    std::ios::binary);
  if (!out) throw DataError("cannot write baseline.json in " + out_dir);
  out << j.dump(2) << '\n';
  std::cerr << "[baseline] mF1=" << format_double(mf1)
            << " sdF1=" << format_double(sdf1) << "\n";
  return 0;
}

int cmd_analyze(const std::vector<std::string>& report_paths,
                const std::string& out_dir) {
  if (report_paths.empty())
    throw ConfigError("analyze: at least one report.json is required "
                      "(usage: floodal analyze -r report.json [-r ...])");
  std::filesystem::create_directories(out_dir);

  CsvWriter spearman_csv(
      (std::filesystem::path(out_dir) / "analysis_spearman.csv").string());
  spearman_csv.row({"report", "iteration", "function", "index", "orientation",
                    "mean_rho", "median_rho", "min_rho", "max_rho", "n_runs",
                    "fraction_p_below_0.05"});
  CsvWriter split_csv(
      (std::filesystem::path(out_dir) / "analysis_split_pearson.csv").string());
  split_csv.row({"report", "stratum", "n", "pearson_r"});
  std::ofstream text(std::filesystem::path(out_dir) / "analysis.txt",
                     std::ios::binary);
  if (!text) throw DataError("cannot write analysis.txt in " + out_dir);

  for (const auto& path : report_paths) {
    const RunReport report = load_report(path);
    text << "report: " << path << "\n";
    text << "  acquisition arm: " << to_string(report.config.acquisition)
         << ", runs: " << report.runs.size() << "\n";

    int n_iters = 0;
    for (const auto& run : report.runs)
      if (!run.failed) n_iters = std::max<int>(n_iters, run.records.size());
    for (int it = 0; it < n_iters; ++it) {
      for (const std::string& fn : {"entropy", "margin", "bald"}) {
        for (const std::string& index : {"bpr", "mdf"}) {
          std::vector<double> rhos;
          int significant = 0;
          for (const auto& run : report.runs) {
            if (run.failed || it >= static_cast<int>(run.records.size()))
              continue;
            auto found = run.records[it].correlations.find(fn);
            if (found == run.records[it].correlations.end()) continue;
            const auto& corr =
                index == "bpr" ? found->second.bpr : found->second.mdf;
            if (!corr.has_value()) continue;
            rhos.push_back(corr->rho);
            if (corr->p_value < 0.05) ++significant;
          }
          if (rhos.empty()) continue;
          std::sort(rhos.begin(), rhos.end());
          double mean = 0.0;
          for (double r : rhos) mean += r;
          mean /= static_cast<double>(rhos.size());
          const double median = rhos[rhos.size() / 2];
          spearman_csv.row(
              {path, std::to_string(it), fn, index, "uncertainty",
               format_double(mean), format_double(median),
               format_double(rhos.front()), format_double(rhos.back()),
               std::to_string(rhos.size()),
               format_double(static_cast<double>(significant) /
                             static_cast<double>(rhos.size()))});
          text << "  iter " << it << " spearman(" << index << ", " << fn
               << "-uncertainty): median " << format_double(median)
               << ", mean " << format_double(mean) << ", p<0.05 in "
               << significant << "/" << rhos.size() << " runs\n";
        }
      }
    }

    // FPR-BPR split Pearson over the iteration-0 pool snapshot.
    const auto indices_path =
        std::filesystem::path(path).parent_path() / "indices.csv";
    if (std::filesystem::exists(indices_path)) {
      const auto rows = read_csv(indices_path.string());
      std::set<std::string> seen;
      std::vector<double> fpr, bpr;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 9 || std::stoi(row[1]) != 0) continue;
        if (!seen.insert(row[2]).second) continue;
        bpr.push_back(std::stod(row[3]));
        fpr.push_back(std::stod(row[5]));
      }
      if (fpr.size() >= 3) {
        const SplitPearson sp = split_pearson(fpr, bpr, 0.5);
        split_csv.row({path, "fpr<0.5", std::to_string(sp.n_below),
                       sp.below.has_value() ? format_double(*sp.below) : ""});
        split_csv.row({path, "fpr>=0.5", std::to_string(sp.n_at_or_above),
                       sp.at_or_above.has_value()
                           ? format_double(*sp.at_or_above)
                           : ""});
        text << "  split pearson(FPR, BPR): below 0.5 -> "
             << (sp.below.has_value() ? format_double(*sp.below) : "n/a")
             << " (n=" << sp.n_below << "), at/above 0.5 -> "
             << (sp.at_or_above.has_value() ? format_double(*sp.at_or_above)
                                            : "n/a")
             << " (n=" << sp.n_at_or_above << ")\n";
      }
    }
    text << "\n";
  }
  std::cerr << "[analyze] tables written to " << out_dir << "\n";
  return 0;
}

int cmd_plot(const PlotSpec& spec) {
  render_plot(spec);
  std::cerr << "[plot] wrote " << spec.output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floodal: pool-based active learning workbench for binary "
               "flood segmentation"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  std::string gen_config, gen_out = default_out_dir();
  gen->add_option("-c,--config", gen_config, "Generator config JSON")
      ->required();
  gen->add_option("-o,--out", gen_out, "Output corpus directory");

  // run
  auto* run = app.add_subcommand("run", "Run an active-learning experiment");
  std::string run_config, run_pool, run_target,
      run_out = default_out_dir();
  bool dry_run = false;
  std::string ov_acquisition;
  int ov_runs = -1, ov_iterations = -1, ov_jobs = -1;
  std::int64_t ov_seed = -1;
  run->add_option("-c,--config", run_config, "Experiment config JSON");
  run->add_option("-p,--pool", run_pool, "Pool corpus (dir or manifest)")
      ->required();
  run->add_option("-t,--target", run_target, "Target corpus (dir or manifest)")
      ->required();
  run->add_option("-o,--out", run_out, "Report output directory");
  run->add_flag("--dry-run", dry_run,
                "Validate the config, print the resolved plan, run nothing");
  run->add_option("--acquisition", ov_acquisition,
                  "Override: random|kmeans|entropy|margin|bald");
  run->add_option("--runs", ov_runs, "Override: number of runs");
  run->add_option("--iterations", ov_iterations, "Override: iterations");
  run->add_option("--seed", ov_seed, "Override: base seed");
  run->add_option("--jobs", ov_jobs, "Override: worker threads");

  // baseline
  auto* base = app.add_subcommand(
      "baseline", "Train on the entire pool (upper-bound reference)");
  std::string base_config, base_pool, base_target,
      base_out = default_out_dir();
  int base_jobs = -1;
  base->add_option("-c,--config", base_config, "Experiment config JSON");
  base->add_option("-p,--pool", base_pool, "Pool corpus")->required();
  base->add_option("-t,--target", base_target, "Target corpus")->required();
  base->add_option("-o,--out", base_out, "Output directory");
  base->add_option("--jobs", base_jobs, "Override: worker threads");

  // analyze
  auto* analyze = app.add_subcommand(
      "analyze", "Correlation and summary tables from reports");
  std::vector<std::string> analyze_reports;
  std::string analyze_out = default_out_dir();
  analyze->add_option("-r,--report", analyze_reports, "report.json path(s)");
  analyze->add_option("-o,--out", analyze_out, "Output directory");

  // plot
  auto* plot = app.add_subcommand("plot", "Render SVG figures from reports");
  std::string plot_spec_path, plot_kind, plot_output, plot_population = "pool";
  std::vector<std::string> plot_inputs;
  int plot_iteration = 0;
  plot->add_option("-s,--spec", plot_spec_path, "Plot spec JSON file");
  plot->add_option("-k,--kind", plot_kind,
                   "mdf_bpr_density|fpr_bpr_density|f1_curve|sd_curve|"
                   "correlation_box");
  plot->add_option("-i,--input", plot_inputs, "report.json path(s)");
  plot->add_option("-o,--output", plot_output, "Output SVG path");
  plot->add_option("--population", plot_population,
                   "Density population: pool|selected");
  plot->add_option("--iteration", plot_iteration, "Density iteration");

  try {
    app.parse(argc, argv);

    if (gen->parsed()) return cmd_gen_data(gen_config, gen_out);

    if (run->parsed() || base->parsed()) {
      json overrides = json::object();
      if (!ov_acquisition.empty()) overrides["acquisition"] = ov_acquisition;
      if (ov_runs >= 0) overrides["n_runs"] = ov_runs;
      if (ov_iterations >= 0) overrides["n_iterations"] = ov_iterations;
      if (ov_seed >= 0) overrides["base_seed"] = ov_seed;
      if (ov_jobs >= 0) overrides["jobs"] = ov_jobs;
      if (base->parsed() && base_jobs >= 0) overrides["jobs"] = base_jobs;
      const std::string cfg_path = run->parsed() ? run_config : base_config;
      const ExperimentConfig config = resolve_run_config(cfg_path, overrides);
      if (run->parsed())
        return cmd_run(config, run_pool, run_target, run_out, dry_run);
      return cmd_baseline(config, base_pool, base_target, base_out);
    }

    if (analyze->parsed()) return cmd_analyze(analyze_reports, analyze_out);

    if (plot->parsed()) {
      PlotSpec spec;
      if (!plot_spec_path.empty()) {
        spec = plotspec_from_json(load_json_file(plot_spec_path));
      } else {
        spec.kind = plot_kind;
        spec.inputs = plot_inputs;
        spec.output = plot_output;
        spec.population = plot_population;
        spec.iteration = plot_iteration;
      }
      return cmd_plot(spec);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
