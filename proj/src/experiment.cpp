#include "floodal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>

#include "floodal/csv.hpp"
#include "floodal/errors.hpp"
#include "floodal/parallel.hpp"
#include "floodal/rng.hpp"

namespace floodal {

using json = nlohmann::ordered_json;

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::kRandom: return "random";
    case AcquisitionKind::kKMeans: return "kmeans";
    case AcquisitionKind::kEntropy: return "entropy";
    case AcquisitionKind::kMargin: return "margin";
    case AcquisitionKind::kBald: return "bald";
  }
  return "unknown";
}

AcquisitionKind acquisition_from_string(const std::string& name) {
  if (name == "random") return AcquisitionKind::kRandom;
  if (name == "kmeans") return AcquisitionKind::kKMeans;
  if (name == "entropy") return AcquisitionKind::kEntropy;
  if (name == "margin") return AcquisitionKind::kMargin;
  if (name == "bald") return AcquisitionKind::kBald;
  throw ConfigError("unknown acquisition function: " + name);
}

void ExperimentConfig::validate(std::size_t pool_size) const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  check(n_initial >= 1, "n_initial must be >= 1");
  check(k_per_iteration >= 1, "k_per_iteration must be >= 1");
  check(n_iterations >= 0, "n_iterations must be >= 0");
  check(n_runs >= 1, "n_runs must be >= 1");
  check(mc_passes >= 1, "mc_passes must be >= 1");
  check(threshold > 0.0 && threshold < 1.0, "threshold must be in (0,1)");
  check(kmeans_components >= 1, "kmeans.n_components must be >= 1");
  check(kmeans_max_iters >= 1, "kmeans.max_iters must be >= 1");
  check(jobs >= 1, "jobs must be >= 1");
  if (pool_size > 0) {
    check(static_cast<std::size_t>(n_initial) +
              static_cast<std::size_t>(k_per_iteration) * n_iterations <=
          pool_size,
          "n_initial + k_per_iteration*n_iterations exceeds the pool size");
  }
  try {
    unet.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  try {
    train.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["acquisition"] = to_string(c.acquisition);
  j["n_initial"] = c.n_initial;
  j["k_per_iteration"] = c.k_per_iteration;
  j["n_iterations"] = c.n_iterations;
  j["n_runs"] = c.n_runs;
  j["mc_passes"] = c.mc_passes;
  j["threshold"] = c.threshold;
  j["exclude_nodata_scores"] = c.exclude_nodata_scores;
  j["full_baseline"] = c.full_baseline;
  j["base_seed"] = c.base_seed;
  j["jobs"] = c.jobs;
  j["unet"] = {{"in_channels", c.unet.in_channels},
               {"depth", c.unet.depth},
               {"base_channels", c.unet.base_channels},
               {"dropout_rate", c.unet.dropout_rate}};
  j["train"] = {{"max_epochs", c.train.max_epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"weight_decay", c.train.weight_decay},
                {"early_stop_delta", c.train.early_stop_delta},
                {"early_stop_patience", c.train.early_stop_patience},
                {"flip_augment", c.train.flip_augment}};
  j["kmeans"] = {{"n_components", c.kmeans_components},
                 {"max_iters", c.kmeans_max_iters}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("acquisition"))
      c.acquisition = acquisition_from_string(j["acquisition"].get<std::string>());
    c.n_initial = j.value("n_initial", c.n_initial);
    c.k_per_iteration = j.value("k_per_iteration", c.k_per_iteration);
    c.n_iterations = j.value("n_iterations", c.n_iterations);
    c.n_runs = j.value("n_runs", c.n_runs);
    c.mc_passes = j.value("mc_passes", c.mc_passes);
    c.threshold = j.value("threshold", c.threshold);
    c.exclude_nodata_scores =
        j.value("exclude_nodata_scores", c.exclude_nodata_scores);
    c.full_baseline = j.value("full_baseline", c.full_baseline);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("unet")) {
      const auto& u = j["unet"];
      c.unet.in_channels = u.value("in_channels", c.unet.in_channels);
      c.unet.depth = u.value("depth", c.unet.depth);
      c.unet.base_channels = u.value("base_channels", c.unet.base_channels);
      c.unet.dropout_rate = u.value("dropout_rate", c.unet.dropout_rate);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
      c.train.early_stop_delta =
          t.value("early_stop_delta", c.train.early_stop_delta);
      c.train.early_stop_patience =
          t.value("early_stop_patience", c.train.early_stop_patience);
      c.train.flip_augment = t.value("flip_augment", c.train.flip_augment);
    }
    if (j.contains("kmeans")) {
      const auto& k = j["kmeans"];
      c.kmeans_components = k.value("n_components", c.kmeans_components);
      c.kmeans_max_iters = k.value("max_iters", c.kmeans_max_iters);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

namespace {

std::vector<const CorpusEntry*> entries_for(const Corpus& corpus,
                                            const std::vector<std::string>& ids) {
  std::vector<const CorpusEntry*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&corpus.by_id(id));
  return out;
}

double evaluate_f1(const UNet& net, std::span<const CorpusEntry* const> test,
                   const ExperimentConfig& config, std::uint64_t seed,
                   int jobs, F1Result* details) {
  std::vector<ConfusionCounts> counts(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t i) {
    const auto pred = mc_predict(net, test[i]->tile, config.mc_passes,
                                 derive_seed(seed, "eval-tile", i));
    counts[i] = confusion(predict_binary(pred, config.threshold),
                          test[i]->mask);
  });
  ConfusionCounts total;
  for (const auto& c : counts) total += c;
  const F1Result r = f1_scores(total);
  if (details != nullptr) *details = r;
  return r.f1;
}

struct PoolScores {
  // per unlabeled tile, in pool order
  std::vector<double> entropy, margin, bald;
  std::vector<AmbiguityIndices> indices;
};

IterationRecord run_iteration(const ExperimentConfig& config,
                              const Corpus& pool_corpus,
                              const Corpus& target_corpus, PoolState& pool,
                              int iteration, std::uint64_t run_seed, int jobs) {
  const auto t_start = std::chrono::steady_clock::now();
  IterationRecord record;
  record.iteration = iteration;
  record.labeled_count = static_cast<int>(pool.labeled_ids.size());

  const auto labeled = entries_for(pool_corpus, pool.labeled_ids);
  const auto validation = entries_for(target_corpus, pool.validation_ids);
  const auto test = entries_for(target_corpus, pool.test_ids);

  UNet net(config.unet, derive_seed(run_seed, "init", iteration));
  TrainConfig tcfg = config.train;
  tcfg.seed = derive_seed(run_seed, "train", iteration);
  tcfg.jobs = jobs;
  const TrainResult trained = train(net, labeled, validation, tcfg);
  record.epochs_trained = static_cast<int>(trained.history.size());
  record.best_val_loss = trained.best_val_loss;
  record.history = trained.history;

  F1Result f1r;
  evaluate_f1(net, test, config, derive_seed(run_seed, "eval", iteration),
              jobs, &f1r);
  record.precision = f1r.precision;
  record.recall = f1r.recall;
  record.f1 = f1r.f1;

  // Score and index every unlabeled tile.
  const auto unlabeled = entries_for(pool_corpus, pool.unlabeled_ids);
  const std::size_t n = unlabeled.size();
  PoolScores ps;
  ps.entropy.resize(n);
  ps.margin.resize(n);
  ps.bald.resize(n);
  ps.indices.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& entry = *unlabeled[i];
    const auto pred =
        mc_predict(net, entry.tile, config.mc_passes,
                   derive_seed(run_seed, "score", iteration, i));
    const LabelMask* mask_for_scores =
        config.exclude_nodata_scores ? &entry.mask : nullptr;
    ps.entropy[i] =
        entropy_score(entry.tile.id, pred, mask_for_scores).score;
    ps.margin[i] = margin_score(entry.tile.id, pred, mask_for_scores).score;
    ps.bald[i] = bald_score(entry.tile.id, pred, mask_for_scores).score;
    ps.indices[i] = compute_indices(entry.tile, entry.mask);
  });
  record.pool_indices = ps.indices;

  // Selection keys for the density and baseline functions are recorded as
  // reportable per-tile scores as well.
  const auto rnd_keys =
      random_keys(pool, derive_seed(run_seed, "random", iteration));
  KMeansSelection km;
  if (n > 0) {
    std::vector<const Tile*> pool_tiles;
    pool_tiles.reserve(n);
    for (const auto* e : unlabeled) pool_tiles.push_back(&e->tile);
    KMeansConfig kc;
    kc.n_components = config.kmeans_components;
    kc.max_iters = config.kmeans_max_iters;
    kc.k = std::min<int>(config.k_per_iteration, static_cast<int>(n));
    kc.seed = derive_seed(run_seed, "kmeans", iteration);
    km = kmeans_select(pool_tiles, kc);
  }

  // Rank correlations between the indices and the uncertainty-oriented
  // scores (margin negated so higher always means more uncertain).
  auto correlate = [&](const std::vector<double>& score, bool negate) {
    FunctionCorrelations out;
    if (n >= 3) {
      std::vector<double> oriented(score);
      if (negate)
        for (auto& v : oriented) v = -v;
      std::vector<double> bpr_v;
      bpr_v.reserve(n);
      for (const auto& ix : ps.indices) bpr_v.push_back(ix.bpr);
      out.bpr = spearman(bpr_v, oriented);
      std::vector<double> mdf_v, mdf_s;
      for (std::size_t i = 0; i < n; ++i)
        if (ps.indices[i].mdf.has_value()) {
          mdf_v.push_back(*ps.indices[i].mdf);
          mdf_s.push_back(oriented[i]);
        }
      if (mdf_v.size() >= 3) out.mdf = spearman(mdf_v, mdf_s);
    }
    return out;
  };
  record.correlations["entropy"] = correlate(ps.entropy, false);
  record.correlations["margin"] = correlate(ps.margin, true);
  record.correlations["bald"] = correlate(ps.bald, false);

  // Choose the next batch with the active function (skipped on the final
  // iteration, which only evaluates the fully grown labeled set).
  const bool acquire = iteration < config.n_iterations && n > 0;
  if (acquire) {
    const int k = config.k_per_iteration;
    switch (config.acquisition) {
      case AcquisitionKind::kRandom:
        record.selected =
            random_select(pool, k, derive_seed(run_seed, "random", iteration));
        break;
      case AcquisitionKind::kKMeans:
        record.selected = km.selected;
        break;
      case AcquisitionKind::kEntropy:
      case AcquisitionKind::kMargin:
      case AcquisitionKind::kBald: {
        std::vector<AcquisitionScore> scores;
        scores.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          if (config.acquisition == AcquisitionKind::kEntropy)
            scores.push_back({unlabeled[i]->tile.id, ps.entropy[i],
                              Orientation::kHigherIsInformative});
          else if (config.acquisition == AcquisitionKind::kMargin)
            scores.push_back({unlabeled[i]->tile.id, ps.margin[i],
                              Orientation::kLowerIsInformative});
          else
            scores.push_back({unlabeled[i]->tile.id, ps.bald[i],
                              Orientation::kHigherIsInformative});
        }
        record.selected = select_top(scores, k);
        break;
      }
    }
  }

  std::vector<char> selected_flag(n, 0);
  {
    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < n; ++i)
      index_of[unlabeled[i]->tile.id] = i;
    for (const auto& id : record.selected) {
      const std::size_t i = index_of.at(id);
      selected_flag[i] = 1;
      record.selected_indices.push_back(ps.indices[i]);
    }
  }

  auto score_rows = [&](const std::vector<double>& values) {
    std::vector<ScoreRow> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = {unlabeled[i]->tile.id, values[i], selected_flag[i] != 0};
    return rows;
  };
  record.scores["entropy"] = score_rows(ps.entropy);
  record.scores["margin"] = score_rows(ps.margin);
  record.scores["bald"] = score_rows(ps.bald);
  {
    std::vector<ScoreRow> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = {rnd_keys[i].first, rnd_keys[i].second, selected_flag[i] != 0};
    record.scores["random"] = rows;
  }
  if (n > 0) {
    std::vector<ScoreRow> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = {unlabeled[i]->tile.id, km.centroid_distance[i],
                 selected_flag[i] != 0};
    record.scores["kmeans"] = rows;
  }

  if (acquire) pool.acquire(record.selected);
  pool.check_invariants();

  record.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return record;
}

RunResult run_single(const ExperimentConfig& config, const Corpus& pool_corpus,
                     const Corpus& target_corpus, int run_index, int jobs,
                     const ProgressFn& progress) {
  RunResult result;
  result.run_index = run_index;
  result.run_seed = derive_seed(config.base_seed, "run", run_index);
  try {
    PoolState pool = build_pool(pool_corpus, target_corpus, config.n_initial,
                                result.run_seed);
    for (int it = 0; it <= config.n_iterations; ++it) {
      result.records.push_back(run_iteration(config, pool_corpus,
                                             target_corpus, pool, it,
                                             result.run_seed, jobs));
      if (progress) {
        const auto& r = result.records.back();
        progress("run " + std::to_string(run_index) + " iteration " +
                 std::to_string(it) + ": labeled=" +
                 std::to_string(r.labeled_count) + " f1=" +
                 format_double(r.f1) + " epochs=" +
                 std::to_string(r.epochs_trained) + " (" +
                 format_double(r.wall_time_sec) + "s)");
      }
    }
    if (config.full_baseline) {
      // Seed tags match iteration 0 so a fully-labeled pool reproduces the
      // ordinary run exactly.
      const auto all = entries_for(pool_corpus, pool_corpus.ids());
      const auto validation = entries_for(target_corpus, pool.validation_ids);
      const auto test = entries_for(target_corpus, pool.test_ids);
      UNet net(config.unet, derive_seed(result.run_seed, "init", 0));
      TrainConfig tcfg = config.train;
      tcfg.seed = derive_seed(result.run_seed, "train", 0);
      tcfg.jobs = jobs;
      train(net, all, validation, tcfg);
      result.full_f1 = evaluate_f1(net, test, config,
                                   derive_seed(result.run_seed, "eval", 0),
                                   jobs, nullptr);
    }
  } catch (const std::exception& e) {
    result.failed = true;
    result.failure = e.what();
    if (progress)
      progress("run " + std::to_string(run_index) + " FAILED: " + e.what());
  }
  return result;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config,
                         const Corpus& pool_corpus, const Corpus& target_corpus,
                         const ProgressFn& progress) {
  config.validate(pool_corpus.entries.size());
  RunReport report;
  report.config = config;
  report.runs.resize(config.n_runs);

  std::mutex progress_mutex;
  ProgressFn locked_progress;
  if (progress)
    locked_progress = [&](const std::string& msg) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(msg);
    };

  const int outer = std::min(config.jobs, config.n_runs);
  const int inner = std::max(1, config.jobs / std::max(1, outer));
  parallel_for(static_cast<std::size_t>(config.n_runs), outer,
               [&](std::size_t r) {
                 report.runs[r] =
                     run_single(config, pool_corpus, target_corpus,
                                static_cast<int>(r), inner, locked_progress);
               });
  return report;
}

std::vector<double> full_data_baseline(const ExperimentConfig& config,
                                       const Corpus& pool_corpus,
                                       const Corpus& target_corpus,
                                       const ProgressFn& progress) {
  ExperimentConfig cfg = config;
  cfg.full_baseline = true;
  cfg.validate(pool_corpus.entries.size());
  std::vector<double> out(cfg.n_runs);
  for (int r = 0; r < cfg.n_runs; ++r) {
    const std::uint64_t run_seed = derive_seed(cfg.base_seed, "run", r);
    PoolState pool =
        build_pool(pool_corpus, target_corpus, cfg.n_initial, run_seed);
    const auto all = entries_for(pool_corpus, pool_corpus.ids());
    const auto validation = entries_for(target_corpus, pool.validation_ids);
    const auto test = entries_for(target_corpus, pool.test_ids);
    UNet net(cfg.unet, derive_seed(run_seed, "init", 0));
    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(run_seed, "train", 0);
    tcfg.jobs = cfg.jobs;
    train(net, all, validation, tcfg);
    out[r] = evaluate_f1(net, test, cfg, derive_seed(run_seed, "eval", 0),
                         cfg.jobs, nullptr);
    if (progress)
      progress("baseline run " + std::to_string(r) + ": f1=" +
               format_double(out[r]));
  }
  return out;
}

ExperimentSummary aggregate_runs(const RunReport& report) {
  ExperimentSummary summary;
  std::size_t n_records = 0;
  for (const auto& run : report.runs)
    if (!run.failed) n_records = std::max(n_records, run.records.size());
  if (n_records == 0) throw RuntimeFailure("aggregate_runs: all runs failed");

  for (std::size_t i = 0; i < n_records; ++i) {
    std::vector<double> f1s;
    int labeled = 0;
    for (const auto& run : report.runs) {
      if (run.failed || i >= run.records.size()) continue;
      f1s.push_back(run.records[i].f1);
      labeled = run.records[i].labeled_count;
    }
    const auto [mf1, sdf1] = aggregate_f1(f1s);
    summary.iterations.push_back({static_cast<int>(i), labeled, mf1, sdf1,
                                  static_cast<int>(f1s.size())});
  }

  std::vector<double> fulls;
  for (const auto& run : report.runs)
    if (!run.failed && run.full_f1.has_value()) fulls.push_back(*run.full_f1);
  if (!fulls.empty()) summary.full_mf1_sdf1 = aggregate_f1(fulls);
  return summary;
}

namespace {

json correlation_to_json(const std::optional<Correlation>& c) {
  if (!c.has_value()) return nullptr;
  return json{{"rho", c->rho}, {"p_value", c->p_value}};
}

std::optional<Correlation> correlation_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Correlation{j["rho"].get<double>(), j["p_value"].get<double>()};
}

json indices_to_json(const AmbiguityIndices& ix) {
  json j;
  j["tile_id"] = ix.tile_id;
  j["bpr"] = ix.bpr;
  j["mdf"] = ix.mdf.has_value() ? json(*ix.mdf) : json(nullptr);
  j["fpr"] = ix.fpr;
  j["bps"] = ix.bps;
  j["fps"] = ix.fps;
  j["tps"] = ix.tps;
  return j;
}

AmbiguityIndices indices_from_json(const json& j) {
  AmbiguityIndices ix;
  ix.tile_id = j["tile_id"].get<std::string>();
  ix.bpr = j["bpr"].get<double>();
  if (!j["mdf"].is_null()) ix.mdf = j["mdf"].get<double>();
  ix.fpr = j["fpr"].get<double>();
  ix.bps = j["bps"].get<long>();
  ix.fps = j["fps"].get<long>();
  ix.tps = j["tps"].get<long>();
  return ix;
}

}  // namespace

void write_report_files(const RunReport& report,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  json j;
  j["version"] = report.version;
#if defined(__VERSION__)
  j["build"] = {{"compiler", __VERSION__},
                {"pointer_bits", static_cast<int>(sizeof(void*) * 8)}};
#endif
  j["config"] = config_to_json(report.config);
  j["csv_files"] = {{"metrics", "metrics.csv"},
                    {"scores", "scores.csv"},
                    {"indices", "indices.csv"},
                    {"selections", "selections.csv"},
                    {"correlations", "correlations.csv"},
                    {"history", "history.csv"}};
  json runs = json::array();
  for (const auto& run : report.runs) {
    json rj;
    rj["run_index"] = run.run_index;
    rj["run_seed"] = run.run_seed;
    rj["failed"] = run.failed;
    if (run.failed) rj["failure"] = run.failure;
    rj["full_f1"] = run.full_f1.has_value() ? json(*run.full_f1) : json(nullptr);
    json records = json::array();
    for (const auto& rec : run.records) {
      json rr;
      rr["iteration"] = rec.iteration;
      rr["labeled_count"] = rec.labeled_count;
      rr["precision"] = rec.precision;
      rr["recall"] = rec.recall;
      rr["f1"] = rec.f1;
      rr["epochs_trained"] = rec.epochs_trained;
      rr["best_val_loss"] = rec.best_val_loss;
      rr["selected"] = rec.selected;
      json sel_ix = json::array();
      for (const auto& ix : rec.selected_indices)
        sel_ix.push_back(indices_to_json(ix));
      rr["selected_indices"] = sel_ix;
      json corr;
      for (const auto& [fn, c] : rec.correlations)
        corr[fn] = {{"bpr", correlation_to_json(c.bpr)},
                    {"mdf", correlation_to_json(c.mdf)}};
      rr["correlations"] = corr;
      records.push_back(std::move(rr));
    }
    rj["records"] = std::move(records);
    runs.push_back(std::move(rj));
  }
  j["runs"] = std::move(runs);

  {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    if (!out) throw DataError("cannot write report.json in " + out_dir.string());
    out << j.dump(2) << '\n';
  }

  CsvWriter metrics((out_dir / "metrics.csv").string());
  metrics.row({"run", "iteration", "labeled_count", "precision", "recall",
               "f1", "epochs_trained", "best_val_loss"});
  CsvWriter scores((out_dir / "scores.csv").string());
  scores.row({"run", "iteration", "tile_id", "function", "score",
              "selected_flag"});
  CsvWriter indices((out_dir / "indices.csv").string());
  indices.row({"run", "iteration", "tile_id", "bpr", "mdf", "fpr", "bps",
               "fps", "tps"});
  CsvWriter selections((out_dir / "selections.csv").string());
  selections.row({"run", "iteration", "rank", "tile_id"});
  CsvWriter correlations((out_dir / "correlations.csv").string());
  correlations.row({"run", "iteration", "function", "index", "orientation",
                    "rho", "p_value"});
  CsvWriter history((out_dir / "history.csv").string());
  history.row({"run", "iteration", "epoch", "train_loss", "val_loss",
               "stopped_flag"});

  for (const auto& run : report.runs) {
    if (run.failed) continue;
    const std::string r = std::to_string(run.run_index);
    for (const auto& rec : run.records) {
      const std::string it = std::to_string(rec.iteration);
      metrics.row({r, it, std::to_string(rec.labeled_count),
                   format_double(rec.precision), format_double(rec.recall),
                   format_double(rec.f1), std::to_string(rec.epochs_trained),
                   format_double(rec.best_val_loss)});
      for (const auto& name : acquisition_names()) {
        auto found = rec.scores.find(name);
        if (found == rec.scores.end()) continue;
        for (const auto& row : found->second)
          scores.row({r, it, row.tile_id, name, format_double(row.score),
                      row.selected ? "1" : "0"});
      }
      for (const auto& ix : rec.pool_indices)
        indices.row({r, it, ix.tile_id, format_double(ix.bpr),
                     ix.mdf.has_value() ? format_double(*ix.mdf) : "",
                     format_double(ix.fpr), std::to_string(ix.bps),
                     std::to_string(ix.fps), std::to_string(ix.tps)});
      for (std::size_t rank = 0; rank < rec.selected.size(); ++rank)
        selections.row({r, it, std::to_string(rank), rec.selected[rank]});
      for (const auto& [fn, c] : rec.correlations) {
        auto emit = [&](const char* index_name,
                        const std::optional<Correlation>& corr,
                        const char* orientation, bool negate) {
          if (!corr.has_value()) return;
          const double rho = negate ? -corr->rho : corr->rho;
          correlations.row({r, it, fn, index_name, orientation,
                            format_double(rho), format_double(corr->p_value)});
        };
        const bool is_margin = fn == "margin";
        emit("bpr", c.bpr, "uncertainty", false);
        emit("mdf", c.mdf, "uncertainty", false);
        // raw-score rows: for margin the raw score is the negated
        // uncertainty-oriented one, so the sign flips back.
        emit("bpr", c.bpr, "raw", is_margin);
        emit("mdf", c.mdf, "raw", is_margin);
      }
      for (const auto& e : rec.history)
        history.row({r, it, std::to_string(e.epoch),
                     format_double(e.train_loss), format_double(e.val_loss),
                     e.stopped ? "1" : "0"});
    }
  }
}

RunReport load_report(const std::filesystem::path& report_json) {
  std::ifstream in(report_json, std::ios::binary);
  if (!in) throw DataError("cannot open report: " + report_json.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed report " + report_json.string() + ": " +
                    e.what());
  }
  RunReport report;
  try {
    report.version = j.value("version", std::string{});
    report.config = config_from_json(j["config"]);
    for (const auto& rj : j["runs"]) {
      RunResult run;
      run.run_index = rj["run_index"].get<int>();
      run.run_seed = rj["run_seed"].get<std::uint64_t>();
      run.failed = rj["failed"].get<bool>();
      if (run.failed) run.failure = rj.value("failure", std::string{});
      if (!rj["full_f1"].is_null()) run.full_f1 = rj["full_f1"].get<double>();
      for (const auto& rr : rj["records"]) {
        IterationRecord rec;
        rec.iteration = rr["iteration"].get<int>();
        rec.labeled_count = rr["labeled_count"].get<int>();
        rec.precision = rr["precision"].get<double>();
        rec.recall = rr["recall"].get<double>();
        rec.f1 = rr["f1"].get<double>();
        rec.epochs_trained = rr["epochs_trained"].get<int>();
        rec.best_val_loss = rr["best_val_loss"].get<double>();
        rec.selected = rr["selected"].get<std::vector<std::string>>();
        for (const auto& ix : rr["selected_indices"])
          rec.selected_indices.push_back(indices_from_json(ix));
        for (const auto& [fn, c] : rr["correlations"].items()) {
          FunctionCorrelations fc;
          fc.bpr = correlation_from_json(c["bpr"]);
          fc.mdf = correlation_from_json(c["mdf"]);
          rec.correlations[fn] = fc;
        }
        run.records.push_back(std::move(rec));
      }
      report.runs.push_back(std::move(run));
    }
  } catch (const json::exception& e) {
    throw DataError("report field error: " + std::string(e.what()));
  }
  return report;
}

}  // namespace floodal
