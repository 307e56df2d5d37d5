#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodal/acquisition.hpp"
#include "floodal/data.hpp"
#include "floodal/indices.hpp"
#include "floodal/stats.hpp"
#include "floodal/unet.hpp"

namespace floodal {

inline constexpr const char* kVersion = "0.1.0";

enum class AcquisitionKind { kRandom, kKMeans, kEntropy, kMargin, kBald };

std::string to_string(AcquisitionKind kind);
AcquisitionKind acquisition_from_string(const std::string& name);
inline const std::vector<std::string>& acquisition_names() {
  static const std::vector<std::string> names{"random", "kmeans", "entropy",
                                              "margin", "bald"};
  return names;
}

struct ExperimentConfig {
  AcquisitionKind acquisition = AcquisitionKind::kMargin;
  int n_initial = 100;
  int k_per_iteration = 100;
  int n_iterations = 4;
  int n_runs = 10;
  int mc_passes = 10;
  double threshold = 0.5;
  bool exclude_nodata_scores = false;  // no-data pixels enter score means by default
  bool full_baseline = false;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  UNetConfig unet;
  TrainConfig train;  // its seed is derived per run and ignored here
  int kmeans_components = 32;
  int kmeans_max_iters = 100;

  /// Throws ConfigError listing every offending key.
  void validate(std::size_t pool_size) const;
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);

struct ScoreRow {
  std::string tile_id;
  double score = 0.0;
  bool selected = false;
};

struct FunctionCorrelations {
  // Spearman of the index against the uncertainty-oriented score (margin
  // scores are negated so that higher always means more uncertain).
  std::optional<Correlation> bpr;
  std::optional<Correlation> mdf;
};

struct IterationRecord {
  int iteration = 0;
  int labeled_count = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  int epochs_trained = 0;
  double best_val_loss = 0.0;
  std::vector<EpochStats> history;
  std::vector<std::string> selected;  // empty on the final iteration
  std::vector<AmbiguityIndices> selected_indices;
  std::vector<AmbiguityIndices> pool_indices;           // unlabeled snapshot
  std::map<std::string, std::vector<ScoreRow>> scores;  // per function
  std::map<std::string, FunctionCorrelations> correlations;
  double wall_time_sec = 0.0;  // diagnostics only, never serialized
};

struct RunResult {
  int run_index = 0;
  std::uint64_t run_seed = 0;
  bool failed = false;
  std::string failure;
  std::vector<IterationRecord> records;  // n_iterations + 1 when successful
  std::optional<double> full_f1;
};

struct RunReport {
  std::string version = kVersion;
  ExperimentConfig config;
  std::vector<RunResult> runs;
};

using ProgressFn = std::function<void(const std::string&)>;

/// The pool-based loop: per run, train from scratch, evaluate on the test
/// split, score and index every unlabeled tile, record rank correlations,
/// acquire k tiles with the configured function (oracle labels come from the
/// corpus masks), repeat. Iteration 0 evaluates before any acquisition; the
/// final record evaluates the fully grown labeled set and selects nothing.
RunReport run_experiment(const ExperimentConfig& config,
                         const Corpus& pool_corpus, const Corpus& target_corpus,
                         const ProgressFn& progress = {});

/// F1 per run for a model trained on the entire pool with labels revealed.
std::vector<double> full_data_baseline(const ExperimentConfig& config,
                                       const Corpus& pool_corpus,
                                       const Corpus& target_corpus,
                                       const ProgressFn& progress = {});

struct IterationSummary {
  int iteration = 0;
  int labeled_count = 0;
  double mf1 = 0.0;
  double sdf1 = 0.0;
  int n_runs = 0;
};

struct ExperimentSummary {
  std::vector<IterationSummary> iterations;
  std::optional<std::pair<double, double>> full_mf1_sdf1;
};

/// Per-iteration mF1/sdF1 across the successful runs.
ExperimentSummary aggregate_runs(const RunReport& report);

// report.json plus the CSV set (metrics, scores, indices, selections,
// correlations, history). Payloads carry no timestamps or timings, so reruns
// with identical inputs are byte-identical.
void write_report_files(const RunReport& report,
                        const std::filesystem::path& out_dir);
RunReport load_report(const std::filesystem::path& report_json);

}  // namespace floodal
