#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "floodal/data.hpp"
#include "floodal/unet.hpp"

namespace floodal {

enum class Orientation {
  kHigherIsInformative,  // entropy, BALD
  kLowerIsInformative,   // margin
};

struct AcquisitionScore {
  std::string tile_id;
  double score = 0.0;
  Orientation orientation = Orientation::kHigherIsInformative;
};

// Tile scores are means of per-pixel uncertainties over all pixels; passing a
// mask restricts the mean to valid (non-no-data) pixels instead.

/// Mean binary entropy (natural log) of the calibrated map.
AcquisitionScore entropy_score(const std::string& tile_id,
                               const StochasticPrediction& pred,
                               const LabelMask* exclude_nodata = nullptr);

/// Mean |2p-1| of the calibrated map; in the binary setting the two per-pass
/// class means reduce to p and 1-p, so this is exact, not an approximation.
AcquisitionScore margin_score(const std::string& tile_id,
                              const StochasticPrediction& pred,
                              const LabelMask* exclude_nodata = nullptr);

/// Mean mutual information: entropy of the mean probability minus the mean
/// of the per-pass entropies.
AcquisitionScore bald_score(const std::string& tile_id,
                            const StochasticPrediction& pred,
                            const LabelMask* exclude_nodata = nullptr);

/// Per-pixel helpers shared by the score functions and their tests.
double pixel_entropy(double p);
double pixel_margin(double p);

/// Uniform draw of k unlabeled ids without replacement; equivalent to ranking
/// by a seeded per-tile key, which doubles as a reportable score.
std::vector<std::string> random_select(const PoolState& pool, int k,
                                       std::uint64_t seed);
std::vector<std::pair<std::string, double>> random_keys(const PoolState& pool,
                                                        std::uint64_t seed);

struct KMeansConfig {
  int n_components = 32;
  int k = 0;
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct KMeansSelection {
  std::vector<std::string> selected;  // ordered by cluster index
  // distance of every pool tile to its assigned centroid, pool order
  std::vector<double> centroid_distance;
};

/// Density-based acquisition: flatten tiles, PCA to n_components, k-means++
/// plus Lloyd iterations, then the member closest to each centroid.
KMeansSelection kmeans_select(std::span<const Tile* const> pool_tiles,
                              const KMeansConfig& config);

/// PCA projection used by kmeans_select, exposed for tests: rows are tiles,
/// columns the leading principal components of the centered data.
std::vector<std::vector<double>> pca_project(
    std::span<const std::vector<double>> rows, int n_components);

/// Top-k tile ids by informativeness; ties break toward the smaller id.
std::vector<std::string> select_top(std::span<const AcquisitionScore> scores,
                                    int k);

}  // namespace floodal
