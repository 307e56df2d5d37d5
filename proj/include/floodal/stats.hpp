#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "floodal/data.hpp"

namespace floodal {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

/// Pixel confusion counts with flood as the positive class. Label no-data
/// pixels count as ground-truth non-flood; every pixel is evaluated.
ConfusionCounts confusion(const LabelMask& pred, const LabelMask& label);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall/F1 with the 0/0 -> 0 convention.
F1Result f1_scores(const ConfusionCounts& counts);

/// Mean and population (divide-by-N) standard deviation.
std::pair<double, double> aggregate_f1(std::span<const double> f1s);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Spearman rank correlation with average ranks for ties; two-sided p-value
/// from the t approximation. Absent when either vector is constant.
/// Requires n >= 3.
std::optional<Correlation> spearman(std::span<const double> x,
                                    std::span<const double> y);

/// Exact two-sided permutation p-value for Spearman's rho (n <= 12); used to
/// validate the t approximation on small samples.
std::optional<double> spearman_exact_pvalue(std::span<const double> x,
                                            std::span<const double> y);

/// Pearson correlation; absent when either vector is constant or n < 2.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

struct SplitPearson {
  std::optional<double> below;        // stratum x < threshold
  std::optional<double> at_or_above;  // stratum x >= threshold
  int n_below = 0;
  int n_at_or_above = 0;
};

/// Pearson per stratum of x (FPR) against y (BPR), split at the threshold.
/// A stratum smaller than 3 yields an absent coefficient.
SplitPearson split_pearson(std::span<const double> fpr,
                           std::span<const double> bpr,
                           double threshold = 0.5);

/// Product-Gaussian kernel density estimate on a square grid. Bandwidths per
/// axis follow Scott's rule (sd * n^(-1/6), floored at 1e-6); the grid covers
/// the data range padded by three bandwidths. The stored grid integrates to
/// one; `mass` keeps the raw (pre-normalization) grid mass as a check that
/// the padding captured the distribution.
struct DensityField {
  int grid_size = 0;
  std::vector<double> grid;  // row-major [iy][ix], normalized to unit mass
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  double bandwidth_x = 0.0, bandwidth_y = 0.0;
  double mass = 0.0;
  bool degenerate_bandwidth = false;

  double cell_width() const { return (x1 - x0) / grid_size; }
  double cell_height() const { return (y1 - y0) / grid_size; }
  double x_center(int ix) const { return x0 + (ix + 0.5) * cell_width(); }
  double y_center(int iy) const { return y0 + (iy + 0.5) * cell_height(); }
};

DensityField kde2d(std::span<const std::pair<double, double>> points,
                   int grid_size = 128);

inline std::vector<double> default_iso_levels() {
  std::vector<double> v;
  for (int i = 1; i <= 19; ++i) v.push_back(i * 0.05);
  return v;
}

/// For each level L, the density threshold whose superlevel set encloses
/// 1 - L of the grid mass (cells sorted by density, mass accumulated).
std::vector<double> iso_proportion_levels(const DensityField& field,
                                          std::span<const double> levels);

using Polyline = std::vector<std::pair<double, double>>;

/// Marching-squares isolines of the density grid at a threshold, with linear
/// interpolation on cell edges; saddle cells resolve by their center average.
std::vector<Polyline> contour_polylines(const DensityField& field,
                                        double threshold);

}  // namespace floodal
