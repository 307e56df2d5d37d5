#include "floodal/acquisition.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "floodal/errors.hpp"
#include "floodal/rng.hpp"

namespace floodal {

namespace {
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double clamp_prob(double p) { return std::clamp(p, kClampLo, kClampHi); }

template <typename F>
AcquisitionScore mean_over_pixels(const std::string& tile_id,
                                  const StochasticPrediction& pred,
                                  const LabelMask* exclude_nodata,
                                  Orientation orientation, F&& pixel_value) {
  const std::size_t n = pred.calibrated.size();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude_nodata != nullptr && exclude_nodata->classes[i] == kNoData)
      continue;
    sum += pixel_value(i);
    ++count;
  }
  if (count == 0) throw RuntimeFailure("acquisition score: no pixels to score");
  return {tile_id, sum / static_cast<double>(count), orientation};
}

}  // namespace

double pixel_entropy(double p) {
  const double q = clamp_prob(p);
  return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

double pixel_margin(double p) { return std::fabs(2.0 * p - 1.0); }

AcquisitionScore entropy_score(const std::string& tile_id,
                               const StochasticPrediction& pred,
                               const LabelMask* exclude_nodata) {
  return mean_over_pixels(
      tile_id, pred, exclude_nodata, Orientation::kHigherIsInformative,
      [&](std::size_t i) { return pixel_entropy(pred.calibrated[i]); });
}

AcquisitionScore margin_score(const std::string& tile_id,
                              const StochasticPrediction& pred,
                              const LabelMask* exclude_nodata) {
  return mean_over_pixels(
      tile_id, pred, exclude_nodata, Orientation::kLowerIsInformative,
      [&](std::size_t i) { return pixel_margin(pred.calibrated[i]); });
}

AcquisitionScore bald_score(const std::string& tile_id,
                            const StochasticPrediction& pred,
                            const LabelMask* exclude_nodata) {
  return mean_over_pixels(
      tile_id, pred, exclude_nodata, Orientation::kHigherIsInformative,
      [&](std::size_t i) {
        double mean_h = 0.0;
        for (int t = 0; t < pred.T; ++t)
          mean_h += pixel_entropy(pred.passes[t][i]);
        mean_h /= pred.T;
        return pixel_entropy(pred.calibrated[i]) - mean_h;
      });
}

std::vector<std::pair<std::string, double>> random_keys(const PoolState& pool,
                                                        std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-select"));
  std::vector<std::pair<std::string, double>> keys;
  keys.reserve(pool.unlabeled_ids.size());
  for (const auto& id : pool.unlabeled_ids) keys.emplace_back(id, rng.uniform());
  return keys;
}

std::vector<std::string> random_select(const PoolState& pool, int k,
                                       std::uint64_t seed) {
  if (k < 0 || static_cast<std::size_t>(k) > pool.unlabeled_ids.size())
    throw RuntimeFailure("random_select: k exceeds the unlabeled pool");
  auto keys = random_keys(pool, seed);
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(keys[i].first);
  return out;
}

std::vector<std::vector<double>> pca_project(
    std::span<const std::vector<double>> rows, int n_components) {
  const int n = static_cast<int>(rows.size());
  if (n == 0) return {};
  const int d = static_cast<int>(rows[0].size());
  const int m = std::min({n_components, n, d});

  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rows[i][j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  Eigen::MatrixXd proj =
      svd.matrixU().leftCols(m) *
      svd.singularValues().head(m).asDiagonal();

  // Fix component signs (largest-magnitude coordinate positive) so the
  // projection is reproducible.
  for (int j = 0; j < m; ++j) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < n; ++i)
      if (std::fabs(proj(i, j)) > best) {
        best = std::fabs(proj(i, j));
        arg = i;
      }
    if (proj(arg, j) < 0.0) proj.col(j) = -proj.col(j);
  }

  std::vector<std::vector<double>> out(n, std::vector<double>(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[i][j] = proj(i, j);
  return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KMeansSelection kmeans_select(std::span<const Tile* const> pool_tiles,
                              const KMeansConfig& config) {
  const int n = static_cast<int>(pool_tiles.size());
  const int k = config.k;
  if (k < 1 || k > n)
    throw RuntimeFailure("kmeans_select: need 1 <= k <= pool size");

  std::vector<std::vector<double>> rows(n);
  for (int i = 0; i < n; ++i)
    rows[i].assign(pool_tiles[i]->pixels.begin(), pool_tiles[i]->pixels.end());
  std::vector<std::vector<double>> y =
      pca_project(rows, std::max(1, config.n_components));
  const int m = static_cast<int>(y[0].size());

  Rng rng(derive_seed(config.seed, "kmeans"));

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(y[rng.below(n)]);
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& cen : centroids) best = std::min(best, sq_dist(y[i], cen));
      d2[i] = best;
      total += best;
    }
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.below(n));  // degenerate: all points coincide
    } else {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= target) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(y[pick]);
  }

  // Lloyd iterations until assignments settle.
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < std::max(1, config.max_iters); ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(y[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = sq_dist(y[i], centroids[c]);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<int> count(k, 0);
    std::vector<std::vector<double>> sum(k, std::vector<double>(m, 0.0));
    for (int i = 0; i < n; ++i) {
      ++count[assign[i]];
      for (int j = 0; j < m; ++j) sum[assign[i]][j] += y[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Re-seed an empty cluster with the farthest point from the largest
        // cluster so exactly k selections survive.
        int largest = 0;
        for (int cc = 1; cc < k; ++cc)
          if (count[cc] > count[largest]) largest = cc;
        int far_idx = -1;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          if (assign[i] != largest) continue;
          const double dd = sq_dist(y[i], centroids[largest]);
          if (dd > far_d) {
            far_d = dd;
            far_idx = i;
          }
        }
        if (far_idx >= 0) {
          centroids[c] = y[far_idx];
          changed = true;
        }
        continue;
      }
      for (int j = 0; j < m; ++j) centroids[c][j] = sum[c][j] / count[c];
    }
    if (!changed) break;
  }

  KMeansSelection result;
  result.centroid_distance.resize(n);
  for (int i = 0; i < n; ++i)
    result.centroid_distance[i] = std::sqrt(sq_dist(y[i], centroids[assign[i]]));

  std::vector<char> taken(n, 0);
  std::vector<int> deferred;
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double bd = std::numeric_limits<double>::max();
    for (int i = 0; i < n; ++i) {
      if (taken[i] || assign[i] != c) continue;
      const double dd = sq_dist(y[i], centroids[c]);
      if (dd < bd) {
        bd = dd;
        best = i;
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      result.selected.push_back(pool_tiles[best]->id);
    } else {
      deferred.push_back(c);
    }
  }
  // Degenerate pools can leave clusters without an unselected member; fill
  // with the first unselected tiles so the selection stays duplicate-free.
  for (int c : deferred) {
    (void)c;
    for (int i = 0; i < n; ++i)
      if (!taken[i]) {
        taken[i] = 1;
        result.selected.push_back(pool_tiles[i]->id);
        break;
      }
  }
  return result;
}

std::vector<std::string> select_top(std::span<const AcquisitionScore> scores,
                                    int k) {
  if (scores.empty()) throw RuntimeFailure("select_top: no scores");
  if (k < 0 || static_cast<std::size_t>(k) > scores.size())
    throw RuntimeFailure("select_top: k exceeds the score list");
  const Orientation orientation = scores.front().orientation;
  for (const auto& s : scores)
    if (s.orientation != orientation)
      throw RuntimeFailure("select_top: mixed score orientations");
  std::vector<const AcquisitionScore*> ptrs;
  ptrs.reserve(scores.size());
  for (const auto& s : scores) ptrs.push_back(&s);
  std::sort(ptrs.begin(), ptrs.end(),
            [orientation](const AcquisitionScore* a, const AcquisitionScore* b) {
              if (a->score != b->score)
                return orientation == Orientation::kHigherIsInformative
                           ? a->score > b->score
                           : a->score < b->score;
              return a->tile_id < b->tile_id;
            });
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(ptrs[i]->tile_id);
  return out;
}

}  // namespace floodal
