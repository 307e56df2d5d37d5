#include "floodal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

#include "floodal/errors.hpp"

namespace floodal {

ConfusionCounts confusion(const LabelMask& pred, const LabelMask& label) {
  if (pred.height != label.height || pred.width != label.width)
    throw DataError("confusion: dimension mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < label.classes.size(); ++i) {
    // No-data ground truth counts as non-flood; every pixel is evaluated.
    const bool truth = label.classes[i] == kFlood;
    const bool guess = pred.classes[i] == kFlood;
    if (guess && truth)
      ++c.tp;
    else if (guess && !truth)
      ++c.fp;
    else if (!guess && truth)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

F1Result f1_scores(const ConfusionCounts& counts) {
  F1Result r;
  const double tp = static_cast<double>(counts.tp);
  r.precision = counts.tp + counts.fp > 0 ? tp / (counts.tp + counts.fp) : 0.0;
  r.recall = counts.tp + counts.fn > 0 ? tp / (counts.tp + counts.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::pair<double, double> aggregate_f1(std::span<const double> f1s) {
  if (f1s.empty()) throw RuntimeFailure("aggregate_f1: empty input");
  double mean = 0.0;
  for (double v : f1s) mean += v;
  mean /= static_cast<double>(f1s.size());
  double var = 0.0;
  for (double v : f1s) var += (v - mean) * (v - mean);
  var /= static_cast<double>(f1s.size());  // population sd
  return {mean, std::sqrt(var)};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of the t statistic with df degrees of freedom.
double t_two_sided(double t, double df) {
  return betai(df / 2.0, 0.5, df / (df + t * t));
}

std::optional<double> pearson_of(std::span<const double> x,
                                 std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<Correlation> spearman(std::span<const double> x,
                                    std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3)
    throw RuntimeFailure("spearman: need equal lengths >= 3");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const auto rho = pearson_of(rx, ry);
  if (!rho) return std::nullopt;
  Correlation c;
  c.rho = *rho;
  if (std::fabs(c.rho) >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double df = static_cast<double>(n) - 2.0;
    const double t = c.rho * std::sqrt(df / (1.0 - c.rho * c.rho));
    c.p_value = t_two_sided(t, df);
  }
  return c;
}

std::optional<double> spearman_exact_pvalue(std::span<const double> x,
                                            std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3 || n > 12)
    throw RuntimeFailure("spearman_exact_pvalue: need 3 <= n <= 12");
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const auto obs = pearson_of(rx, ry);
  if (!obs) return std::nullopt;
  const double target = std::fabs(*obs) - 1e-12;

  std::sort(ry.begin(), ry.end());
  long total = 0, extreme = 0;
  do {
    const auto rho = pearson_of(rx, ry);
    if (rho && std::fabs(*rho) >= target) ++extreme;
    ++total;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size())
    throw RuntimeFailure("pearson: length mismatch");
  return pearson_of(x, y);
}

SplitPearson split_pearson(std::span<const double> fpr,
                           std::span<const double> bpr, double threshold) {
  if (fpr.size() != bpr.size())
    throw RuntimeFailure("split_pearson: length mismatch");
  std::vector<double> xb, yb, xa, ya;
  for (std::size_t i = 0; i < fpr.size(); ++i) {
    if (fpr[i] < threshold) {
      xb.push_back(fpr[i]);
      yb.push_back(bpr[i]);
    } else {
      xa.push_back(fpr[i]);
      ya.push_back(bpr[i]);
    }
  }
  SplitPearson out;
  out.n_below = static_cast<int>(xb.size());
  out.n_at_or_above = static_cast<int>(xa.size());
  if (out.n_below >= 3) out.below = pearson_of(xb, yb);
  if (out.n_at_or_above >= 3) out.at_or_above = pearson_of(xa, ya);
  return out;
}

DensityField kde2d(std::span<const std::pair<double, double>> points,
                   int grid_size) {
  const std::size_t n = points.size();
  if (n < 2) throw RuntimeFailure("kde2d: need at least 2 points");
  if (grid_size < 4) throw ConfigError("kde2d: grid_size must be >= 4");

  double mx = 0.0, my = 0.0;
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& [px, py] : points) {
    mx += px;
    my += py;
    xmin = std::min(xmin, px);
    xmax = std::max(xmax, px);
    ymin = std::min(ymin, py);
    ymax = std::max(ymax, py);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double vx = 0.0, vy = 0.0;
  for (const auto& [px, py] : points) {
    vx += (px - mx) * (px - mx);
    vy += (py - my) * (py - my);
  }
  vx /= static_cast<double>(n - 1);
  vy /= static_cast<double>(n - 1);

  DensityField f;
  f.grid_size = grid_size;
  const double scott = std::pow(static_cast<double>(n), -1.0 / 6.0);
  f.bandwidth_x = std::sqrt(vx) * scott;
  f.bandwidth_y = std::sqrt(vy) * scott;
  if (f.bandwidth_x < 1e-6 || f.bandwidth_y < 1e-6) {
    f.degenerate_bandwidth = true;
    f.bandwidth_x = std::max(f.bandwidth_x, 1e-6);
    f.bandwidth_y = std::max(f.bandwidth_y, 1e-6);
  }
  f.x0 = xmin - 3.0 * f.bandwidth_x;
  f.x1 = xmax + 3.0 * f.bandwidth_x;
  f.y0 = ymin - 3.0 * f.bandwidth_y;
  f.y1 = ymax + 3.0 * f.bandwidth_y;

  // Separable kernel: per-point row/column factors, then rank-1 accumulation.
  f.grid.assign(static_cast<std::size_t>(grid_size) * grid_size, 0.0);
  std::vector<double> fx(grid_size), fy(grid_size);
  const double inv2bx2 = 0.5 / (f.bandwidth_x * f.bandwidth_x);
  const double inv2by2 = 0.5 / (f.bandwidth_y * f.bandwidth_y);
  for (const auto& [px, py] : points) {
    for (int i = 0; i < grid_size; ++i) {
      const double dx = f.x_center(i) - px;
      fx[i] = std::exp(-dx * dx * inv2bx2);
      const double dy = f.y_center(i) - py;
      fy[i] = std::exp(-dy * dy * inv2by2);
    }
    for (int iy = 0; iy < grid_size; ++iy) {
      double* row = f.grid.data() + static_cast<std::size_t>(iy) * grid_size;
      const double g = fy[iy];
      for (int ix = 0; ix < grid_size; ++ix) row[ix] += g * fx[ix];
    }
  }
  const double norm =
      1.0 / (2.0 * 3.14159265358979323846 * f.bandwidth_x * f.bandwidth_y *
             static_cast<double>(n));
  for (auto& v : f.grid) v *= norm;

  const double cell_area = f.cell_width() * f.cell_height();
  double raw_mass = 0.0;
  for (double v : f.grid) raw_mass += v;
  raw_mass *= cell_area;
  f.mass = raw_mass;
  if (raw_mass > 0.0)
    for (auto& v : f.grid) v /= raw_mass;
  return f;
}

std::vector<double> iso_proportion_levels(const DensityField& field,
                                          std::span<const double> levels) {
  const double cell_area = field.cell_width() * field.cell_height();
  std::vector<double> sorted(field.grid);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double total = 0.0;
  for (double v : sorted) total += v * cell_area;

  std::vector<double> thresholds;
  thresholds.reserve(levels.size());
  for (double level : levels) {
    const double want = (1.0 - level) * total;
    double cum = 0.0;
    double threshold = sorted.empty() ? 0.0 : sorted.front();
    for (double v : sorted) {
      cum += v * cell_area;
      threshold = v;
      if (cum >= want) break;
    }
    thresholds.push_back(threshold);
  }
  return thresholds;
}

namespace {

struct EdgeKey {
  int iy, ix;
  bool horizontal;  // edge from (iy,ix) to (iy,ix+1) if horizontal else to (iy+1,ix)
  bool operator<(const EdgeKey& o) const {
    if (iy != o.iy) return iy < o.iy;
    if (ix != o.ix) return ix < o.ix;
    return horizontal < o.horizontal;
  }
};

struct Segment {
  EdgeKey a, b;
  std::pair<double, double> pa, pb;
};

std::pair<double, double> interp(const DensityField& f, int iy0, int ix0,
                                 int iy1, int ix1, double v0, double v1,
                                 double t) {
  const double s = (t - v0) / (v1 - v0);
  const double x = f.x_center(ix0) + s * (f.x_center(ix1) - f.x_center(ix0));
  const double y = f.y_center(iy0) + s * (f.y_center(iy1) - f.y_center(iy0));
  return {x, y};
}

}  // namespace

std::vector<Polyline> contour_polylines(const DensityField& field,
                                        double threshold) {
  const int g = field.grid_size;
  auto value = [&](int iy, int ix) {
    return field.grid[static_cast<std::size_t>(iy) * g + ix];
  };

  std::vector<Segment> segments;
  for (int iy = 0; iy + 1 < g; ++iy)
    for (int ix = 0; ix + 1 < g; ++ix) {
      const double va = value(iy, ix);        // top-left
      const double vb = value(iy, ix + 1);    // top-right
      const double vc = value(iy + 1, ix + 1);  // bottom-right
      const double vd = value(iy + 1, ix);    // bottom-left
      int mask = 0;
      if (va >= threshold) mask |= 1;
      if (vb >= threshold) mask |= 2;
      if (vc >= threshold) mask |= 4;
      if (vd >= threshold) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      const EdgeKey top{iy, ix, true};
      const EdgeKey bottom{iy + 1, ix, true};
      const EdgeKey left{iy, ix, false};
      const EdgeKey right{iy, ix + 1, false};
      auto p_top = [&] { return interp(field, iy, ix, iy, ix + 1, va, vb, threshold); };
      auto p_bottom = [&] { return interp(field, iy + 1, ix, iy + 1, ix + 1, vd, vc, threshold); };
      auto p_left = [&] { return interp(field, iy, ix, iy + 1, ix, va, vd, threshold); };
      auto p_right = [&] { return interp(field, iy, ix + 1, iy + 1, ix + 1, vb, vc, threshold); };
      auto emit = [&](const EdgeKey& e1, std::pair<double, double> q1,
                      const EdgeKey& e2, std::pair<double, double> q2) {
        segments.push_back({e1, e2, q1, q2});
      };

      switch (mask) {
        case 1: case 14: emit(left, p_left(), top, p_top()); break;
        case 2: case 13: emit(top, p_top(), right, p_right()); break;
        case 4: case 11: emit(right, p_right(), bottom, p_bottom()); break;
        case 8: case 7: emit(left, p_left(), bottom, p_bottom()); break;
        case 3: case 12: emit(left, p_left(), right, p_right()); break;
        case 6: case 9: emit(top, p_top(), bottom, p_bottom()); break;
        case 5: case 10: {
          // Saddle: connectivity from the cell-center average.
          const bool center_in = (va + vb + vc + vd) / 4.0 >= threshold;
          const bool diag_a = mask == 5;  // corners a and c inside
          if (diag_a == center_in) {
            emit(left, p_left(), bottom, p_bottom());
            emit(top, p_top(), right, p_right());
          } else {
            emit(left, p_left(), top, p_top());
            emit(right, p_right(), bottom, p_bottom());
          }
          break;
        }
        default: break;
      }
    }

  // Chain segments into polylines. Nodes are grid edges, segments connect
  // two nodes, and every node touches at most two segments, so the chains
  // are simple paths or loops.
  std::map<EdgeKey, std::vector<std::size_t>> by_edge;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    by_edge[segments[i].a].push_back(i);
    by_edge[segments[i].b].push_back(i);
  }
  auto edge_eq = [](const EdgeKey& a, const EdgeKey& b) {
    return !(a < b) && !(b < a);
  };
  std::vector<char> used(segments.size(), 0);
  std::vector<Polyline> polylines;
  for (std::size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    used[start] = 1;
    std::deque<std::pair<EdgeKey, std::pair<double, double>>> path;
    path.emplace_back(segments[start].a, segments[start].pa);
    path.emplace_back(segments[start].b, segments[start].pb);
    auto extend = [&](bool at_back) {
      for (;;) {
        const EdgeKey node = at_back ? path.back().first : path.front().first;
        std::size_t next = segments.size();
        for (std::size_t cand : by_edge[node])
          if (!used[cand]) next = cand;
        if (next == segments.size()) break;
        used[next] = 1;
        const Segment& s = segments[next];
        const EdgeKey far = edge_eq(s.a, node) ? s.b : s.a;
        const auto point = edge_eq(s.a, node) ? s.pb : s.pa;
        if (at_back)
          path.emplace_back(far, point);
        else
          path.emplace_front(far, point);
      }
    };
    extend(true);
    extend(false);
    Polyline line;
    line.reserve(path.size());
    for (const auto& [edge, point] : path) line.push_back(point);
    polylines.push_back(std::move(line));
  }
  return polylines;
}

}  // namespace floodal
