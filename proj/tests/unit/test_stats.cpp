#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodal/errors.hpp"
#include "floodal/rng.hpp"
#include "floodal/stats.hpp"

using namespace floodal;

namespace {

LabelMask mask_of(int h, int w, std::vector<std::uint8_t> codes) {
  LabelMask m;
  m.height = h;
  m.width = w;
  m.classes = std::move(codes);
  return m;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-5.0, 5.0);
  return v;
}

// rank by counting, independently of the implementation's sort
std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i]) ++equal;
    }
    r[i] = less + (equal - 1) / 2.0 + 1.0;
  }
  return r;
}

double reference_pearson(const std::vector<double>& x,
                         const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("confusion: basic rules and the no-data convention") {
  const LabelMask label = mask_of(2, 2, {1, 0, 1, 0});
  const auto exact = confusion(label, label);
  CHECK(exact.fp == 0);
  CHECK(exact.fn == 0);
  CHECK(exact.tp == 2);
  CHECK(exact.tn == 2);

  // all-flood prediction against all-no-data labels: every pixel is a FP
  const LabelMask pred = mask_of(2, 2, {1, 1, 1, 1});
  const LabelMask nodata = mask_of(2, 2, {255, 255, 255, 255});
  const auto forced = confusion(pred, nodata);
  CHECK(forced.tp == 0);
  CHECK(forced.fp == 4);

  const LabelMask wrong_size = mask_of(1, 2, {0, 0});
  CHECK_THROWS_AS(confusion(pred, wrong_size), DataError);
}

TEST_CASE("confusion: matches a per-pixel counting oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMask pred = mask_of(8, 8, std::vector<std::uint8_t>(64, 0));
    LabelMask label = pred;
    for (auto& c : pred.classes) c = rng.bernoulli(0.5) ? kFlood : kNonFlood;
    for (auto& c : label.classes) {
      const double u = rng.uniform();
      c = u < 0.4 ? kFlood : (u < 0.85 ? kNonFlood : kNoData);
    }
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < 64; ++i) {
      const bool truth = label.classes[i] == kFlood;  // no-data -> non-flood
      const bool guess = pred.classes[i] == kFlood;
      tp += truth && guess;
      fp += !truth && guess;
      fn += truth && !guess;
      tn += !truth && !guess;
    }
    const auto got = confusion(pred, label);
    CHECK(got.tp == tp);
    CHECK(got.fp == fp);
    CHECK(got.fn == fn);
    CHECK(got.tn == tn);
    CHECK(got.total() == 64);
  }
}

TEST_CASE("f1_scores: formulas and degenerate conventions") {
  const auto perfect = f1_scores({50, 0, 0, 10});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const auto zero = f1_scores({0, 5, 7, 10});
  CHECK(zero.f1 == 0.0);
  const auto empty = f1_scores({0, 0, 0, 4});
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);

  const auto hand = f1_scores({30, 10, 20, 0});
  CHECK(hand.precision == doctest::Approx(0.75));
  CHECK(hand.recall == doctest::Approx(0.6));
  CHECK(hand.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));

  // harmonic-mean symmetry: swapping fp and fn swaps precision/recall only
  const auto swapped = f1_scores({30, 20, 10, 0});
  CHECK(swapped.precision == doctest::Approx(hand.recall));
  CHECK(swapped.recall == doctest::Approx(hand.precision));
  CHECK(swapped.f1 == doctest::Approx(hand.f1));
}

TEST_CASE("aggregate_f1: mean and population sd") {
  const std::vector<double> same{0.5, 0.5, 0.5};
  const auto [m1, s1] = aggregate_f1(same);
  CHECK(m1 == 0.5);
  CHECK(s1 == 0.0);

  const std::vector<double> two{0.0, 1.0};
  const auto [m2, s2] = aggregate_f1(two);
  CHECK(m2 == 0.5);
  CHECK(s2 == 0.5);

  Rng rng(17);
  const auto v = random_vec(10, rng);
  const auto [m3, s3] = aggregate_f1(v);
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / 10.0;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  CHECK(m3 == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s3 == doctest::Approx(std::sqrt(var / 10.0)).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate_f1(std::vector<double>{}), RuntimeFailure);
}

TEST_CASE("spearman: analytic and frozen cases") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto up = spearman(x, x);
  REQUIRE(up.has_value());
  CHECK(up->rho == 1.0);
  CHECK(up->p_value == 0.0);

  const std::vector<double> down{9, 7, 5, 3, 1};
  const auto inv = spearman(x, down);
  REQUIRE(inv.has_value());
  CHECK(inv->rho == -1.0);

  const std::vector<double> y{2, 1, 4, 3, 5};
  const auto mid = spearman(x, y);
  REQUIRE(mid.has_value());
  CHECK(mid->rho == 0.8);  // 1 - 6*4/(5*24), exact in double arithmetic

  const std::vector<double> constant{2, 2, 2, 2, 2};
  CHECK_FALSE(spearman(x, constant).has_value());
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  RuntimeFailure);
}

TEST_CASE("spearman: tie handling via average ranks") {
  const std::vector<double> x{1, 1, 2};
  const std::vector<double> y{1, 2, 3};
  const auto got = spearman(x, y);
  REQUIRE(got.has_value());
  // ranks x = (1.5, 1.5, 3), y = (1,2,3): rho = 1.5/sqrt(1.5*2)
  CHECK(got->rho == doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("spearman: invariant under strictly monotone transforms") {
  Rng rng(5);
  const auto x = random_vec(40, rng);
  const auto y = random_vec(40, rng);
  auto tx = x;
  for (auto& v : tx) v = std::exp(v);  // strictly increasing
  auto ty = y;
  for (auto& v : ty) v = v * v * v;  // strictly increasing on R
  const auto a = spearman(x, y);
  const auto b = spearman(tx, ty);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->rho == b->rho);
  CHECK(a->p_value == b->p_value);
}

TEST_CASE("spearman: matches counting-rank reference on random vectors") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_vec(12, rng);
    auto y = random_vec(12, rng);
    if (trial % 3 == 0) {  // inject ties
      x[1] = x[0];
      y[5] = y[2];
    }
    const auto got = spearman(x, y);
    REQUIRE(got.has_value());
    const double want = reference_pearson(counting_ranks(x), counting_ranks(y));
    CHECK(got->rho == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("spearman: t-approximation agrees with the exact permutation law") {
  Rng rng(29);
  for (int trial = 0; trial < 6; ++trial) {
    const auto x = random_vec(8, rng);
    const auto y = random_vec(8, rng);
    const auto approx = spearman(x, y);
    const auto exact = spearman_exact_pvalue(x, y);
    REQUIRE(approx.has_value());
    REQUIRE(exact.has_value());
    CHECK(std::fabs(approx->p_value - *exact) < 0.15);
  }
  // strongly correlated data: both ways call it significant
  std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> b{1.1, 2.2, 2.9, 4.4, 5.2, 6.1, 6.9, 8.5};
  CHECK(spearman(a, b)->p_value < 0.01);
  CHECK(*spearman_exact_pvalue(a, b) < 0.01);
}

TEST_CASE("pearson: analytic values and affine invariance") {
  const std::vector<double> x{0.5, 1.0, 2.5, 4.0};
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] + 1.0;
  CHECK(*pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> x3{1, 2, 3};
  const std::vector<double> y3{6, 4, 2};
  CHECK(*pearson(x3, y3) == doctest::Approx(-1.0).epsilon(1e-12));

  Rng rng(3);
  const auto u = random_vec(30, rng);
  const auto v = random_vec(30, rng);
  auto au = u;
  for (auto& w : au) w = 3.5 * w + 11.0;
  auto av = v;
  for (auto& w : av) w = 0.2 * w - 7.0;
  CHECK(std::fabs(*pearson(u, v) - *pearson(au, av)) < 1e-10);

  const std::vector<double> constant{1, 1, 1};
  CHECK_FALSE(pearson(x3, constant).has_value());
}

TEST_CASE("split_pearson: strata and small-stratum convention") {
  std::vector<double> fpr, bpr;
  // below 0.5: increasing; at/above: decreasing
  for (int i = 0; i < 10; ++i) {
    fpr.push_back(0.04 * i);
    bpr.push_back(0.1 + 0.05 * i);
  }
  for (int i = 0; i < 10; ++i) {
    fpr.push_back(0.5 + 0.045 * i);
    bpr.push_back(0.6 - 0.05 * i);
  }
  const auto sp = split_pearson(fpr, bpr, 0.5);
  CHECK(sp.n_below == 10);
  CHECK(sp.n_at_or_above == 10);
  CHECK(*sp.below > 0.99);
  CHECK(*sp.at_or_above < -0.99);

  const std::vector<double> tiny_x{0.1, 0.2, 0.6};
  const std::vector<double> tiny_y{0.3, 0.2, 0.4};
  const auto small = split_pearson(tiny_x, tiny_y, 0.5);
  CHECK_FALSE(small.below.has_value());       // stratum of 2
  CHECK_FALSE(small.at_or_above.has_value()); // stratum of 1
}

namespace {

std::vector<std::pair<double, double>> gaussian_cloud(std::size_t n, double cx,
                                                      double cy, double sd,
                                                      Rng& rng) {
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {cx + sd * rng.normal(), cy + sd * rng.normal()};
  return pts;
}

}  // namespace

TEST_CASE("kde2d: mode recovery, normalization, cluster mass") {
  Rng rng(100);
  const auto cluster = gaussian_cloud(400, 2.0, -1.0, 0.2, rng);
  const DensityField f = kde2d(cluster, 64);
  // argmax within one cell of the cluster mean
  std::size_t arg = 0;
  for (std::size_t i = 1; i < f.grid.size(); ++i)
    if (f.grid[i] > f.grid[arg]) arg = i;
  const int iy = static_cast<int>(arg) / 64, ix = static_cast<int>(arg) % 64;
  CHECK(std::fabs(f.x_center(ix) - 2.0) <= 2.0 * f.cell_width());
  CHECK(std::fabs(f.y_center(iy) + 1.0) <= 2.0 * f.cell_height());

  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = gaussian_cloud(150, rng.uniform(-3, 3), rng.uniform(-3, 3),
                                    0.5 + rng.uniform(), rng);
    const DensityField g = kde2d(pts, 96);
    CHECK(g.mass == doctest::Approx(1.0).epsilon(0.02));
    double total = 0.0;
    for (double v : g.grid) total += v;
    total *= g.cell_width() * g.cell_height();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  // two tight separated clusters: the mass within three bandwidths of each
  // center is that cluster's share. Scott bandwidths follow the global
  // spread, so the clusters sit apart on both axes.
  auto two = gaussian_cloud(500, -5.0, -5.0, 0.3, rng);
  const auto right = gaussian_cloud(500, 5.0, 5.0, 0.3, rng);
  two.insert(two.end(), right.begin(), right.end());
  const DensityField h = kde2d(two, 128);
  for (double c : {-5.0, 5.0}) {
    double mass = 0.0;
    for (int iy = 0; iy < 128; ++iy)
      for (int ix = 0; ix < 128; ++ix) {
        if (std::fabs(h.x_center(ix) - c) > 3.0 * h.bandwidth_x) continue;
        if (std::fabs(h.y_center(iy) - c) > 3.0 * h.bandwidth_y) continue;
        mass += h.grid[static_cast<std::size_t>(iy) * 128 + ix];
      }
    mass *= h.cell_width() * h.cell_height();
    CHECK(mass == doctest::Approx(0.5).epsilon(0.1));  // 0.5 +- 0.05
  }

  CHECK_THROWS_AS(kde2d(std::vector<std::pair<double, double>>{{1, 2}}, 64),
                  RuntimeFailure);
}

TEST_CASE("kde2d: degenerate spread floors the bandwidth and flags it") {
  std::vector<std::pair<double, double>> collinear;
  for (int i = 0; i < 10; ++i) collinear.emplace_back(i * 0.1, 3.0);
  const DensityField f = kde2d(collinear, 32);
  CHECK(f.degenerate_bandwidth);
  CHECK(f.bandwidth_y == doctest::Approx(1e-6));
}

TEST_CASE("iso_proportion_levels: enclosed mass and monotonicity") {
  Rng rng(200);
  auto pts = gaussian_cloud(600, 0.0, 0.0, 1.0, rng);
  const auto extra = gaussian_cloud(300, 2.5, 1.0, 0.5, rng);
  pts.insert(pts.end(), extra.begin(), extra.end());
  const DensityField f = kde2d(pts, 96);
  const auto levels = default_iso_levels();
  const auto thresholds = iso_proportion_levels(f, levels);
  REQUIRE(thresholds.size() == 19);

  const double cell = f.cell_width() * f.cell_height();
  for (std::size_t li = 0; li < levels.size(); ++li) {
    double enclosed = 0.0;
    for (double v : f.grid)
      if (v >= thresholds[li]) enclosed += v * cell;
    // enclosed mass overshoots by at most one grid cell
    CHECK(enclosed >= 1.0 - levels[li] - 1e-9);
    CHECK(enclosed <= 1.0 - levels[li] + *std::max_element(f.grid.begin(),
                                                           f.grid.end()) *
                                             cell + 1e-9);
  }
  for (std::size_t li = 1; li < thresholds.size(); ++li)
    CHECK(thresholds[li] >= thresholds[li - 1]);

  // uniform field: every level collapses to the single density value
  DensityField uniform;
  uniform.grid_size = 8;
  uniform.x0 = 0;
  uniform.x1 = 1;
  uniform.y0 = 0;
  uniform.y1 = 1;
  uniform.grid.assign(64, 1.0);
  const auto flat = iso_proportion_levels(uniform, levels);
  for (double t : flat) CHECK(t == 1.0);
}

TEST_CASE("contour_polylines: crossings, circles, degenerate thresholds") {
  // analytic radial Gaussian on a grid
  DensityField f;
  f.grid_size = 128;
  f.x0 = -4;
  f.x1 = 4;
  f.y0 = -4;
  f.y1 = 4;
  f.grid.resize(128 * 128);
  for (int iy = 0; iy < 128; ++iy)
    for (int ix = 0; ix < 128; ++ix) {
      const double x = f.x_center(ix), y = f.y_center(iy);
      f.grid[static_cast<std::size_t>(iy) * 128 + ix] =
          std::exp(-(x * x + y * y) / 2.0);
    }

  SUBCASE("no crossings above the maximum") {
    CHECK(contour_polylines(f, 2.0).empty());
  }
  SUBCASE("threshold at the global max: empty or a degenerate loop") {
    const auto polys = contour_polylines(f, 1.0);
    std::size_t pts = 0;
    for (const auto& p : polys) pts += p.size();
    CHECK(pts <= 8);
  }
  SUBCASE("level sets approximate circles") {
    const double t = 0.5;
    const double want_r = std::sqrt(-2.0 * std::log(t));
    const auto polys = contour_polylines(f, t);
    REQUIRE(!polys.empty());
    std::size_t checked = 0;
    for (const auto& poly : polys)
      for (const auto& [x, y] : poly) {
        const double r = std::hypot(x, y);
        CHECK(std::fabs(r - want_r) < 2.0 * f.cell_width());
        ++checked;
      }
    CHECK(checked > 20);
  }
}
