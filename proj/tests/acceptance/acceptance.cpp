// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance --criteria all
//   acceptance --criteria 1,2,3 [--cli path/to/floodal] [--jobs N]
//
// Criteria 10 and 11 shell out to the CLI binary and are skipped (as
// failures) unless --cli is given. Criteria 7 and 9 share one benchmark
// execution: two acquisition arms, five seeded runs each.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "floodal/acquisition.hpp"
#include "floodal/data.hpp"
#include "floodal/experiment.hpp"
#include "floodal/indices.hpp"
#include "floodal/nn.hpp"
#include "floodal/parallel.hpp"
#include "floodal/rng.hpp"
#include "floodal/stats.hpp"
#include "floodal/unet.hpp"

using namespace floodal;
namespace fs = std::filesystem;

namespace {

int g_jobs = default_jobs();
std::string g_cli;
fs::path g_out;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- helpers

TensorD random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  TensorD t(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-scale, scale));
  return t;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    s += static_cast<double>(a.data[i]) * b.data[i];
  return s;
}

double fd_max_rel(TensorD& wiggled, const TensorD& analytic,
                  const std::function<double()>& loss, double h = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < wiggled.numel(); ++i) {
    const float saved = wiggled.data[i];
    wiggled.data[i] = static_cast<float>(saved + h);
    const double up = loss();
    wiggled.data[i] = static_cast<float>(saved - h);
    const double down = loss();
    wiggled.data[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data[i];
    worst = std::max(worst, std::fabs(a - numeric) /
                                std::max({std::fabs(a), std::fabs(numeric), 1.0}));
  }
  return worst;
}

// ------------------------------------------------- criterion 1: gradients

Outcome criterion_gradients() {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(10'000 + trial);
    {  // conv2d
      TensorD x = random_tensor({2, 3, 4}, rng);
      TensorD w = random_tensor({3, 2, 3, 3}, rng);
      TensorD b = random_tensor({3}, rng);
      const TensorD r = random_tensor({3, 3, 4}, rng);
      TensorD gi, gw, gb;
      conv2d_backward(x, w, r, gi, gw, gb);
      auto loss = [&] { return dot(conv2d_forward(x, w, b), r); };
      worst = std::max({worst, fd_max_rel(x, gi, loss), fd_max_rel(w, gw, loss),
                        fd_max_rel(b, gb, loss)});
    }
    {  // transposed_conv2
      TensorD x = random_tensor({2, 2, 3}, rng);
      TensorD w = random_tensor({2, 2, 2, 2}, rng);
      TensorD b = random_tensor({2}, rng);
      const TensorD r = random_tensor({2, 4, 6}, rng);
      TensorD gi, gw, gb;
      transposed_conv2_backward(x, w, r, gi, gw, gb);
      auto loss = [&] { return dot(transposed_conv2_forward(x, w, b), r); };
      worst = std::max({worst, fd_max_rel(x, gi, loss), fd_max_rel(w, gw, loss),
                        fd_max_rel(b, gb, loss)});
    }
    {  // maxpool2: windows drawn from a coarse grid with distinct levels, so
       // the probe step can never flip an argmax
      TensorD x({2, 4, 4});
      for (int c = 0; c < 2; ++c)
        for (int wy = 0; wy < 2; ++wy)
          for (int wx = 0; wx < 2; ++wx) {
            double levels[4] = {0.0, 0.1, 0.2, 0.3};
            for (int i = 3; i > 0; --i)
              std::swap(levels[i], levels[rng.below(i + 1)]);
            x.at(c, 2 * wy, 2 * wx) = static_cast<float>(levels[0]);
            x.at(c, 2 * wy, 2 * wx + 1) = static_cast<float>(levels[1]);
            x.at(c, 2 * wy + 1, 2 * wx) = static_cast<float>(levels[2]);
            x.at(c, 2 * wy + 1, 2 * wx + 1) = static_cast<float>(levels[3]);
          }
      const TensorD r = random_tensor({2, 2, 2}, rng);
      std::vector<int> am;
      maxpool2_forward(x, am);
      const TensorD gi = maxpool2_backward(r, am, x.shape);
      auto loss = [&] {
        std::vector<int> am2;
        return dot(maxpool2_forward(x, am2), r);
      };
      worst = std::max(worst, fd_max_rel(x, gi, loss, 1e-3));
    }
    {  // spatial dropout: backward against the recorded forward mask
      TensorD x = random_tensor({6, 3, 3}, rng);
      std::vector<std::uint8_t> mask;
      Rng drop_rng(rng.next_u64());
      spatial_dropout_forward(x, 0.4, drop_rng, mask);
      const TensorD r = random_tensor({6, 3, 3}, rng);
      const TensorD gi = spatial_dropout_backward(r, mask, 0.4);
      auto loss = [&] {  // the recorded mask defines the linear map
        double s = 0.0;
        const float scale = 1.0f / 0.6f;
        for (int c = 0; c < 6; ++c) {
          if (!mask[c]) continue;
          for (std::size_t i = 0; i < 9; ++i)
            s += static_cast<double>(x.channel(c)[i]) * scale *
                 r.channel(c)[i];
        }
        return s;
      };
      worst = std::max(worst, fd_max_rel(x, gi, loss));
    }
    {  // concat_channels
      TensorD a = random_tensor({2, 3, 3}, rng);
      TensorD b = random_tensor({1, 3, 3}, rng);
      const TensorD r = random_tensor({3, 3, 3}, rng);
      TensorD ga({2, 3, 3}), gb({1, 3, 3});
      concat_channels_backward(r, ga, gb);
      auto loss = [&] { return dot(concat_channels(a, b), r); };
      worst = std::max({worst, fd_max_rel(a, ga, loss), fd_max_rel(b, gb, loss)});
    }
    {  // bce through sigmoid
      TensorD z = random_tensor({1, 3, 3}, rng, 2.0);
      std::vector<std::uint8_t> tgt(9), valid(9, 1);
      for (auto& t : tgt) t = rng.bernoulli(0.5) ? 1 : 0;
      TensorD prob;
      auto loss = [&] {
        prob = sigmoid_forward(z);
        return bce_loss(prob, tgt, valid);
      };
      loss();
      const TensorD gz =
          sigmoid_backward(bce_backward(prob, tgt, valid), prob);
      worst = std::max(worst, fd_max_rel(z, gz, loss));
    }
    {  // assembled network on the linear piece selected by the forward pass
       // (relu supports, pooling argmaxes and the dropout mask frozen, which
       // is exactly what the backward pass differentiates)
      UNetConfig cfg;
      cfg.in_channels = 2;
      cfg.depth = 2;
      cfg.base_channels = 4;
      cfg.dropout_rate = trial % 2 == 0 ? 0.0 : 0.3;
      UNet net(cfg, 20'000 + trial);
      const TensorD input = random_tensor({2, 8, 8}, rng, 0.5);
      std::vector<std::uint8_t> tgt(64), valid(64, 1);
      for (auto& t : tgt) t = rng.bernoulli(0.5) ? 1 : 0;
      UNetWorkspace pattern;
      Rng drop_rng(30'000 + trial);
      net.forward(input, cfg.dropout_rate > 0.0 ? &drop_rng : nullptr,
                  pattern);
      auto forward = [&]() -> double {
        return bce_loss(net.forward_frozen(input, pattern), tgt, valid);
      };
      auto backward = [&] {
        const TensorD grad = bce_backward(pattern.prob, tgt, valid);
        std::vector<TensorD> grads;
        for (const auto& p : net.params()) grads.emplace_back(p.value.shape);
        net.backward(pattern, grad, grads);
        auto params = net.params();
        for (std::size_t i = 0; i < params.size(); ++i)
          params[i].grad = grads[i];
      };
      const auto report = grad_check(net.params(), forward, backward, 1e-3, 6);
      worst = std::max(worst, report.max_rel_error);
    }
  }
  std::ostringstream msg;
  msg << "max relative error " << worst << " over 100 trials (tolerance 1e-3)";
  return {worst < 1e-3, msg.str()};
}

// -------------------------------------------- criterion 2: analytic scores

Outcome criterion_analytic_scores() {
  StochasticPrediction uniform;
  uniform.T = 3;
  uniform.height = 8;
  uniform.width = 8;
  uniform.passes.assign(3, std::vector<float>(64, 0.5f));
  uniform.calibrated.assign(64, 0.5f);
  const double e = entropy_score("u", uniform).score;
  const double m = margin_score("u", uniform).score;

  UNetConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 4;
  cfg.dropout_rate = 0.0;  // identical passes
  UNet net(cfg, 3);
  SceneConfig sc;
  sc.size = 16;
  const auto [tile, mask] = generate_synthetic_scene(sc, 5, "t", "t");
  const auto pred = mc_predict(net, tile, 5, 7);
  const double b = bald_score("t", pred).score;

  std::ostringstream msg;
  msg << "entropy-ln2=" << std::fabs(e - std::log(2.0)) << " margin=" << m
      << " |bald|=" << std::fabs(b);
  const bool pass = std::fabs(e - std::log(2.0)) <= 1e-6 &&
                    std::fabs(m) <= 1e-6 && std::fabs(b) <= 1e-6;
  return {pass, msg.str()};
}

// --------------------------------------------- criterion 3: rank reversal

Outcome criterion_rank_reversal() {
  Rng rng(777);
  const std::size_t n = 10'000;
  std::vector<double> p(n);
  for (auto& v : p) v = rng.uniform(1e-6, 1.0 - 1e-6);
  std::vector<std::size_t> by_entropy(n), by_margin(n);
  for (std::size_t i = 0; i < n; ++i) by_entropy[i] = by_margin[i] = i;
  std::sort(by_entropy.begin(), by_entropy.end(),
            [&](std::size_t a, std::size_t b) {
              const double ea = pixel_entropy(p[a]), eb = pixel_entropy(p[b]);
              return ea != eb ? ea > eb : a < b;
            });
  std::sort(by_margin.begin(), by_margin.end(),
            [&](std::size_t a, std::size_t b) {
              const double ma = pixel_margin(p[a]), mb = pixel_margin(p[b]);
              return ma != mb ? ma < mb : a < b;
            });
  const bool equal = by_entropy == by_margin;
  return {equal, equal ? "entropy order is exactly the reverse margin order "
                         "on 10,000 pixels"
                       : "orders differ"};
}

// --------------------------------------------- criterion 4: index oracles

LabelMask random_mask(int h, int w, Rng& rng, double nodata_p) {
  LabelMask m;
  m.height = h;
  m.width = w;
  m.classes.resize(static_cast<std::size_t>(h) * w);
  for (auto& c : m.classes) {
    if (rng.bernoulli(nodata_p))
      c = kNoData;
    else
      c = rng.bernoulli(0.5) ? kFlood : kNonFlood;
  }
  return m;
}

Outcome criterion_index_oracles() {
  double worst = 0.0;
  int evaluated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(40'000 + trial);
    const int h = 6 + static_cast<int>(rng.below(6));
    const int w = 6 + static_cast<int>(rng.below(6));
    const LabelMask m = random_mask(h, w, rng, 0.08);
    Tile t;
    t.id = "t";
    t.channels = 3;
    t.height = h;
    t.width = w;
    t.pixels.resize(3ull * h * w);
    for (auto& v : t.pixels) v = static_cast<float>(rng.uniform());

    long tps = 0, fps = 0, bps = 0, nf = 0, nd = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto c = m.at(y, x);
        if (c == kNoData) continue;
        ++tps;
        if (c == kFlood) {
          ++fps;
          ++nf;
        } else {
          ++nd;
        }
        bool boundary = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (m.at(ny, nx) != kNoData && m.at(ny, nx) != c) boundary = true;
          }
        if (boundary) ++bps;
      }
    if (tps == 0) continue;
    const auto bpr = compute_bpr(m);
    const auto fpr = compute_fpr(m);
    worst = std::max(worst, std::fabs(bpr.bpr - static_cast<double>(bps) / tps));
    worst = std::max(worst, std::fabs(fpr.fpr - static_cast<double>(fps) / tps));

    if (nf > 3 && nd > 3) {
      // dense reference with an explicitly inverted covariance (Gauss-Jordan)
      const std::size_t n = t.pixel_count();
      double mf[3] = {}, md[3] = {}, ma[3] = {};
      for (std::size_t i = 0; i < n; ++i) {
        if (m.classes[i] == kNoData) continue;
        for (int c = 0; c < 3; ++c) {
          const double v = t.pixels[c * n + i];
          ma[c] += v;
          (m.classes[i] == kFlood ? mf[c] : md[c]) += v;
        }
      }
      for (int c = 0; c < 3; ++c) {
        mf[c] /= nf;
        md[c] /= nd;
        ma[c] /= tps;
      }
      double s[3][6] = {};
      for (std::size_t i = 0; i < n; ++i) {
        if (m.classes[i] == kNoData) continue;
        double d[3];
        for (int c = 0; c < 3; ++c) d[c] = t.pixels[c * n + i] - ma[c];
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) s[a][b] += d[a] * d[b];
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) s[a][b] /= tps;
        for (int b = 0; b < 3; ++b) s[a][3 + b] = a == b ? 1.0 : 0.0;
      }
      for (int col = 0; col < 3; ++col) {  // Gauss-Jordan with partial pivot
        int piv = col;
        for (int r2 = col + 1; r2 < 3; ++r2)
          if (std::fabs(s[r2][col]) > std::fabs(s[piv][col])) piv = r2;
        std::swap(s[col], s[piv]);
        const double d = s[col][col];
        for (int b = 0; b < 6; ++b) s[col][b] /= d;
        for (int r2 = 0; r2 < 3; ++r2) {
          if (r2 == col) continue;
          const double f = s[r2][col];
          for (int b = 0; b < 6; ++b) s[r2][b] -= f * s[col][b];
        }
      }
      double diff[3], q = 0.0;
      for (int c = 0; c < 3; ++c) diff[c] = mf[c] - md[c];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) q += diff[a] * s[a][3 + b] * diff[b];
      const double want = std::sqrt(std::max(0.0, q));
      const auto got = compute_mdf(t, m);
      if (got.has_value()) {
        worst = std::max(worst, std::fabs(*got - want));
        ++evaluated;
      }
    }
  }

  // MDF invariance under invertible channel maps
  double worst_invariance = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(50'000 + trial);
    Tile t;
    t.id = "t";
    t.channels = 3;
    t.height = 8;
    t.width = 8;
    t.pixels.resize(192);
    for (auto& v : t.pixels) v = static_cast<float>(rng.uniform());
    LabelMask m = random_mask(8, 8, rng, 0.0);
    m.classes[0] = kFlood;
    m.classes[1] = kNonFlood;
    double a[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        a[i][j] = (i == j ? 1.0 : 0.0) + 0.25 * rng.uniform(-1.0, 1.0);
    Tile mapped = t;
    for (std::size_t i = 0; i < 64; ++i)
      for (int r2 = 0; r2 < 3; ++r2) {
        double v = 0.0;
        for (int c = 0; c < 3; ++c) v += a[r2][c] * t.pixels[c * 64 + i];
        mapped.pixels[r2 * 64 + i] = static_cast<float>(v);
      }
    const auto base = compute_mdf(t, m);
    const auto xf = compute_mdf(mapped, m);
    if (base && xf)
      worst_invariance = std::max(worst_invariance, std::fabs(*base - *xf));
  }

  std::ostringstream msg;
  msg << "max |delta| vs oracles " << worst << " (tolerance 1e-5, "
      << evaluated << " MDF cases); linear-invariance max |delta| "
      << worst_invariance << " (tolerance 1e-4)";
  return {worst < 1e-5 && worst_invariance < 1e-4 && evaluated > 100,
          msg.str()};
}

// ------------------------------------------ criterion 5: statistics oracles

Outcome criterion_stats_oracles() {
  auto counting_ranks = [](const std::vector<double>& v) {
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
  };
  auto ref_pearson = [](const std::vector<double>& x,
                        const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(60'000 + trial);
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = rng.uniform(-3, 3);
    for (auto& v : y) v = rng.uniform(-3, 3);
    if (trial % 4 == 0 && n > 3) {  // inject ties
      x[1] = x[0];
      y[2] = y[0];
    }
    const auto sp = spearman(x, y);
    if (!sp.has_value()) return {false, "unexpected undefined spearman"};
    worst = std::max(worst, std::fabs(sp->rho - ref_pearson(counting_ranks(x),
                                                            counting_ranks(y))));
    const auto pe = pearson(x, y);
    worst = std::max(worst, std::fabs(*pe - ref_pearson(x, y)));
  }

  const std::vector<double> fx{1, 2, 3, 4, 5};
  const std::vector<double> fy{2, 1, 4, 3, 5};
  const auto frozen = spearman(fx, fy);
  const bool exact = frozen.has_value() && frozen->rho == 0.8;

  std::ostringstream msg;
  msg << "max |delta| vs reference " << worst
      << " (tolerance 1e-10); frozen case rho="
      << (frozen ? frozen->rho : -999.0) << (exact ? " (exact)" : " (NOT 0.8)");
  return {worst < 1e-10 && exact, msg.str()};
}

// ------------------------------------------------- criterion 6: KDE mass

Outcome criterion_kde_mass() {
  double worst_mass = 0.0, worst_enclosed = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(70'000 + trial);
    const std::size_t n = 100 + rng.below(900);
    std::vector<std::pair<double, double>> pts(n);
    const double cx = rng.uniform(-4, 4), cy = rng.uniform(-4, 4);
    const double sx = 0.3 + rng.uniform(), sy = 0.3 + rng.uniform();
    for (auto& p : pts) {
      // mixture of two lobes for irregular shapes
      const bool second = rng.bernoulli(0.35);
      p = {cx + (second ? 2.5 : 0.0) + sx * rng.normal(),
           cy + (second ? -1.5 : 0.0) + sy * rng.normal()};
    }
    const DensityField f = kde2d(pts, 128);
    worst_mass = std::max(worst_mass, std::fabs(f.mass - 1.0));
    const std::vector<double> level{0.05};
    const auto thresholds = iso_proportion_levels(f, level);
    double enclosed = 0.0;
    const double cell = f.cell_width() * f.cell_height();
    for (double v : f.grid)
      if (v >= thresholds[0]) enclosed += v * cell;
    worst_enclosed = std::max(worst_enclosed, std::fabs(enclosed - 0.95));
  }
  std::ostringstream msg;
  msg << "max |mass-1| " << worst_mass
      << " (tolerance 0.02); max |enclosed-0.95| at L=0.05 " << worst_enclosed
      << " (tolerance 0.02)";
  return {worst_mass <= 0.02 && worst_enclosed <= 0.02, msg.str()};
}

// ------------------------------------- benchmark shared by criteria 7 and 9

struct Benchmark {
  RunReport margin_arm;
  RunReport random_arm;
};

// Mirrors `floodal gen-data -c configs/benchmark_pool.json` (seed 11) and
// `... -c configs/benchmark_target.json` (seed 22): same seed derivation and
// knob-draw order as cmd_gen_data, so the CLI reproduces these corpora.
Corpus benchmark_corpus(const std::string& region, int count,
                        std::uint64_t seed) {
  Corpus corpus;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t tile_seed = derive_seed(seed, "gen-tile", 0, i);
    Rng knobs(derive_seed(tile_seed, "knobs"));
    SceneConfig sc;
    sc.size = 64;
    sc.spectral_separation = knobs.uniform(0.8, 4.0);
    sc.boundary_complexity = knobs.uniform(0.2, 0.9);
    sc.flood_fraction_target = knobs.uniform(0.05, 0.6);
    sc.noise_sigma = 0.06;
    char id[32];
    std::snprintf(id, sizeof(id), "%s/s%04d", region.c_str(), i);
    auto [tile, mask] = generate_synthetic_scene(sc, tile_seed, id, region);
    corpus.entries.push_back({std::move(tile), std::move(mask)});
  }
  corpus.sort_by_id();
  return corpus;
}

ExperimentConfig benchmark_config(AcquisitionKind kind) {
  ExperimentConfig cfg;
  cfg.acquisition = kind;
  cfg.n_initial = 30;
  cfg.k_per_iteration = 30;
  cfg.n_iterations = 4;
  cfg.n_runs = 5;
  cfg.mc_passes = 10;
  cfg.base_seed = 20240601;
  cfg.jobs = g_jobs;
  cfg.unet.in_channels = 3;
  cfg.unet.depth = 2;
  cfg.unet.base_channels = 8;
  cfg.unet.dropout_rate = 0.5;
  // Desk-scale schedule: the small net on synthetic tiles needs a hotter
  // learning rate than the full-scale default to converge in few epochs.
  cfg.train.max_epochs = 20;
  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 3e-3;
  cfg.train.weight_decay = 1e-2;
  cfg.train.early_stop_delta = 1e-3;
  cfg.train.early_stop_patience = 4;
  cfg.train.flip_augment = true;
  cfg.kmeans_components = 32;
  cfg.kmeans_max_iters = 100;
  return cfg;
}

const Benchmark& run_benchmark() {
  static Benchmark bench = [] {
    std::cerr << "  [benchmark] generating 200 pool + 60 target tiles...\n";
    const Corpus pool = benchmark_corpus("pool", 200, 11);
    const Corpus target = benchmark_corpus("target", 60, 22);
    auto progress = [](const std::string& msg) {
      std::cerr << "  [benchmark] " << msg << "\n";
    };
    Benchmark b;
    std::cerr << "  [benchmark] margin arm (5 runs)...\n";
    b.margin_arm = run_experiment(benchmark_config(AcquisitionKind::kMargin),
                                  pool, target, progress);
    std::cerr << "  [benchmark] random arm (5 runs)...\n";
    b.random_arm = run_experiment(benchmark_config(AcquisitionKind::kRandom),
                                  pool, target, progress);
    return b;
  }();
  return bench;
}

Outcome criterion_correlation_signs() {
  const Benchmark& bench = run_benchmark();
  int passing_runs = 0, total_runs = 0;
  std::ostringstream detail;
  for (const auto& run : bench.margin_arm.runs) {
    if (run.failed || run.records.size() < 2) continue;
    ++total_runs;
    const auto& rec = run.records[1];
    bool ok = true;
    for (const std::string fn : {"entropy", "margin"}) {
      const auto& c = rec.correlations.at(fn);
      if (!c.bpr.has_value() || !(c.bpr->rho > 0.0) || !(c.bpr->p_value < 0.05))
        ok = false;
      if (!c.mdf.has_value() || !(c.mdf->rho < 0.0) || !(c.mdf->p_value < 0.05))
        ok = false;
    }
    if (ok) ++passing_runs;
    const auto& m = rec.correlations.at("margin");
    detail << " run" << run.run_index << "(bpr "
           << (m.bpr ? m.bpr->rho : 0.0) << ", mdf "
           << (m.mdf ? m.mdf->rho : 0.0) << ")";
  }
  std::ostringstream msg;
  msg << passing_runs << "/" << total_runs
      << " runs with Spearman(BPR)>0 and Spearman(MDF)<0 at p<0.05 for "
         "entropy and margin at iteration 1;"
      << detail.str();
  return {total_runs >= 5 && passing_runs >= 4, msg.str()};
}

Outcome criterion_acquisition_ordering() {
  const Benchmark& bench = run_benchmark();
  std::vector<double> margin_final, random_final;
  for (const auto& run : bench.margin_arm.runs)
    if (!run.failed && !run.records.empty())
      margin_final.push_back(run.records.back().f1);
  for (const auto& run : bench.random_arm.runs)
    if (!run.failed && !run.records.empty())
      random_final.push_back(run.records.back().f1);
  if (margin_final.size() < 5 || random_final.size() < 5)
    return {false, "failed runs in the benchmark arms"};
  const double mf = std::accumulate(margin_final.begin(), margin_final.end(),
                                    0.0) / margin_final.size();
  const double rf = std::accumulate(random_final.begin(), random_final.end(),
                                    0.0) / random_final.size();

  auto mean_selected_bpr = [](const RunReport& report) {
    double sum = 0.0;
    long count = 0;
    for (const auto& run : report.runs) {
      if (run.failed || run.records.size() < 2) continue;
      for (const auto& ix : run.records[1].selected_indices) {
        sum += ix.bpr;
        ++count;
      }
    }
    return count > 0 ? sum / count : 0.0;
  };
  const double margin_bpr = mean_selected_bpr(bench.margin_arm);
  const double random_bpr = mean_selected_bpr(bench.random_arm);

  std::ostringstream msg;
  msg << "mean final F1 margin " << mf << " vs random " << rf
      << " (need margin >= random - 0.01); mean selected BPR at iteration 1: "
      << "margin " << margin_bpr << " vs random " << random_bpr
      << " (need margin > random)";
  return {mf >= rf - 0.01 && margin_bpr > random_bpr, msg.str()};
}

// --------------------------------------------- criterion 8: Table-5 signs

Outcome criterion_split_pearson_signs() {
  std::vector<double> fpr, bpr;
  for (int i = 0; i < 300; ++i) {
    SceneConfig sc;
    sc.size = 48;
    sc.boundary_complexity = 0.5;
    sc.flood_fraction_target = 0.02 + (0.9 - 0.02) * i / 299.0;
    sc.noise_sigma = 0.05;
    const auto [tile, mask] =
        generate_synthetic_scene(sc, derive_seed(33, "t5", i), "sweep", "s");
    const auto ix = compute_indices(tile, mask);
    fpr.push_back(ix.fpr);
    bpr.push_back(ix.bpr);
  }
  const double lo = *std::min_element(fpr.begin(), fpr.end());
  const double hi = *std::max_element(fpr.begin(), fpr.end());
  const SplitPearson sp = split_pearson(fpr, bpr, 0.5);
  std::ostringstream msg;
  msg << "FPR range [" << lo << ", " << hi << "]; r(FPR<0.5)="
      << (sp.below ? *sp.below : -999.0) << " (n=" << sp.n_below
      << "), r(FPR>=0.5)=" << (sp.at_or_above ? *sp.at_or_above : 999.0)
      << " (n=" << sp.n_at_or_above << ")";
  const bool pass = sp.below.has_value() && sp.at_or_above.has_value() &&
                    *sp.below > 0.0 && *sp.at_or_above < 0.0 && lo < 0.05 &&
                    hi > 0.7;
  return {pass, msg.str()};
}

// -------------------------------------------- criteria 10 and 11: the CLI

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " 2>>" +
                          (g_out / "cli_stderr.log").string();
  return std::system(cmd.c_str());
}

void write_smoke_configs(const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "gen.json");
    out << R"({
  "seed": 5,
  "tile_size": 32,
  "regions": [
    {"name": "pool", "count": 24,
     "spectral_separation": [1.0, 4.0],
     "boundary_complexity": [0.2, 0.8],
     "flood_fraction": [0.05, 0.8],
     "noise_sigma": 0.06},
    {"name": "target", "count": 8,
     "spectral_separation": [1.0, 4.0],
     "boundary_complexity": [0.2, 0.8],
     "flood_fraction": [0.1, 0.6],
     "noise_sigma": 0.06}
  ]
})";
  }
  {
    std::ofstream out(dir / "exp.json");
    out << R"({
  "acquisition": "margin",
  "n_initial": 6,
  "k_per_iteration": 4,
  "n_iterations": 2,
  "n_runs": 1,
  "mc_passes": 3,
  "base_seed": 99,
  "jobs": 2,
  "unet": {"in_channels": 3, "depth": 2, "base_channels": 4, "dropout_rate": 0.5},
  "train": {"max_epochs": 3, "batch_size": 4},
  "kmeans": {"n_components": 8, "max_iters": 50}
})";
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Minimal well-formedness scan: balanced tags, one root element.
bool xml_well_formed(const std::string& content) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  int roots = 0;
  while (i < content.size()) {
    if (content[i] != '<') {
      ++i;
      continue;
    }
    const std::size_t close = content.find('>', i);
    if (close == std::string::npos) return false;
    std::string tag = content.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    const bool closing = tag[0] == '/';
    const bool self_closing = tag.back() == '/';
    std::string name = tag.substr(closing ? 1 : 0);
    const std::size_t space = name.find_first_of(" \t\n/");
    if (space != std::string::npos) name = name.substr(0, space);
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      if (stack.empty()) ++roots;
    } else if (!self_closing) {
      stack.push_back(name);
    } else if (stack.empty()) {
      return false;  // self-closing root
    }
  }
  return stack.empty() && roots == 1;
}

Outcome criterion_determinism() {
  if (g_cli.empty()) return {false, "no --cli path given"};
  const fs::path dir = g_out / "determinism";
  fs::remove_all(dir);
  write_smoke_configs(dir);
  if (run_cli("gen-data -c " + (dir / "gen.json").string() + " -o " +
              (dir / "corpus").string()) != 0)
    return {false, "gen-data failed"};
  // rerunning gen-data overwrites with identical bytes
  if (run_cli("gen-data -c " + (dir / "gen.json").string() + " -o " +
              (dir / "corpus2").string()) != 0)
    return {false, "gen-data rerun failed"};
  for (const char* probe : {"manifest.json", "pool/s0003.ftl"})
    if (read_file(dir / "corpus" / probe) != read_file(dir / "corpus2" / probe))
      return {false, std::string("gen-data rerun differs: ") + probe};
  // split the corpus manifest into pool/target by region
  const Corpus all = load_corpus(dir / "corpus");
  Corpus pool, target;
  for (const auto& e : all.entries)
    (e.tile.region == "pool" ? pool : target).entries.push_back(e);
  save_corpus(pool, dir / "pool");
  save_corpus(target, dir / "target");

  const std::string run_args = "run -c " + (dir / "exp.json").string() +
                               " -p " + (dir / "pool").string() + " -t " +
                               (dir / "target").string();
  if (run_cli(run_args + " -o " + (dir / "out1").string()) != 0)
    return {false, "first cmd_run failed"};
  if (run_cli(run_args + " -o " + (dir / "out2").string()) != 0)
    return {false, "second cmd_run failed"};

  for (const char* name :
       {"report.json", "metrics.csv", "scores.csv", "indices.csv",
        "selections.csv", "correlations.csv", "history.csv"}) {
    const std::string a = read_file(dir / "out1" / name);
    const std::string b = read_file(dir / "out2" / name);
    if (a.empty() || a != b)
      return {false, std::string("byte mismatch or empty file: ") + name};
  }
  return {true, "two cmd_run executions produced byte-identical report JSON "
                "and CSVs"};
}

Outcome criterion_end_to_end() {
  if (g_cli.empty()) return {false, "no --cli path given"};
  const fs::path dir = g_out / "smoke";
  fs::remove_all(dir);
  write_smoke_configs(dir);
  if (run_cli("gen-data -c " + (dir / "gen.json").string() + " -o " +
              (dir / "corpus").string()) != 0)
    return {false, "gen-data exit code != 0"};
  const Corpus all = load_corpus(dir / "corpus");
  Corpus pool, target;
  for (const auto& e : all.entries)
    (e.tile.region == "pool" ? pool : target).entries.push_back(e);
  save_corpus(pool, dir / "pool");
  save_corpus(target, dir / "target");

  if (run_cli("run -c " + (dir / "exp.json").string() + " -p " +
              (dir / "pool").string() + " -t " + (dir / "target").string() +
              " -o " + (dir / "out").string()) != 0)
    return {false, "run exit code != 0"};
  if (run_cli("analyze -r " + (dir / "out" / "report.json").string() + " -o " +
              (dir / "analysis").string()) != 0)
    return {false, "analyze exit code != 0"};
  if (run_cli("plot -k mdf_bpr_density -i " +
              (dir / "out" / "report.json").string() + " -o " +
              (dir / "density.svg").string() + " --population pool") != 0)
    return {false, "plot (density) exit code != 0"};
  if (run_cli("plot -k f1_curve -i " +
              (dir / "out" / "report.json").string() + " -o " +
              (dir / "f1.svg").string()) != 0)
    return {false, "plot (f1_curve) exit code != 0"};

  // well-formedness of every emitted format
  try {
    const auto parsed =
        nlohmann::json::parse(read_file(dir / "out" / "report.json"));
    if (!parsed.contains("runs")) return {false, "report.json missing runs"};
  } catch (...) {
    return {false, "report.json does not parse"};
  }
  for (const char* name : {"metrics.csv", "scores.csv", "indices.csv",
                           "selections.csv", "correlations.csv",
                           "history.csv"}) {
    std::ifstream in(dir / "out" / name);
    std::string header;
    if (!std::getline(in, header) || header.empty())
      return {false, std::string("empty CSV: ") + name};
    const auto cols = std::count(header.begin(), header.end(), ',');
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::count(line.begin(), line.end(), ',') != cols)
        return {false, std::string("ragged CSV: ") + name};
    }
  }
  const std::string density = read_file(dir / "density.svg");
  if (!xml_well_formed(density)) return {false, "density.svg not well-formed"};
  std::size_t groups = 0, pos = 0;
  while ((pos = density.find("id=\"level-", pos)) != std::string::npos) {
    ++groups;
    pos += 10;
  }
  if (groups != 19)
    return {false, "density.svg has " + std::to_string(groups) +
                       " level groups, want 19"};
  if (!xml_well_formed(read_file(dir / "f1.svg")))
    return {false, "f1.svg not well-formed"};
  if (read_file(dir / "analysis" / "analysis.txt").empty())
    return {false, "analysis.txt empty"};
  return {true, "gen-data -> run -> analyze -> plot all exited 0 with "
                "well-formed JSON/CSV/SVG (19 contour level groups)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  g_out = fs::temp_directory_path() / "floodal_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      return i + 1 < argc ? argv[++i] : std::string{};
    };
    if (arg == "--criteria") {
      const std::string list = next();
      if (list == "all") {
        for (int c = 1; c <= 11; ++c) wanted.push_back(c);
      } else {
        std::istringstream ss(list);
        std::string tok;
        while (std::getline(ss, tok, ',')) wanted.push_back(std::stoi(tok));
      }
    } else if (arg == "--cli") {
      g_cli = next();
    } else if (arg == "--jobs") {
      g_jobs = std::stoi(next());
    } else if (arg == "--out") {
      g_out = next();
    } else {
      std::cerr << "unknown argument: " << arg << "\n";
      return 2;
    }
  }
  if (wanted.empty())
    for (int c = 1; c <= 11; ++c) wanted.push_back(c);
  fs::create_directories(g_out);

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> table{
      {1, {"gradient integrity", criterion_gradients}},
      {2, {"analytic score values", criterion_analytic_scores}},
      {3, {"entropy/margin rank reversal", criterion_rank_reversal}},
      {4, {"index oracles", criterion_index_oracles}},
      {5, {"statistics oracles", criterion_stats_oracles}},
      {6, {"KDE mass and iso-proportion enclosure", criterion_kde_mass}},
      {7, {"correlation-sign reproduction", criterion_correlation_signs}},
      {8, {"FPR-BPR split-correlation signs", criterion_split_pearson_signs}},
      {9, {"acquisition ordering", criterion_acquisition_ordering}},
      {10, {"determinism of cmd_run", criterion_determinism}},
      {11, {"end-to-end smoke", criterion_end_to_end}},
  };

  bool all_pass = true;
  for (int c : wanted) {
    const auto it = table.find(c);
    if (it == table.end()) {
      std::cerr << "unknown criterion " << c << "\n";
      return 2;
    }
    Outcome outcome;
    try {
      outcome = it->second.second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << c << " (" << it->second.first << "): "
              << (outcome.pass ? "PASS" : "FAIL") << " - " << outcome.detail
              << std::endl;
    if (!outcome.pass) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
