#include "floodal/indices.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "floodal/errors.hpp"

namespace floodal {

BprResult compute_bpr(const LabelMask& mask) {
  const int h = mask.height, w = mask.width;
  long bps = 0, tps = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::uint8_t c = mask.at(y, x);
      if (c == kNoData) continue;
      ++tps;
      bool boundary = false;
      for (int dy = -1; dy <= 1 && !boundary; ++dy)
        for (int dx = -1; dx <= 1 && !boundary; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const std::uint8_t nc = mask.at(ny, nx);
          if (nc != kNoData && nc != c) boundary = true;
        }
      if (boundary) ++bps;
    }
  if (tps == 0) throw DataError("compute_bpr: mask has no valid pixels");
  return {static_cast<double>(bps) / static_cast<double>(tps), bps, tps};
}

std::optional<double> compute_mdf(const Tile& tile, const LabelMask& mask) {
  if (mask.height != tile.height || mask.width != tile.width)
    throw DataError("compute_mdf: mask dimensions differ from tile");
  const int c = tile.channels;
  const std::size_t n = tile.pixel_count();

  Eigen::VectorXd mean_flood = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd mean_dry = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd mean_all = Eigen::VectorXd::Zero(c);
  long n_flood = 0, n_dry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t code = mask.classes[i];
    if (code == kNoData) continue;
    Eigen::VectorXd px(c);
    for (int ch = 0; ch < c; ++ch) px[ch] = tile.pixels[ch * n + i];
    mean_all += px;
    if (code == kFlood) {
      mean_flood += px;
      ++n_flood;
    } else {
      mean_dry += px;
      ++n_dry;
    }
  }
  if (n_flood == 0 || n_dry == 0) return std::nullopt;
  const long n_valid = n_flood + n_dry;
  mean_flood /= static_cast<double>(n_flood);
  mean_dry /= static_cast<double>(n_dry);
  mean_all /= static_cast<double>(n_valid);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.classes[i] == kNoData) continue;
    Eigen::VectorXd px(c);
    for (int ch = 0; ch < c; ++ch) px[ch] = tile.pixels[ch * n + i];
    px -= mean_all;
    cov.noalias() += px * px.transpose();
  }
  cov /= static_cast<double>(n_valid);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov += 1e-6 * Eigen::MatrixXd::Identity(c, c);
    llt.compute(cov);
    if (llt.info() != Eigen::Success) return std::nullopt;
  }
  const Eigen::VectorXd diff = mean_flood - mean_dry;
  const double d2 = diff.dot(llt.solve(diff));
  return std::sqrt(std::max(0.0, d2));
}

FprResult compute_fpr(const LabelMask& mask) {
  long fps = 0, tps = 0;
  for (std::uint8_t c : mask.classes) {
    if (c == kNoData) continue;
    ++tps;
    if (c == kFlood) ++fps;
  }
  if (tps == 0) throw DataError("compute_fpr: mask has no valid pixels");
  return {static_cast<double>(fps) / static_cast<double>(tps), fps, tps};
}

AmbiguityIndices compute_indices(const Tile& tile, const LabelMask& mask) {
  AmbiguityIndices out;
  out.tile_id = tile.id;
  const BprResult b = compute_bpr(mask);
  const FprResult f = compute_fpr(mask);
  out.bpr = b.bpr;
  out.bps = b.bps;
  out.fpr = f.fpr;
  out.fps = f.fps;
  out.tps = b.tps;
  out.mdf = compute_mdf(tile, mask);
  return out;
}

}  // namespace floodal
