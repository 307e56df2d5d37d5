#pragma once

#include <optional>
#include <string>

#include "floodal/data.hpp"

namespace floodal {

/// Per-tile class-ambiguity indices (BPR, MDF) and class-imbalance index
/// (FPR). MDF is absent when a class has no valid pixels or the covariance
/// cannot be made positive definite. No-data pixels are excluded throughout;
/// tps counts valid pixels.
struct AmbiguityIndices {
  std::string tile_id;
  double bpr = 0.0;
  std::optional<double> mdf;
  double fpr = 0.0;
  long bps = 0;
  long fps = 0;
  long tps = 0;
};

struct BprResult {
  double bpr = 0.0;
  long bps = 0;
  long tps = 0;
};

/// Boundary pixel ratio: the fraction of valid pixels whose 8-neighborhood
/// contains a valid pixel of the opposite class. Throws on all-no-data masks.
BprResult compute_bpr(const LabelMask& mask);

/// Mahalanobis distance between the per-class mean pixel vectors under the
/// covariance of all valid pixels (classes pooled together, divide-by-N).
/// A ridge of 1e-6*I is added when the covariance is not positive definite.
std::optional<double> compute_mdf(const Tile& tile, const LabelMask& mask);

struct FprResult {
  double fpr = 0.0;
  long fps = 0;
  long tps = 0;
};

/// Flood pixel ratio over valid pixels. Throws on all-no-data masks.
FprResult compute_fpr(const LabelMask& mask);

AmbiguityIndices compute_indices(const Tile& tile, const LabelMask& mask);

}  // namespace floodal
