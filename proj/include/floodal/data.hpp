#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floodal/tensor.hpp"

namespace floodal {

inline constexpr std::uint8_t kNonFlood = 0;
inline constexpr std::uint8_t kFlood = 1;
inline constexpr std::uint8_t kNoData = 255;

/// One multi-channel image tile; pixel values live in [0,1], channel-major.
struct Tile {
  std::string id;
  std::string region;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // channels*height*width

  float at(int c, int h, int w) const {
    return pixels[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  float& at(int c, int h, int w) {
    return pixels[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  void validate() const;  // finite, in [0,1], sizes consistent
};

/// Per-pixel class map: 0 non-flood, 1 flood, 255 no-data.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> classes;

  std::uint8_t at(int h, int w) const {
    return classes[static_cast<std::size_t>(h) * width + w];
  }
  std::uint8_t& at(int h, int w) {
    return classes[static_cast<std::size_t>(h) * width + w];
  }
  void validate() const;  // size and code check
};

/// Knobs for the synthetic flood-scene generator.
struct SceneConfig {
  int size = 64;
  double spectral_separation = 2.0;   // class-mean distance in noise-sd units
  double boundary_complexity = 0.5;   // in [0,1]; scales fractal octave count
  double flood_fraction_target = 0.3;
  double noise_sigma = 0.05;
  double nodata_fraction = 0.0;

  void validate() const;
};

/// Treats (red, NIR, SWIR2) reflectances as RGB and converts to HSV channels.
/// Negative inputs are clipped to 0, each channel is min-max scaled to [0,1]
/// over the tile, and hue is normalized to [0,1] (degrees / 360).
Tile hsv_preprocess(const Tile& raw);

/// Splits an even-sized tile into four quadrants in row-major order
/// (NW, NE, SW, SE); quadrant ids get a "#<q>" suffix.
std::array<std::pair<Tile, LabelMask>, 4> quarter_tile(const Tile& tile,
                                                       const LabelMask& mask);

/// Deterministic synthetic scene: fractal elevation thresholded at the
/// flood-fraction quantile, per-class spectral means, Gaussian pixel noise,
/// optional no-data blob, then hsv_preprocess.
std::pair<Tile, LabelMask> generate_synthetic_scene(const SceneConfig& config,
                                                    std::uint64_t seed,
                                                    const std::string& id,
                                                    const std::string& region);

// Tile container: magic "FTL1" | u32 C | u32 H | u32 W |
// C*H*W float32 pixels (channel-major) | H*W uint8 mask codes. Little-endian,
// one tile per file.
void save_tile(const Tile& tile, const LabelMask& mask,
               const std::filesystem::path& path);
std::pair<Tile, LabelMask> load_tile(const std::filesystem::path& path);

struct CorpusEntry {
  Tile tile;
  LabelMask mask;
};

/// A set of labeled tiles, kept sorted by tile id.
struct Corpus {
  std::vector<CorpusEntry> entries;

  const CorpusEntry& by_id(const std::string& id) const;
  std::vector<std::string> ids() const;
  void sort_by_id();
};

/// Writes tiles plus manifest.json (id, path, region, fpr) under dir.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Loads a corpus from a manifest.json produced by save_corpus.
Corpus load_corpus(const std::filesystem::path& manifest_or_dir);

/// Labeled / unlabeled / validation / test membership. The four id lists are
/// pairwise disjoint and each is kept in lexicographic order.
struct PoolState {
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;

  /// Moves ids from unlabeled to labeled; throws if an id is not unlabeled.
  void acquire(std::span<const std::string> ids);
  void check_invariants() const;
};

/// Seeded split: target corpus 50/50 into validation/test, n_initial pool
/// tiles drawn uniformly without replacement into the labeled set.
PoolState build_pool(const Corpus& pool_corpus, const Corpus& target_corpus,
                     int n_initial, std::uint64_t seed);

}  // namespace floodal
