#include "floodal/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "floodal/errors.hpp"
#include "floodal/rng.hpp"

namespace floodal {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void Tile::validate() const {
  if (channels < 1 || height < 1 || width < 1)
    throw DataError("tile " + id + ": non-positive dimensions");
  if (pixels.size() != static_cast<std::size_t>(channels) * height * width)
    throw DataError("tile " + id + ": pixel count does not match header");
  for (float v : pixels) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw DataError("tile " + id + ": pixel outside [0,1]");
  }
}

void LabelMask::validate() const {
  if (classes.size() != static_cast<std::size_t>(height) * width)
    throw DataError("mask: class count does not match header");
  for (std::uint8_t c : classes) {
    if (c != kNonFlood && c != kFlood && c != kNoData)
      throw DataError("mask: unknown class code " + std::to_string(c));
  }
}

void SceneConfig::validate() const {
  if (size < 2) throw ConfigError("scene size must be >= 2");
  if (!(spectral_separation > 0.0))
    throw ConfigError("spectral_separation must be > 0");
  if (boundary_complexity < 0.0 || boundary_complexity > 1.0)
    throw ConfigError("boundary_complexity must be in [0,1]");
  if (flood_fraction_target < 0.0 || flood_fraction_target > 1.0)
    throw ConfigError("flood_fraction_target must be in [0,1]");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (nodata_fraction < 0.0 || nodata_fraction > 1.0)
    throw ConfigError("nodata_fraction must be in [0,1]");
}

Tile hsv_preprocess(const Tile& raw) {
  if (raw.channels != 3)
    throw DataError("hsv_preprocess expects 3 channels (red, NIR, SWIR2), got " +
                    std::to_string(raw.channels));
  const std::size_t n = raw.pixel_count();
  if (raw.pixels.size() != 3 * n)
    throw DataError("hsv_preprocess: pixel buffer does not match dimensions");
  for (float v : raw.pixels)
    if (!std::isfinite(v)) throw DataError("hsv_preprocess: non-finite input");

  // Clip negatives, then min-max scale each channel over the tile.
  std::vector<float> scaled(3 * n);
  for (int c = 0; c < 3; ++c) {
    const float* src = raw.pixels.data() + c * n;
    float* dst = scaled.data() + c * n;
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (std::size_t i = 0; i < n; ++i) {
      const float v = src[i] < 0.0f ? 0.0f : src[i];
      dst[i] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const float range = hi - lo;
    for (std::size_t i = 0; i < n; ++i)
      dst[i] = range > 0.0f ? (dst[i] - lo) / range : 0.0f;
  }

  Tile out;
  out.id = raw.id;
  out.region = raw.region;
  out.channels = 3;
  out.height = raw.height;
  out.width = raw.width;
  out.pixels.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const float r = scaled[i];
    const float g = scaled[n + i];
    const float b = scaled[2 * n + i];
    const float v = std::max({r, g, b});
    const float m = std::min({r, g, b});
    const float c = v - m;
    float h = 0.0f;
    if (c > 0.0f) {
      if (v == r)
        h = (g - b) / c;
      else if (v == g)
        h = (b - r) / c + 2.0f;
      else
        h = (r - g) / c + 4.0f;
      h /= 6.0f;
      if (h < 0.0f) h += 1.0f;
    }
    const float s = v > 0.0f ? c / v : 0.0f;
    out.pixels[i] = std::clamp(h, 0.0f, 1.0f);
    out.pixels[n + i] = std::clamp(s, 0.0f, 1.0f);
    out.pixels[2 * n + i] = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

std::array<std::pair<Tile, LabelMask>, 4> quarter_tile(const Tile& tile,
                                                       const LabelMask& mask) {
  if (tile.height % 2 != 0 || tile.width % 2 != 0)
    throw DataError("quarter_tile: dimensions must be even");
  if (mask.height != tile.height || mask.width != tile.width)
    throw DataError("quarter_tile: mask dimensions differ from tile");
  const int hh = tile.height / 2;
  const int hw = tile.width / 2;
  std::array<std::pair<Tile, LabelMask>, 4> out;
  for (int q = 0; q < 4; ++q) {
    const int row0 = (q / 2) * hh;
    const int col0 = (q % 2) * hw;
    Tile t;
    t.id = tile.id + "#" + std::to_string(q);
    t.region = tile.region;
    t.channels = tile.channels;
    t.height = hh;
    t.width = hw;
    t.pixels.resize(static_cast<std::size_t>(tile.channels) * hh * hw);
    LabelMask m;
    m.height = hh;
    m.width = hw;
    m.classes.resize(static_cast<std::size_t>(hh) * hw);
    for (int c = 0; c < tile.channels; ++c)
      for (int h = 0; h < hh; ++h)
        for (int w = 0; w < hw; ++w)
          t.at(c, h, w) = tile.at(c, row0 + h, col0 + w);
    for (int h = 0; h < hh; ++h)
      for (int w = 0; w < hw; ++w) m.at(h, w) = mask.at(row0 + h, col0 + w);
    out[q] = {std::move(t), std::move(m)};
  }
  return out;
}

namespace {

// Seeded value-noise octave: bilinear interpolation over a random lattice.
void add_noise_octave(std::vector<double>& field, int size, int lattice,
                      double amplitude, Rng& rng) {
  const int cells = std::max(1, lattice);
  std::vector<double> grid((cells + 1) * (cells + 1));
  for (auto& g : grid) g = rng.uniform(-1.0, 1.0);
  const double scale = static_cast<double>(cells) / size;
  for (int h = 0; h < size; ++h) {
    const double y = h * scale;
    const int y0 = std::min(static_cast<int>(y), cells - 1);
    const double fy = y - y0;
    for (int w = 0; w < size; ++w) {
      const double x = w * scale;
      const int x0 = std::min(static_cast<int>(x), cells - 1);
      const double fx = x - x0;
      const double g00 = grid[y0 * (cells + 1) + x0];
      const double g01 = grid[y0 * (cells + 1) + x0 + 1];
      const double g10 = grid[(y0 + 1) * (cells + 1) + x0];
      const double g11 = grid[(y0 + 1) * (cells + 1) + x0 + 1];
      const double top = g00 + (g01 - g00) * fx;
      const double bot = g10 + (g11 - g10) * fx;
      field[static_cast<std::size_t>(h) * size + w] +=
          amplitude * (top + (bot - top) * fy);
    }
  }
}

}  // namespace

std::pair<Tile, LabelMask> generate_synthetic_scene(const SceneConfig& config,
                                                    std::uint64_t seed,
                                                    const std::string& id,
                                                    const std::string& region) {
  config.validate();
  const int size = config.size;
  const std::size_t n = static_cast<std::size_t>(size) * size;
  Rng rng(derive_seed(seed, "scene"));

  // Fractal elevation; more octaves -> rougher flood boundary.
  const int octaves =
      1 + static_cast<int>(std::lround(config.boundary_complexity * 5.0));
  std::vector<double> elevation(n, 0.0);
  double amplitude = 1.0;
  for (int o = 0; o < octaves; ++o) {
    const int lattice = std::min(4 << o, size);
    add_noise_octave(elevation, size, lattice, amplitude, rng);
    amplitude *= 0.55;
  }

  // Flood everything below the elevation quantile at the target fraction.
  LabelMask mask;
  mask.height = size;
  mask.width = size;
  mask.classes.assign(n, kNonFlood);
  const long k = std::lround(config.flood_fraction_target * static_cast<double>(n));
  if (k > 0) {
    std::vector<double> sorted(elevation);
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double level = sorted[k - 1];
    for (std::size_t i = 0; i < n; ++i)
      if (elevation[i] <= level) mask.classes[i] = kFlood;
  }

  // Class means separated by spectral_separation in units of the noise sd
  // (floored so a zero-noise config still separates the classes).
  const double sigma = config.noise_sigma;
  const double unit = std::max(sigma, 0.01);
  double dir[3] = {-0.25 + 0.05 * rng.normal(), -0.75 + 0.05 * rng.normal(),
                   -0.60 + 0.05 * rng.normal()};
  const double norm =
      std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  double mean_dry[3];
  double mean_wet[3];
  for (int c = 0; c < 3; ++c) {
    dir[c] /= norm;
    const double base = (c == 0 ? 0.45 : c == 1 ? 0.62 : 0.55) +
                        0.03 * rng.normal();
    mean_dry[c] = base;
    mean_wet[c] = base + config.spectral_separation * unit * dir[c];
  }

  Tile raw;
  raw.id = id;
  raw.region = region;
  raw.channels = 3;
  raw.height = size;
  raw.width = size;
  raw.pixels.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool wet = mask.classes[i] == kFlood;
    for (int c = 0; c < 3; ++c) {
      const double v = (wet ? mean_wet[c] : mean_dry[c]) + sigma * rng.normal();
      raw.pixels[c * n + i] = static_cast<float>(v);
    }
  }

  // No-data disk; underlying pixel values stay valid so convolutions see
  // finite inputs everywhere.
  if (config.nodata_fraction > 0.0) {
    const double r = std::sqrt(config.nodata_fraction * n / 3.14159265358979);
    const double margin = std::min(r, size / 2.0);
    const double cy = rng.uniform(margin, size - margin);
    const double cx = rng.uniform(margin, size - margin);
    for (int h = 0; h < size; ++h)
      for (int w = 0; w < size; ++w) {
        const double dy = h - cy;
        const double dx = w - cx;
        if (dy * dy + dx * dx <= r * r)
          mask.at(h, w) = kNoData;
      }
  }

  Tile tile = hsv_preprocess(raw);
  return {std::move(tile), std::move(mask)};
}

namespace {

constexpr char kTileMagic[4] = {'F', 'T', 'L', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError("truncated payload: " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tile(const Tile& tile, const LabelMask& mask,
               const std::filesystem::path& path) {
  if (mask.height != tile.height || mask.width != tile.width)
    throw DataError("save_tile: mask dimensions differ from tile");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(kTileMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(tile.channels));
  write_u32(out, static_cast<std::uint32_t>(tile.height));
  write_u32(out, static_cast<std::uint32_t>(tile.width));
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(tile.pixels.data()),
            static_cast<std::streamsize>(tile.pixels.size() * 4));
  out.write(reinterpret_cast<const char*>(mask.classes.data()),
            static_cast<std::streamsize>(mask.classes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::pair<Tile, LabelMask> load_tile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTileMagic, 4) != 0)
    throw DataError("bad magic: " + path.string());
  Tile tile;
  tile.channels = static_cast<int>(read_u32(in, path.string()));
  tile.height = static_cast<int>(read_u32(in, path.string()));
  tile.width = static_cast<int>(read_u32(in, path.string()));
  if (tile.channels < 1 || tile.channels > 1024 || tile.height < 1 ||
      tile.width < 1 || tile.height > 65536 || tile.width > 65536)
    throw DataError("implausible dimensions: " + path.string());
  const std::size_t n =
      static_cast<std::size_t>(tile.height) * tile.width;
  tile.pixels.resize(static_cast<std::size_t>(tile.channels) * n);
  if (!in.read(reinterpret_cast<char*>(tile.pixels.data()),
               static_cast<std::streamsize>(tile.pixels.size() * 4)))
    throw DataError("truncated payload: " + path.string());
  LabelMask mask;
  mask.height = tile.height;
  mask.width = tile.width;
  mask.classes.resize(n);
  if (!in.read(reinterpret_cast<char*>(mask.classes.data()),
               static_cast<std::streamsize>(n)))
    throw DataError("truncated payload: " + path.string());
  mask.validate();
  return {std::move(tile), std::move(mask)};
}

const CorpusEntry& Corpus::by_id(const std::string& id) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), id,
      [](const CorpusEntry& e, const std::string& key) { return e.tile.id < key; });
  if (it == entries.end() || it->tile.id != id)
    throw DataError("unknown tile id: " + id);
  return *it;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.tile.id);
  return out;
}

void Corpus::sort_by_id() {
  std::sort(entries.begin(), entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) {
              return a.tile.id < b.tile.id;
            });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].tile.id == entries[i - 1].tile.id)
      throw DataError("duplicate tile id: " + entries[i].tile.id);
}

namespace {

std::string sanitize_for_path(const std::string& id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' ||
                    c == '.' || c == '/';
    out.push_back(ok ? c : '_');
  }
  return out;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  fs::create_directories(dir);
  json manifest = json::array();
  for (const auto& entry : corpus.entries) {
    const std::string rel = sanitize_for_path(entry.tile.id) + ".ftl";
    const fs::path full = dir / rel;
    fs::create_directories(full.parent_path());
    save_tile(entry.tile, entry.mask, full);
    long flood = 0;
    long valid = 0;
    for (std::uint8_t c : entry.mask.classes) {
      if (c == kNoData) continue;
      ++valid;
      if (c == kFlood) ++flood;
    }
    manifest.push_back({{"id", entry.tile.id},
                        {"path", rel},
                        {"region", entry.tile.region},
                        {"fpr", valid > 0 ? static_cast<double>(flood) / valid
                                          : 0.0}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const std::filesystem::path& manifest_or_dir) {
  fs::path manifest = manifest_or_dir;
  if (fs::is_directory(manifest)) manifest /= "manifest.json";
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + manifest.string());
  json parsed;
  try {
    in >> parsed;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  if (!parsed.is_array()) throw DataError("manifest must be a JSON array");
  Corpus corpus;
  const fs::path base = manifest.parent_path();
  for (const auto& item : parsed) {
    if (!item.contains("id") || !item.contains("path"))
      throw DataError("manifest entry missing id or path");
    auto [tile, mask] = load_tile(base / item["path"].get<std::string>());
    tile.id = item["id"].get<std::string>();
    tile.region = item.value("region", std::string{});
    corpus.entries.push_back({std::move(tile), std::move(mask)});
  }
  if (corpus.entries.empty())
    throw DataError("empty corpus: " + manifest.string());
  corpus.sort_by_id();
  return corpus;
}

void PoolState::acquire(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    auto it = std::lower_bound(unlabeled_ids.begin(), unlabeled_ids.end(), id);
    if (it == unlabeled_ids.end() || *it != id)
      throw RuntimeFailure("acquire: tile not in unlabeled pool: " + id);
    unlabeled_ids.erase(it);
    auto pos = std::lower_bound(labeled_ids.begin(), labeled_ids.end(), id);
    labeled_ids.insert(pos, id);
  }
}

void PoolState::check_invariants() const {
  auto sorted_unique = [](const std::vector<std::string>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i - 1] < v[i])) return false;
    return true;
  };
  if (!sorted_unique(labeled_ids) || !sorted_unique(unlabeled_ids) ||
      !sorted_unique(validation_ids) || !sorted_unique(test_ids))
    throw RuntimeFailure("pool state: id lists must be sorted and unique");
  std::vector<std::string> all;
  all.reserve(labeled_ids.size() + unlabeled_ids.size() +
              validation_ids.size() + test_ids.size());
  for (const auto* v : {&labeled_ids, &unlabeled_ids, &validation_ids, &test_ids})
    all.insert(all.end(), v->begin(), v->end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw RuntimeFailure("pool state: id sets overlap");
}

PoolState build_pool(const Corpus& pool_corpus, const Corpus& target_corpus,
                     int n_initial, std::uint64_t seed) {
  if (pool_corpus.entries.empty() || target_corpus.entries.empty())
    throw DataError("build_pool: empty corpus");
  if (n_initial < 0 ||
      static_cast<std::size_t>(n_initial) > pool_corpus.entries.size())
    throw ConfigError("build_pool: n_initial exceeds pool size");

  PoolState state;

  // Seeded shuffle of the target, first half validation, rest test.
  std::vector<std::string> target_ids = target_corpus.ids();
  Rng split_rng(derive_seed(seed, "target-split"));
  for (std::size_t i = target_ids.size(); i > 1; --i)
    std::swap(target_ids[i - 1], target_ids[split_rng.below(i)]);
  const std::size_t n_val = target_ids.size() / 2;
  state.validation_ids.assign(target_ids.begin(), target_ids.begin() + n_val);
  state.test_ids.assign(target_ids.begin() + n_val, target_ids.end());
  std::sort(state.validation_ids.begin(), state.validation_ids.end());
  std::sort(state.test_ids.begin(), state.test_ids.end());

  // Seeded draw without replacement for the initial labeled set.
  std::vector<std::string> pool_ids = pool_corpus.ids();
  Rng init_rng(derive_seed(seed, "initial-labels"));
  for (std::size_t i = pool_ids.size(); i > 1; --i)
    std::swap(pool_ids[i - 1], pool_ids[init_rng.below(i)]);
  state.labeled_ids.assign(pool_ids.begin(), pool_ids.begin() + n_initial);
  state.unlabeled_ids.assign(pool_ids.begin() + n_initial, pool_ids.end());
  std::sort(state.labeled_ids.begin(), state.labeled_ids.end());
  std::sort(state.unlabeled_ids.begin(), state.unlabeled_ids.end());

  state.check_invariants();
  return state;
}

}  // namespace floodal
