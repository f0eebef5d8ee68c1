#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ddcm/image_io.hpp"
#include "ddcm/tensor.hpp"

namespace ddcm {

/// Per-pixel class indices for a batch, (n, h, w) row-major.
struct LabelMap {
  std::int64_t n = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> values;

  LabelMap() = default;
  LabelMap(std::int64_t n_, std::int64_t h_, std::int64_t w_, std::uint8_t fill = 0)
      : n(n_), h(h_), w(w_), values(static_cast<std::size_t>(n_ * h_ * w_), fill) {}

  std::uint8_t at(std::int64_t b, std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>((b * h + y) * w + x)];
  }
};

struct Tile {
  std::string name;
  Image image;   // 3 channels
  Image labels;  // 1 channel, values in [0, class_count)
};

/// Image tiles with same-size label maps.
///
/// On disk: root/images/NAME.png (RGB), root/labels/NAME.png (palette or
/// grayscale indices, or RGB colors listed in the palette) and root/palette.txt.
/// Tiles are held in memory in name order.
class TileDataset {
 public:
  TileDataset(std::vector<Tile> tiles, Palette palette);

  static TileDataset open(const std::filesystem::path& root);
  void save(const std::filesystem::path& root) const;

  std::size_t size() const noexcept { return tiles_.size(); }
  const Tile& tile(std::size_t i) const { return tiles_.at(i); }
  const std::vector<Tile>& tiles() const noexcept { return tiles_; }
  const Palette& palette() const noexcept { return palette_; }
  int class_count() const noexcept { return palette_.size(); }

 private:
  std::vector<Tile> tiles_;
  Palette palette_;
};

/// Image bytes scaled into [0, 1] as a (1, 3, h, w) tensor.
Tensor image_to_tensor(const Image& image);

// Class statistics

struct ClassStats {
  std::vector<std::uint64_t> pixels;           // pixels of class c over the dataset
  std::vector<std::uint64_t> present_pixels;   // total pixels of tiles that contain class c
  std::vector<double> freq;                    // pixels / present_pixels, 0 if absent
  double median_freq = 0.0;
  std::vector<double> weights;                 // median_freq / freq, 0 if absent
  std::vector<int> absent;                     // classes never seen
};

/// Median frequency balancing weights. Classes with freq 0 are absent and get
/// weight 0; the median is taken over present classes (mean of the two middle
/// values for an even count).
std::vector<double> median_frequency_weights(const std::vector<double>& freq, double* median = nullptr);

ClassStats compute_class_stats(const TileDataset& dataset);

// Patch sampling

struct SamplerOptions {
  std::int64_t patch_size = 256;
  std::int64_t patches_per_epoch = 5000;
  std::uint64_t seed = 0;
  bool hflip = true;
  bool vflip = true;
  /// Top-left corners are drawn from multiples of this (1 = any pixel).
  std::int64_t align = 1;
};

struct PatchOrigin {
  std::size_t tile = 0;
  std::int64_t y = 0;
  std::int64_t x = 0;
  bool hflip = false;
  bool vflip = false;
};

struct Batch {
  Tensor images;  // (n, 3, p, p) in [0, 1]
  LabelMap labels;
  std::vector<PatchOrigin> origins;
};

/// Draws patches_per_epoch patches per epoch, with replacement: a uniform tile,
/// a uniform top-left corner and independent horizontal / vertical flips with
/// probability 0.5 each. The sequence depends only on (seed, epoch).
class PatchSampler {
 public:
  PatchSampler(const TileDataset& dataset, SamplerOptions options);

  void start_epoch(std::uint64_t epoch);
  std::int64_t remaining() const noexcept { return remaining_; }

  PatchOrigin next_origin();
  /// Up to `n` patches; fewer at the end of the epoch, none once it is exhausted.
  Batch next_batch(std::int64_t n);

  const SamplerOptions& options() const noexcept { return options_; }

 private:
  const TileDataset& dataset_;
  SamplerOptions options_;
  std::mt19937_64 rng_;
  std::int64_t remaining_ = 0;
};

/// Cuts, flips and normalizes one patch into slot `b` of a batch.
void extract_patch(const Tile& tile, const PatchOrigin& origin, std::int64_t size, Tensor& images,
                   LabelMap& labels, std::int64_t b);

// Synthetic data

struct SynthOptions {
  int tiles = 8;
  std::int64_t size = 256;
  int classes = 6;
  std::uint64_t seed = 7;
  /// Object outlines snap to this pixel lattice.
  std::int64_t lattice = 8;
};

/// Tiles of colored primitives on an impervious background: road ribbons,
/// rectangular buildings, low-vegetation and tree blobs, small car boxes and
/// clutter patches, with exact label maps and ISPRS class colors.
TileDataset make_synthetic(const SynthOptions& options);

/// make_synthetic followed by TileDataset::save into `out_dir`.
TileDataset generate_synthetic(const std::filesystem::path& out_dir, const SynthOptions& options);

}  // namespace ddcm
