#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ddcm {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

struct PaletteEntry {
  int index = 0;
  Rgb color;
  std::string name;
};

/// Class index <-> color table. Indices are dense 0..size()-1.
class Palette {
 public:
  Palette() = default;
  /// Entries may come in any order; indices must cover 0..n-1 exactly once.
  explicit Palette(std::vector<PaletteEntry> entries);

  /// ISPRS 2D labeling colors, first `classes` of: impervious_surfaces, building,
  /// low_vegetation, tree, car, clutter.
  static Palette isprs(int classes = 6);

  /// Text format: one "index R G B name" line per class; '#' starts a comment.
  static Palette load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const noexcept { return static_cast<int>(entries_.size()); }
  const std::vector<PaletteEntry>& entries() const noexcept { return entries_; }
  const PaletteEntry& operator[](int index) const { return entries_.at(static_cast<std::size_t>(index)); }

  std::optional<int> find(Rgb color) const;
  std::optional<int> find(const std::string& name) const;

 private:
  std::vector<PaletteEntry> entries_;
};

/// 8-bit image, rows top to bottom, channels interleaved.
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::int64_t h, std::int64_t w, std::int64_t c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h * w * c), fill) {}

  std::uint8_t& at(std::int64_t y, std::int64_t x, std::int64_t c = 0) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t c = 0) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  bool operator==(const Image&) const = default;
};

/// Reads any 8-bit PNG as RGB (gray is replicated, palettes are expanded, alpha dropped).
Image read_rgb_png(const std::filesystem::path& path);

/// Reads a label PNG as a single-channel index map. Palette PNGs yield their raw
/// indices and grayscale PNGs their values. RGB PNGs are mapped through `palette`;
/// colors it does not list are a DataError.
Image read_label_png(const std::filesystem::path& path, const Palette* palette = nullptr);

/// Writes a 1-channel image as grayscale or a 3-channel image as RGB.
void write_png(const std::filesystem::path& path, const Image& image);

/// Writes a 1-channel index map as a palette PNG using the palette colors.
/// Indices outside the palette are a DataError.
void write_label_png(const std::filesystem::path& path, const Image& labels, const Palette& palette);

}  // namespace ddcm
