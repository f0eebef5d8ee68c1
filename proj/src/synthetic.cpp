#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ddcm/dataset.hpp"
#include "ddcm/error.hpp"

namespace ddcm {
namespace {

enum Class : std::uint8_t { kSurface = 0, kBuilding, kLowVeg, kTree, kCar, kClutter };

// Labels live on a coarse grid of lattice cells; pixels inherit their cell's class.
struct CellMap {
  std::int64_t size = 0;
  std::vector<std::uint8_t> cls;
  std::vector<std::uint8_t> road;

  explicit CellMap(std::int64_t n) : size(n), cls(static_cast<std::size_t>(n * n), kSurface), road(cls.size(), 0) {}

  void set(std::int64_t y, std::int64_t x, std::uint8_t c) {
    if (y < 0 || x < 0 || y >= size || x >= size) return;
    cls[static_cast<std::size_t>(y * size + x)] = c;
    road[static_cast<std::size_t>(y * size + x)] = 0;
  }
  void rect(std::int64_t y, std::int64_t x, std::int64_t h, std::int64_t w, std::uint8_t c) {
    for (std::int64_t i = y; i < y + h; ++i)
      for (std::int64_t j = x; j < x + w; ++j) set(i, j, c);
  }
  void disc(double cy, double cx, double r, std::uint8_t c) {
    for (auto i = static_cast<std::int64_t>(std::floor(cy - r)); i <= static_cast<std::int64_t>(std::ceil(cy + r)); ++i)
      for (auto j = static_cast<std::int64_t>(std::floor(cx - r)); j <= static_cast<std::int64_t>(std::ceil(cx + r)); ++j) {
        const double dy = static_cast<double>(i) + 0.5 - cy;
        const double dx = static_cast<double>(j) + 0.5 - cx;
        if (dy * dy + dx * dx <= r * r) set(i, j, c);
      }
  }
};

struct Painter {
  std::mt19937_64& rng;
  std::int64_t n;  // cells per side

  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, std::max(lo, hi))(rng);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int count(double per_64) {
    const double scale = static_cast<double>(n * n) / (64.0 * 64.0);
    return std::max(1, static_cast<int>(std::lround(per_64 * scale)));
  }

  void ribbons(CellMap& m) {
    const int k = static_cast<int>(uniform(1, 2));
    for (int r = 0; r < k; ++r) {
      const std::int64_t width = uniform(std::max<std::int64_t>(1, n / 32), std::max<std::int64_t>(2, n / 16));
      const std::int64_t at = uniform(0, n - width);
      const bool vertical = uniform(0, 1) == 1;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t t = at; t < at + width; ++t) {
          const std::int64_t y = vertical ? i : t;
          const std::int64_t x = vertical ? t : i;
          m.road[static_cast<std::size_t>(y * n + x)] = 1;
        }
    }
  }
  void blobs(CellMap& m, std::uint8_t c, int k, double rmin, double rmax) {
    for (int b = 0; b < k; ++b) {
      const double cy = real(0, static_cast<double>(n));
      const double cx = real(0, static_cast<double>(n));
      const double r = real(std::max(1.5, rmin), std::max(1.6, rmax));
      m.disc(cy, cx, r, c);
      const int lobes = static_cast<int>(uniform(0, 2));
      for (int l = 0; l < lobes; ++l) m.disc(cy + real(-r, r), cx + real(-r, r), r * real(0.5, 0.9), c);
    }
  }
  void boxes(CellMap& m, std::uint8_t c, int k, std::int64_t smin, std::int64_t smax) {
    for (int b = 0; b < k; ++b) {
      const std::int64_t h = uniform(smin, smax);
      const std::int64_t w = uniform(smin, smax);
      m.rect(uniform(0, n - h), uniform(0, n - w), h, w, c);
    }
  }
  void cars(CellMap& m, int k) {
    for (int b = 0; b < k; ++b) {
      const bool tall = uniform(0, 1) == 1;
      const std::int64_t h = tall ? 2 : 1;
      const std::int64_t w = tall ? 1 : 2;
      m.rect(uniform(0, n - h), uniform(0, n - w), h, w, kCar);
    }
  }
};

Rgb shade(Rgb c) {
  auto mix = [](std::uint8_t v) { return static_cast<std::uint8_t>(32 + (v * 3) / 4); };
  return {mix(c.r), mix(c.g), mix(c.b)};
}

Tile paint_tile(const SynthOptions& opt, const Palette& palette, std::mt19937_64& rng, int index) {
  const std::int64_t n = opt.size / opt.lattice;
  CellMap m(n);
  Painter p{rng, n};
  p.ribbons(m);
  const int classes = opt.classes;
  if (classes > kLowVeg) p.blobs(m, kLowVeg, 12, n / 20.0, n / 10.0);
  if (classes > kBuilding) p.boxes(m, kBuilding, 20, std::max<std::int64_t>(2, n / 10), std::max<std::int64_t>(3, n / 5));
  if (classes > kTree) p.blobs(m, kTree, 20, n / 32.0, n / 16.0);
  if (classes > kCar) p.cars(m, p.count(40));
  if (classes > kClutter) p.boxes(m, kClutter, p.count(30), 1, std::max<std::int64_t>(2, n / 20));

  // Every requested class appears in every tile.
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<bool> seen(static_cast<std::size_t>(classes), false);
    for (std::uint8_t c : m.cls) seen[c] = true;
    auto missing = std::find(seen.begin(), seen.end(), false);
    if (missing == seen.end()) break;
    const auto c = static_cast<std::uint8_t>(missing - seen.begin());
    m.rect(p.uniform(0, n - 2), p.uniform(0, n - 2), 2, 2, c);
  }

  Tile tile;
  char name[32];
  std::snprintf(name, sizeof name, "tile_%03d", index);
  tile.name = name;
  tile.image = Image(opt.size, opt.size, 3);
  tile.labels = Image(opt.size, opt.size, 1);
  std::uniform_int_distribution<int> noise(-16, 16);
  const Rgb road{120, 120, 120};
  for (std::int64_t y = 0; y < opt.size; ++y) {
    for (std::int64_t x = 0; x < opt.size; ++x) {
      const auto cell = static_cast<std::size_t>((y / opt.lattice) * n + x / opt.lattice);
      const std::uint8_t c = m.cls[cell];
      tile.labels.at(y, x) = c;
      const Rgb base = m.road[cell] ? road : shade(palette[c].color);
      const std::uint8_t rgb[3] = {base.r, base.g, base.b};
      for (int ch = 0; ch < 3; ++ch) tile.image.at(y, x, ch) = static_cast<std::uint8_t>(std::clamp(rgb[ch] + noise(rng), 0, 255));
    }
  }
  return tile;
}

}  // namespace

TileDataset make_synthetic(const SynthOptions& opt) {
  if (opt.tiles < 1) throw ConfigError("synth: tile count must be >= 1");
  if (opt.size < 64) throw ConfigError("synth: tile size must be >= 64");
  if (opt.classes < 2 || opt.classes > 6) throw ConfigError("synth: class count must be in [2, 6]");
  if (opt.lattice < 1 || opt.size % opt.lattice != 0) throw ConfigError("synth: lattice must divide the tile size");
  const Palette palette = Palette::isprs(opt.classes);
  std::mt19937_64 rng(opt.seed);
  std::vector<Tile> tiles;
  for (int i = 0; i < opt.tiles; ++i) tiles.push_back(paint_tile(opt, palette, rng, i));
  return TileDataset(std::move(tiles), palette);
}

TileDataset generate_synthetic(const std::filesystem::path& out_dir, const SynthOptions& opt) {
  TileDataset ds = make_synthetic(opt);
  ds.save(out_dir);
  return ds;
}

}  // namespace ddcm
