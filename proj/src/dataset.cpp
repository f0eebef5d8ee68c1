#include "ddcm/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ddcm/error.hpp"

namespace ddcm {

namespace fs = std::filesystem;

TileDataset::TileDataset(std::vector<Tile> tiles, Palette palette) : tiles_(std::move(tiles)), palette_(std::move(palette)) {
  if (palette_.size() < 1) throw DataError("dataset: palette is empty");
  std::set<std::string> names;
  for (const Tile& t : tiles_) {
    if (!names.insert(t.name).second) throw DataError("dataset: duplicate tile name '" + t.name + "'");
    if (t.image.channels != 3) throw DataError("dataset: tile '" + t.name + "' is not an RGB image");
    if (t.labels.channels != 1) throw DataError("dataset: labels of '" + t.name + "' must have one channel");
    if (t.image.height != t.labels.height || t.image.width != t.labels.width) {
      throw DataError("dataset: tile '" + t.name + "' is " + std::to_string(t.image.height) + "x" +
                      std::to_string(t.image.width) + " but its labels are " + std::to_string(t.labels.height) + "x" +
                      std::to_string(t.labels.width));
    }
    for (std::uint8_t v : t.labels.pixels) {
      if (v >= palette_.size()) {
        throw DataError("dataset: tile '" + t.name + "' has label " + std::to_string(v) + " outside [0, " +
                        std::to_string(palette_.size()) + ")");
      }
    }
  }
}

TileDataset TileDataset::open(const fs::path& root) {
  const fs::path images = root / "images";
  const fs::path labels = root / "labels";
  if (!fs::is_directory(images)) throw DataError("dataset: missing directory '" + images.string() + "'");
  if (!fs::is_directory(labels)) throw DataError("dataset: missing directory '" + labels.string() + "'");
  const fs::path palette_path = root / "palette.txt";
  Palette palette = fs::exists(palette_path) ? Palette::load(palette_path) : Palette::isprs();

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("dataset: no PNG images under '" + images.string() + "'");
  std::sort(files.begin(), files.end());

  std::vector<Tile> tiles;
  for (const fs::path& f : files) {
    const fs::path label_path = labels / f.filename();
    if (!fs::exists(label_path)) throw DataError("dataset: image '" + f.string() + "' has no label tile");
    tiles.push_back({f.stem().string(), read_rgb_png(f), read_label_png(label_path, &palette)});
  }
  return TileDataset(std::move(tiles), std::move(palette));
}

void TileDataset::save(const fs::path& root) const {
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "labels", ec);
  if (ec) throw DataError("dataset: cannot create '" + root.string() + "': " + ec.message());
  palette_.save(root / "palette.txt");
  for (const Tile& t : tiles_) {
    write_png(root / "images" / (t.name + ".png"), t.image);
    write_label_png(root / "labels" / (t.name + ".png"), t.labels, palette_);
  }
}

Tensor image_to_tensor(const Image& image) {
  if (image.channels != 3) throw DataError("image_to_tensor: expected an RGB image");
  Tensor t({1, 3, image.height, image.width});
  auto v = t.mutable_values();
  const std::int64_t plane = image.height * image.width;
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t c = 0; c < 3; ++c) {
      v[static_cast<std::size_t>(c * plane + i)] = static_cast<float>(image.pixels[static_cast<std::size_t>(i * 3 + c)]) / 255.0f;
    }
  }
  return t;
}

// Class statistics

std::vector<double> median_frequency_weights(const std::vector<double>& freq, double* median) {
  std::vector<double> present;
  for (double f : freq) {
    if (f < 0.0 || f > 1.0) throw DataError("class frequency " + std::to_string(f) + " outside [0, 1]");
    if (f > 0.0) present.push_back(f);
  }
  if (present.empty()) throw DataError("median frequency balancing: no class is present");
  std::sort(present.begin(), present.end());
  const std::size_t m = present.size() / 2;
  const double med = present.size() % 2 == 1 ? present[m] : 0.5 * (present[m - 1] + present[m]);
  if (median) *median = med;
  std::vector<double> weights(freq.size(), 0.0);
  for (std::size_t c = 0; c < freq.size(); ++c) {
    if (freq[c] > 0.0) weights[c] = med / freq[c];
  }
  return weights;
}

ClassStats compute_class_stats(const TileDataset& dataset) {
  if (dataset.size() == 0) throw DataError("class statistics: dataset is empty");
  const auto classes = static_cast<std::size_t>(dataset.class_count());
  ClassStats stats;
  stats.pixels.assign(classes, 0);
  stats.present_pixels.assign(classes, 0);
  for (const Tile& t : dataset.tiles()) {
    std::vector<std::uint64_t> counts(classes, 0);
    for (std::uint8_t v : t.labels.pixels) ++counts[v];
    const auto total = static_cast<std::uint64_t>(t.labels.pixels.size());
    for (std::size_t c = 0; c < classes; ++c) {
      stats.pixels[c] += counts[c];
      if (counts[c] > 0) stats.present_pixels[c] += total;
    }
  }
  stats.freq.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (stats.pixels[c] > 0) {
      stats.freq[c] = static_cast<double>(stats.pixels[c]) / static_cast<double>(stats.present_pixels[c]);
    } else {
      stats.absent.push_back(static_cast<int>(c));
    }
  }
  stats.weights = median_frequency_weights(stats.freq, &stats.median_freq);
  return stats;
}

// Patch sampling

PatchSampler::PatchSampler(const TileDataset& dataset, SamplerOptions options)
    : dataset_(dataset), options_(options) {
  if (dataset_.size() == 0) throw DataError("sampler: dataset is empty");
  if (options_.patch_size < 1) throw ConfigError("sampler: patch size must be >= 1");
  if (options_.patches_per_epoch < 1) throw ConfigError("sampler: patches per epoch must be >= 1");
  if (options_.align < 1) throw ConfigError("sampler: align must be >= 1");
  for (const Tile& t : dataset_.tiles()) {
    if (t.image.height < options_.patch_size || t.image.width < options_.patch_size) {
      throw DataError("sampler: tile '" + t.name + "' (" + std::to_string(t.image.height) + "x" +
                      std::to_string(t.image.width) + ") is smaller than the " + std::to_string(options_.patch_size) +
                      " px patch");
    }
  }
  start_epoch(0);
}

void PatchSampler::start_epoch(std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(options_.seed), static_cast<std::uint32_t>(options_.seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  rng_.seed(seq);
  remaining_ = options_.patches_per_epoch;
}

PatchOrigin PatchSampler::next_origin() {
  if (remaining_ <= 0) throw DataError("sampler: epoch exhausted");
  --remaining_;
  PatchOrigin o;
  o.tile = std::uniform_int_distribution<std::size_t>(0, dataset_.size() - 1)(rng_);
  const Tile& t = dataset_.tile(o.tile);
  const std::int64_t a = options_.align;
  o.y = a * std::uniform_int_distribution<std::int64_t>(0, (t.image.height - options_.patch_size) / a)(rng_);
  o.x = a * std::uniform_int_distribution<std::int64_t>(0, (t.image.width - options_.patch_size) / a)(rng_);
  std::bernoulli_distribution coin(0.5);
  if (options_.hflip) o.hflip = coin(rng_);
  if (options_.vflip) o.vflip = coin(rng_);
  return o;
}

void extract_patch(const Tile& tile, const PatchOrigin& o, std::int64_t size, Tensor& images, LabelMap& labels,
                   std::int64_t b) {
  auto v = images.mutable_values();
  const std::int64_t plane = size * size;
  for (std::int64_t i = 0; i < size; ++i) {
    const std::int64_t sy = o.y + (o.vflip ? size - 1 - i : i);
    for (std::int64_t j = 0; j < size; ++j) {
      const std::int64_t sx = o.x + (o.hflip ? size - 1 - j : j);
      for (std::int64_t c = 0; c < 3; ++c) {
        v[static_cast<std::size_t>((b * 3 + c) * plane + i * size + j)] = static_cast<float>(tile.image.at(sy, sx, c)) / 255.0f;
      }
      labels.values[static_cast<std::size_t>((b * size + i) * size + j)] = tile.labels.at(sy, sx);
    }
  }
}

Batch PatchSampler::next_batch(std::int64_t n) {
  if (n < 1) throw ConfigError("sampler: batch size must be >= 1");
  const std::int64_t count = std::min(n, remaining_);
  Batch batch;
  if (count == 0) return batch;
  const std::int64_t p = options_.patch_size;
  batch.images = Tensor({count, 3, p, p});
  batch.labels = LabelMap(count, p, p);
  for (std::int64_t b = 0; b < count; ++b) {
    const PatchOrigin o = next_origin();
    extract_patch(dataset_.tile(o.tile), o, p, batch.images, batch.labels, b);
    batch.origins.push_back(o);
  }
  return batch;
}

}  // namespace ddcm
