#include "ddcm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "ddcm/error.hpp"

namespace ddcm {

// Palette

Palette::Palette(std::vector<PaletteEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].index != static_cast<int>(i)) {
      throw DataError("palette: class indices must be 0.." + std::to_string(entries.size() - 1) +
                      " without gaps or repeats");
    }
  }
  entries_ = std::move(entries);
}

Palette Palette::isprs(int classes) {
  static const PaletteEntry kAll[] = {
      {0, {255, 255, 255}, "impervious_surfaces"},
      {1, {0, 0, 255}, "building"},
      {2, {0, 255, 255}, "low_vegetation"},
      {3, {0, 255, 0}, "tree"},
      {4, {255, 255, 0}, "car"},
      {5, {255, 0, 0}, "clutter"},
  };
  if (classes < 1 || classes > 6) throw ConfigError("ISPRS palette has 1..6 classes, got " + std::to_string(classes));
  return Palette(std::vector<PaletteEntry>(kAll, kAll + classes));
}

Palette Palette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open palette '" + path.string() + "'");
  std::vector<PaletteEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    int index = 0, r = 0, g = 0, b = 0;
    std::string name;
    if (!(fields >> index)) continue;
    if (!(fields >> r >> g >> b >> name) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'index R G B name'");
    }
    entries.push_back({index, {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)}, name});
  }
  if (entries.empty()) throw DataError("palette '" + path.string() + "' lists no classes");
  return Palette(std::move(entries));
}

void Palette::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write palette '" + path.string() + "'");
  out << "# index R G B name\n";
  for (const auto& e : entries_) {
    out << e.index << ' ' << int{e.color.r} << ' ' << int{e.color.g} << ' ' << int{e.color.b} << ' ' << e.name << '\n';
  }
  if (!out) throw DataError("failed writing palette '" + path.string() + "'");
}

std::optional<int> Palette::find(Rgb color) const {
  for (const auto& e : entries_) {
    if (e.color == color) return e.index;
  }
  return std::nullopt;
}

std::optional<int> Palette::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.index;
  }
  return std::nullopt;
}

// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError(std::string("cannot open '") + path.string() + "' for " + (mode[0] == 'r' ? "reading" : "writing"));
  return f;
}

void on_png_warning(png_structp, png_const_charp) {}

enum class ReadMode { Rgb, Label };

struct RawPng {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  bool palette = false;
  std::vector<std::uint8_t> pixels;
};

// Kept free of objects with destructors between setjmp and any libpng call.
bool read_png_raw(std::FILE* file, ReadMode mode, RawPng& out, char* message, std::size_t message_size) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::snprintf(message, message_size, "corrupt or unsupported PNG");
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  out.palette = color_type == PNG_COLOR_TYPE_PALETTE;
  if (mode == ReadMode::Rgb) {
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      png_set_gray_to_rgb(png);
    }
  } else {
    if (color_type == PNG_COLOR_TYPE_PALETTE && bit_depth < 8) png_set_packing(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);

  out.width = width;
  out.height = height;
  out.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  if (row_bytes != static_cast<std::size_t>(out.width * out.channels)) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::snprintf(message, message_size, "unexpected PNG row layout");
    return false;
  }
  out.pixels.resize(row_bytes * height);
  for (png_uint_32 y = 0; y < height; ++y) png_read_row(png, out.pixels.data() + y * row_bytes, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng read_raw(const std::filesystem::path& path, ReadMode mode) {
  File f = open_file(path, "rb");
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("'" + path.string() + "' is not a PNG file");
  }
  std::rewind(f.get());
  RawPng raw;
  char message[128] = "cannot allocate PNG reader";
  if (!read_png_raw(f.get(), mode, raw, message, sizeof message)) {
    throw DataError("'" + path.string() + "': " + message);
  }
  return raw;
}

bool write_png_raw(std::FILE* file, const Image& image, const png_color* plte, int plte_size) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  int color_type = PNG_COLOR_TYPE_GRAY;
  if (plte) color_type = PNG_COLOR_TYPE_PALETTE;
  else if (image.channels == 3) color_type = PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (plte) png_set_PLTE(png, info, plte, plte_size);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(image.width * image.channels);
  for (std::int64_t y = 0; y < image.height; ++y) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(y) * row_bytes);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_checked(const std::filesystem::path& path, const Image& image, const png_color* plte, int plte_size) {
  if (image.height < 1 || image.width < 1 || image.pixels.size() != static_cast<std::size_t>(image.height * image.width * image.channels)) {
    throw DataError("cannot write '" + path.string() + "': malformed image buffer");
  }
  File f = open_file(path, "wb");
  if (!write_png_raw(f.get(), image, plte, plte_size) || std::fflush(f.get()) != 0) {
    throw DataError("failed writing PNG '" + path.string() + "'");
  }
}

}  // namespace

Image read_rgb_png(const std::filesystem::path& path) {
  RawPng raw = read_raw(path, ReadMode::Rgb);
  if (raw.channels != 3) throw DataError("'" + path.string() + "': could not convert to RGB");
  Image img;
  img.height = raw.height;
  img.width = raw.width;
  img.channels = 3;
  img.pixels = std::move(raw.pixels);
  return img;
}

Image read_label_png(const std::filesystem::path& path, const Palette* palette) {
  RawPng raw = read_raw(path, ReadMode::Label);
  Image img(raw.height, raw.width, 1);
  if (raw.channels == 1) {
    img.pixels = std::move(raw.pixels);
    return img;
  }
  if (raw.channels != 3) throw DataError("'" + path.string() + "': unsupported label channel count");
  if (!palette) throw DataError("'" + path.string() + "': RGB label image needs a palette to map colors to classes");
  std::map<std::uint32_t, std::uint8_t> lut;
  for (const auto& e : palette->entries()) lut[(e.color.r << 16) | (e.color.g << 8) | e.color.b] = static_cast<std::uint8_t>(e.index);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint32_t key = (raw.pixels[3 * i] << 16) | (raw.pixels[3 * i + 1] << 8) | raw.pixels[3 * i + 2];
    auto it = lut.find(key);
    if (it == lut.end()) {
      throw DataError("'" + path.string() + "': color (" + std::to_string(raw.pixels[3 * i]) + "," +
                      std::to_string(raw.pixels[3 * i + 1]) + "," + std::to_string(raw.pixels[3 * i + 2]) +
                      ") is not in the palette");
    }
    img.pixels[i] = it->second;
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw DataError("write_png: images must have 1 or 3 channels");
  write_checked(path, image, nullptr, 0);
}

void write_label_png(const std::filesystem::path& path, const Image& labels, const Palette& palette) {
  if (labels.channels != 1) throw DataError("write_label_png: label maps have one channel");
  if (palette.size() < 1 || palette.size() > 256) throw DataError("write_label_png: palette must have 1..256 colors");
  for (std::uint8_t v : labels.pixels) {
    if (v >= palette.size()) throw DataError("write_label_png: label " + std::to_string(v) + " is not in the palette");
  }
  std::vector<png_color> plte;
  for (const auto& e : palette.entries()) plte.push_back({e.color.r, e.color.g, e.color.b});
  write_checked(path, labels, plte.data(), static_cast<int>(plte.size()));
}

}  // namespace ddcm
