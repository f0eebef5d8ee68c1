#include "ddcm/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ddcm/error.hpp"

namespace ddcm {
namespace {

static_assert(std::endian::native == std::endian::little, "tensor files are written in host order");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError(std::string("tensor file truncated while reading ") + what);
  }
  return value;
}

}  // namespace

void write_tensors(std::ostream& out, const std::vector<TensorRecord>& records) {
  out.write(kTensorMagic, sizeof(kTensorMagic));
  put<std::uint32_t>(out, kTensorFormatVersion);
  for (const TensorRecord& r : records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put<std::uint8_t>(out, 4);
    const Shape& s = r.tensor.shape();
    for (std::int64_t d : {s.n, s.c, s.h, s.w}) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    auto v = r.tensor.values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing tensor stream");
}

std::vector<TensorRecord> read_tensors(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || std::memcmp(magic.data(), kTensorMagic, magic.size()) != 0) {
    throw FormatError("not a tensor file: bad magic (expected \"DDCM\")");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor file version " + std::to_string(version));
  }
  std::vector<TensorRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto len = get<std::uint32_t>(in, "name length");
    if (len > (1u << 16)) throw FormatError("implausible tensor name length " + std::to_string(len));
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("tensor file truncated while reading name");
    const auto rank = get<std::uint8_t>(in, "rank");
    if (rank != 4) throw FormatError("tensor '" + name + "': unsupported rank " + std::to_string(rank));
    std::array<std::int64_t, 4> dims{};
    for (auto& d : dims) {
      const auto v = get<std::uint64_t>(in, "dims");
      if (v == 0 || v > (1ull << 40)) throw FormatError("tensor '" + name + "': invalid dimension");
      d = static_cast<std::int64_t>(v);
    }
    const Shape shape{dims[0], dims[1], dims[2], dims[3]};
    std::vector<float> values(static_cast<std::size_t>(shape.numel()));
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)))) {
      throw FormatError("tensor '" + name + "': truncated data");
    }
    records.push_back({std::move(name), Tensor(shape, std::move(values))});
  }
  return records;
}

void save_tensors(const std::filesystem::path& path, const std::vector<TensorRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_tensors(out, records);
}

std::vector<TensorRecord> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_tensors(in);
}

}  // namespace ddcm
