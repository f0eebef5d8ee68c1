#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddcm/tensor.hpp"

namespace ddcm {

/// Binary tensor file:
///
///   "DDCM"  u32 version (= 1)
///   repeated until EOF:
///     u32 name length, UTF-8 name bytes, u8 rank (= 4), u64 dims[rank],
///     numel float32 values
///
/// All integers and floats little-endian.
struct TensorRecord {
  std::string name;
  Tensor tensor;
};

inline constexpr char kTensorMagic[4] = {'D', 'D', 'C', 'M'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

void write_tensors(std::ostream& out, const std::vector<TensorRecord>& records);
/// Throws FormatError on a bad magic, unknown version, unsupported rank or truncation.
std::vector<TensorRecord> read_tensors(std::istream& in);

void save_tensors(const std::filesystem::path& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> load_tensors(const std::filesystem::path& path);

}  // namespace ddcm
