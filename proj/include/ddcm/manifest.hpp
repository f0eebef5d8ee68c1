#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ddcm {

/// SHA-1 of "blob <size>\0" followed by the bytes, as `git hash-object` prints it.
std::string git_blob_sha1(std::string_view bytes);
/// DataError if the file cannot be read.
std::string git_blob_sha1_file(const std::filesystem::path& path);

/// Plain-text run record:
///
///   command = <name>
///   <key> = <value>            one per field, in order
///   file <path> <sha1>         one per listed file, path relative to the manifest
///   (blank line, then the resolved config INI when given)
///
/// Nothing time-dependent is written, so repeating a run reproduces the manifest.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& fields,
                    const std::vector<std::filesystem::path>& files, const std::string& config_ini = "");

}  // namespace ddcm
