#pragma once

#include <filesystem>
#include <string>

#include "ddcm/graph.hpp"

namespace ddcm {

/// Writes every stored tensor of `graph` whose name starts with `prefix`.
void save_checkpoint(const ModelGraph& graph, const std::filesystem::path& path, const std::string& prefix = "");

struct LoadOptions {
  /// Only graph tensors (and file records) whose names start with this prefix take part.
  /// "backbone." loads a backbone-only file and leaves everything else at init.
  std::string prefix;
};

/// Copies matching tensors into `graph`. Names and shapes must match exactly
/// within the prefix; on any mismatch nothing is modified and a FormatError
/// lists every offending tensor.
void load_checkpoint(ModelGraph& graph, const std::filesystem::path& path, const LoadOptions& options = {});

}  // namespace ddcm
