#include "ddcm/checkpoint.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "ddcm/error.hpp"
#include "ddcm/serialize.hpp"

namespace ddcm {
namespace {

bool has_prefix(const std::string& name, const std::string& prefix) {
  return name.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void save_checkpoint(const ModelGraph& graph, const std::filesystem::path& path, const std::string& prefix) {
  std::vector<TensorRecord> records;
  for (const NamedTensor& p : graph.parameters()) {
    if (has_prefix(p.name, prefix)) records.push_back({p.name, p.tensor});
  }
  if (records.empty()) throw ConfigError("save_checkpoint: no tensors match prefix '" + prefix + "'");
  save_tensors(path, records);
}

void load_checkpoint(ModelGraph& graph, const std::filesystem::path& path, const LoadOptions& options) {
  const std::vector<TensorRecord> records = load_tensors(path);

  std::map<std::string, Tensor> targets;
  for (const NamedTensor& p : graph.parameters()) {
    if (has_prefix(p.name, options.prefix)) targets.emplace(p.name, p.tensor);
  }

  std::vector<std::string> problems;
  std::map<std::string, const TensorRecord*> found;
  for (const TensorRecord& r : records) {
    if (!has_prefix(r.name, options.prefix)) continue;
    auto it = targets.find(r.name);
    if (it == targets.end()) {
      problems.push_back("unexpected tensor '" + r.name + "'");
      continue;
    }
    if (it->second.shape() != r.tensor.shape()) {
      problems.push_back("'" + r.name + "': shape " + r.tensor.shape().str() + " in file, " +
                         it->second.shape().str() + " in model");
      continue;
    }
    if (!found.emplace(r.name, &r).second) problems.push_back("duplicate tensor '" + r.name + "'");
  }
  for (const auto& [name, tensor] : targets) {
    if (!found.contains(name)) problems.push_back("missing tensor '" + name + "'");
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint '" + path.string() + "' does not match the model:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw FormatError(msg);
  }

  for (auto& [name, target] : targets) {
    auto src = found.at(name)->tensor.values();
    auto dst = target.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace ddcm
