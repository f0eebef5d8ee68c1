#include "ddcm/ddcm_module.hpp"

#include "ddcm/error.hpp"

namespace ddcm {

void DdcmConfig::validate() const {
  if (in_channels < 1) throw ConfigError("ddcm: in_channels must be >= 1");
  if (block_out_channels < 1) throw ConfigError("ddcm: block_out_channels must be >= 1");
  if (merge_out_channels < 1) throw ConfigError("ddcm: merge_out_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("ddcm: kernel must be a positive odd size");
  if (rates.empty()) throw ConfigError("ddcm: at least one dilation rate is required");
  for (std::int64_t r : rates) {
    if (r < 1) throw ConfigError("ddcm: dilation rates must be positive integers");
  }
}

NodeId append_dcs_block(ModelGraph& graph, NodeId x, std::int64_t rate, std::int64_t kernel,
                        std::int64_t out_channels, const std::string& name) {
  if (rate < 1) throw ConfigError(name + ": dilation rate must be >= 1");
  const NodeId c = graph.conv(x, Conv2dSpec::same(graph.channels(x), out_channels, kernel, rate), name + ".conv");
  const NodeId a = graph.prelu(c, name + ".prelu");
  const NodeId b = graph.batch_norm(a, name + ".bn");
  return graph.concat({x, b}, name + ".stack");
}

NodeId append_ddcm(ModelGraph& graph, NodeId x, const DdcmConfig& cfg, const std::string& name) {
  cfg.validate();
  if (graph.channels(x) != cfg.in_channels) throw ShapeError(name, "c", cfg.in_channels, graph.channels(x));
  NodeId stack = x;
  for (std::size_t i = 0; i < cfg.rates.size(); ++i) {
    stack = append_dcs_block(graph, stack, cfg.rates[i], cfg.kernel, cfg.block_out_channels,
                             name + ".block" + std::to_string(i));
    if (graph.channels(stack) != cfg.block_in_channels(i + 1)) {
      throw ConfigError(name + ": dense growth violated after block " + std::to_string(i));
    }
  }
  const NodeId m = graph.conv(stack, Conv2dSpec::same(cfg.merge_in_channels(), cfg.merge_out_channels, 1),
                              name + ".merge.conv");
  const NodeId b = graph.batch_norm(m, name + ".merge.bn");
  return graph.prelu(b, name + ".merge.prelu");
}

ModelGraph make_ddcm_module(const DdcmConfig& cfg, std::uint64_t seed) {
  ModelGraph graph;
  const NodeId in = graph.input(cfg.in_channels);
  graph.set_output(append_ddcm(graph, in, cfg, "ddcm"));
  graph.initialize(seed);
  return graph;
}

std::int64_t receptive_field(const DdcmConfig& cfg) {
  std::int64_t rf = 1;
  for (std::int64_t r : cfg.rates) rf += effective_kernel(cfg.kernel, r) - 1;
  return rf;
}

}  // namespace ddcm
