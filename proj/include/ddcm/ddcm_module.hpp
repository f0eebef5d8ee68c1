#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcm/graph.hpp"

namespace ddcm {

/// Dense dilated convolutions merging module.
///
/// A chain of DCs blocks, one per dilation rate. Block i sees the input plus the
/// outputs of all earlier blocks (channel concatenation), so its input width is
/// in_channels + i * block_out_channels. A 1x1 conv -> BN -> PReLU merge maps the
/// final stack of in_channels + rates.size() * block_out_channels channels down
/// to merge_out_channels. Every tensor inside keeps the input resolution.
struct DdcmConfig {
  std::int64_t in_channels = 3;
  std::int64_t block_out_channels = 3;
  std::vector<std::int64_t> rates{1};
  std::int64_t kernel = 3;
  std::int64_t merge_out_channels = 3;

  void validate() const;
  std::int64_t block_in_channels(std::size_t block) const {
    return in_channels + static_cast<std::int64_t>(block) * block_out_channels;
  }
  std::int64_t merge_in_channels() const { return block_in_channels(rates.size()); }
};

/// Appends conv(rate) -> PReLU -> BN and concatenates the result after `x`.
/// The conv has no bias since BN follows it. Returns the concat node.
NodeId append_dcs_block(ModelGraph& graph, NodeId x, std::int64_t rate, std::int64_t kernel,
                        std::int64_t out_channels, const std::string& name);

/// Appends the full module; returns the merge PReLU node.
NodeId append_ddcm(ModelGraph& graph, NodeId x, const DdcmConfig& cfg, const std::string& name);

/// Standalone module graph (input -> module), He-initialized from `seed`.
ModelGraph make_ddcm_module(const DdcmConfig& cfg, std::uint64_t seed);

/// Theoretical support width of the stride-1 dense chain: 1 + sum over blocks of
/// (effective_kernel(k, r_i) - 1), which equals 1 + (k - 1) * sum(r_i).
std::int64_t receptive_field(const DdcmConfig& cfg);

}  // namespace ddcm
