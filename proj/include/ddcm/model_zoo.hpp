#pragma once

#include <cstdint>
#include <string>

#include "ddcm/ddcm_module.hpp"
#include "ddcm/graph.hpp"

namespace ddcm {

enum class BackboneKind {
  ResNet50Trunc3,  ///< ResNet-50 stem plus bottleneck stages conv2_x..conv4_x: 1024 channels, stride 16.
  Tiny,            ///< Four 3x3/2 conv-BN-ReLU layers: 64 channels, stride 16. For desk-scale runs.
};

BackboneKind parse_backbone_kind(const std::string& text);
std::string to_string(BackboneKind kind);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::ResNet50Trunc3;
  std::int64_t in_channels = 3;

  std::int64_t out_channels() const noexcept { return kind == BackboneKind::ResNet50Trunc3 ? 1024 : 64; }
  std::int64_t out_stride() const noexcept { return 16; }
};

/// Appends the backbone after `x`, naming layers under `prefix`. Returns the last node.
NodeId append_backbone(ModelGraph& graph, NodeId x, const BackboneSpec& spec, const std::string& prefix = "backbone");

/// Standalone backbone graph, He-initialized.
ModelGraph build_backbone(const BackboneSpec& spec, std::uint64_t seed = 0);

/// Full segmentation network.
///
/// Low path: encoder DDCM on the normalized image, then 4x4/4 max pooling.
/// High path: backbone -> decoder1 DDCM -> decoder2 DDCM -> bilinear x4.
/// Both meet at stride 4, are concatenated, classified by a 1x1 conv with bias,
/// upsampled x4 and turned into per-pixel log-probabilities.
struct DdcmR50Spec {
  std::int64_t num_classes = 6;
  BackboneSpec backbone;
  DdcmConfig encoder{3, 3, {1, 2, 3, 5, 7, 9}, 3, 3};
  DdcmConfig decoder1{1024, 36, {1, 2, 3, 4}, 3, 36};
  DdcmConfig decoder2{36, 18, {1}, 3, 18};

  static constexpr std::int64_t kFusionStride = 4;

  /// Same topology on the tiny backbone (decoder1 input narrowed to 64 channels).
  static DdcmR50Spec tiny(std::int64_t num_classes = 6);

  std::int64_t bands() const noexcept { return backbone.in_channels; }
  /// Throws ConfigError for class count < 2 or inconsistent channel plumbing.
  void validate() const;
};

ModelGraph build_ddcm_r50(const DdcmR50Spec& spec, std::uint64_t seed = 0);

}  // namespace ddcm
