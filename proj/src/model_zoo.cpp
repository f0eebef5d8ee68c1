#include "ddcm/model_zoo.hpp"

#include <array>

#include "ddcm/error.hpp"

namespace ddcm {

BackboneKind parse_backbone_kind(const std::string& text) {
  if (text == "resnet50-trunc3") return BackboneKind::ResNet50Trunc3;
  if (text == "tiny") return BackboneKind::Tiny;
  throw ConfigError("unknown backbone kind '" + text + "' (expected resnet50-trunc3 or tiny)");
}

std::string to_string(BackboneKind kind) {
  return kind == BackboneKind::ResNet50Trunc3 ? "resnet50-trunc3" : "tiny";
}

namespace {

NodeId conv_bn(ModelGraph& g, NodeId x, std::int64_t out, std::int64_t kernel, std::int64_t stride,
               const std::string& name, bool with_relu) {
  Conv2dSpec spec;
  spec.in_channels = g.channels(x);
  spec.out_channels = out;
  spec.kernel = kernel;
  spec.stride = stride;
  spec.padding = (kernel - 1) / 2;
  const NodeId c = g.conv(x, spec, name + ".conv");
  const NodeId b = g.batch_norm(c, name + ".bn");
  return with_relu ? g.relu(b, name + ".relu") : b;
}

// 1x1 reduce -> 3x3 (strided) -> 1x1 expand, with a projection shortcut when shape changes.
NodeId bottleneck(ModelGraph& g, NodeId x, std::int64_t width, std::int64_t out, std::int64_t stride,
                  const std::string& name) {
  NodeId y = conv_bn(g, x, width, 1, 1, name + ".a", true);
  y = conv_bn(g, y, width, 3, stride, name + ".b", true);
  y = conv_bn(g, y, out, 1, 1, name + ".c", false);
  NodeId shortcut = x;
  if (stride != 1 || g.channels(x) != out) shortcut = conv_bn(g, x, out, 1, stride, name + ".down", false);
  return g.relu(g.add(y, shortcut, name + ".sum"), name + ".relu");
}

struct Stage {
  int blocks;
  std::int64_t width;
  std::int64_t out;
  std::int64_t stride;
};

}  // namespace

NodeId append_backbone(ModelGraph& graph, NodeId x, const BackboneSpec& spec, const std::string& prefix) {
  if (graph.channels(x) != spec.in_channels) throw ShapeError(prefix, "c", spec.in_channels, graph.channels(x));
  switch (spec.kind) {
    case BackboneKind::ResNet50Trunc3: {
      NodeId y = conv_bn(graph, x, 64, 7, 2, prefix + ".stem", true);
      y = graph.max_pool(y, 3, 2, prefix + ".stem.pool", 1);
      constexpr std::array<Stage, 3> stages{{{3, 64, 256, 1}, {4, 128, 512, 2}, {6, 256, 1024, 2}}};
      for (std::size_t s = 0; s < stages.size(); ++s) {
        for (int b = 0; b < stages[s].blocks; ++b) {
          y = bottleneck(graph, y, stages[s].width, stages[s].out, b == 0 ? stages[s].stride : 1,
                         prefix + ".layer" + std::to_string(s + 1) + "." + std::to_string(b));
        }
      }
      return y;
    }
    case BackboneKind::Tiny: {
      NodeId y = x;
      constexpr std::array<std::int64_t, 4> widths{16, 32, 64, 64};
      for (std::size_t i = 0; i < widths.size(); ++i) {
        y = conv_bn(graph, y, widths[i], 3, 2, prefix + ".conv" + std::to_string(i), true);
      }
      return y;
    }
  }
  throw ConfigError("unknown backbone kind");
}

ModelGraph build_backbone(const BackboneSpec& spec, std::uint64_t seed) {
  ModelGraph graph;
  const NodeId in = graph.input(spec.in_channels);
  graph.set_output(append_backbone(graph, in, spec));
  graph.initialize(seed);
  return graph;
}

DdcmR50Spec DdcmR50Spec::tiny(std::int64_t num_classes) {
  DdcmR50Spec spec;
  spec.num_classes = num_classes;
  spec.backbone.kind = BackboneKind::Tiny;
  spec.decoder1.in_channels = spec.backbone.out_channels();
  return spec;
}

void DdcmR50Spec::validate() const {
  if (num_classes < 2) throw ConfigError("model: class count must be >= 2");
  encoder.validate();
  decoder1.validate();
  decoder2.validate();
  if (encoder.in_channels != backbone.in_channels) {
    throw ConfigError("model: encoder input channels (" + std::to_string(encoder.in_channels) +
                      ") must equal the image band count (" + std::to_string(backbone.in_channels) + ")");
  }
  if (decoder1.in_channels != backbone.out_channels()) {
    throw ConfigError("model: decoder1 input channels must equal backbone output (" +
                      std::to_string(backbone.out_channels()) + ")");
  }
  if (decoder2.in_channels != decoder1.merge_out_channels) {
    throw ConfigError("model: decoder2 input channels must equal decoder1 output");
  }
  if (backbone.out_stride() % kFusionStride != 0) throw ConfigError("model: backbone stride incompatible with fusion");
}

ModelGraph build_ddcm_r50(const DdcmR50Spec& spec, std::uint64_t seed) {
  spec.validate();
  ModelGraph g;
  const NodeId image = g.input(spec.bands(), "image");

  NodeId low = append_ddcm(g, image, spec.encoder, "encoder");
  low = g.max_pool(low, DdcmR50Spec::kFusionStride, DdcmR50Spec::kFusionStride, "encoder.pool");

  NodeId high = append_backbone(g, image, spec.backbone);
  high = append_ddcm(g, high, spec.decoder1, "decoder1");
  high = append_ddcm(g, high, spec.decoder2, "decoder2");
  high = g.upsample(high, spec.backbone.out_stride() / DdcmR50Spec::kFusionStride, "decoder.up");

  const NodeId fused = g.concat({low, high}, "fusion");
  Conv2dSpec cls = Conv2dSpec::same(g.channels(fused), spec.num_classes, 1, 1, true);
  NodeId y = g.conv(fused, cls, "classifier");
  y = g.upsample(y, DdcmR50Spec::kFusionStride, "classifier.up");
  g.set_output(g.log_softmax(y, "log_probs"));
  g.initialize(seed);
  return g;
}

}  // namespace ddcm
