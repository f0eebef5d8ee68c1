#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ddcm/layers.hpp"
#include "ddcm/tensor.hpp"

namespace ddcm {

enum class LayerKind { Input, Conv, BatchNorm, PRelu, Relu, MaxPool, Upsample, Concat, Add, LogSoftmax };

const char* to_string(LayerKind kind);

/// Declarative description of one layer. Only the fields relevant to `kind` are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::Input;
  Conv2dSpec conv;            // Conv
  std::int64_t channels = 0;  // Input, BatchNorm, PRelu
  std::int64_t window = 0;    // MaxPool
  std::int64_t stride = 0;    // MaxPool
  std::int64_t padding = 0;   // MaxPool
  std::int64_t factor = 0;    // Upsample
};

using NodeId = std::size_t;

struct Node {
  std::string name;
  LayerSpec spec;
  std::vector<NodeId> inputs;
  std::int64_t out_channels = 0;

  // Parameters, populated according to spec.kind.
  Tensor weight;
  Tensor bias;
  BatchNormState bn;
  PReluState prelu;
};

/// How a stored tensor participates in training.
enum class ParamRole { Weight, Bias, Buffer };

struct NamedTensor {
  std::string name;
  Tensor tensor;
  ParamRole role = ParamRole::Weight;
};

/// A single-input DAG of layers. Nodes are appended in topological order; each
/// append checks channel compatibility against its inputs, so channel-growth
/// laws are enforced while the graph is built.
class ModelGraph {
 public:
  NodeId input(std::int64_t channels, std::string name = "input");
  NodeId conv(NodeId x, const Conv2dSpec& spec, std::string name);
  NodeId batch_norm(NodeId x, std::string name);
  NodeId prelu(NodeId x, std::string name);
  NodeId relu(NodeId x, std::string name);
  NodeId max_pool(NodeId x, std::int64_t window, std::int64_t stride, std::string name, std::int64_t padding = 0);
  NodeId upsample(NodeId x, std::int64_t factor, std::string name);
  NodeId concat(const std::vector<NodeId>& parts, std::string name);
  NodeId add(NodeId a, NodeId b, std::string name);
  NodeId log_softmax(NodeId x, std::string name);

  /// Defaults to the last appended node.
  void set_output(NodeId node);
  NodeId output() const;

  std::int64_t channels(NodeId node) const { return nodes_.at(node).out_channels; }
  std::int64_t input_channels() const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Runs the graph. Records onto the active tape when parameters require gradients.
  Tensor forward(const Tensor& x, Mode mode);
  /// Output shape of every node for the given input shape (no computation).
  std::vector<Shape> infer_shapes(const Shape& input) const;

  /// Every stored tensor in node order: conv weight/bias, BN gamma/beta/running stats, PReLU slope.
  std::vector<NamedTensor> parameters() const;
  /// Only tensors the optimizer updates (roles Weight and Bias).
  std::vector<NamedTensor> trainable() const;
  std::int64_t trainable_count() const;

  /// He-normal conv weights (std = sqrt(2 / fan_in)), zero conv biases.
  void initialize(std::uint64_t seed);
  void zero_grad() const;

 private:
  NodeId append(Node node);
  void require_node(NodeId id, const std::string& who) const;

  std::vector<Node> nodes_;
  std::size_t output_ = static_cast<std::size_t>(-1);
  bool has_input_ = false;
};

}  // namespace ddcm
