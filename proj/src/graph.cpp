#include "ddcm/graph.hpp"

#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "ddcm/error.hpp"
#include "ddcm/ops.hpp"

namespace ddcm {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "bn";
    case LayerKind::PRelu: return "prelu";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Upsample: return "upsample";
    case LayerKind::Concat: return "concat";
    case LayerKind::Add: return "add";
    case LayerKind::LogSoftmax: return "log_softmax";
  }
  return "?";
}

void ModelGraph::require_node(NodeId id, const std::string& who) const {
  if (id >= nodes_.size()) throw ConfigError(who + ": unknown input node " + std::to_string(id));
}

NodeId ModelGraph::append(Node node) {
  for (const Node& existing : nodes_) {
    if (existing.name == node.name) throw ConfigError("duplicate layer name '" + node.name + "'");
  }
  nodes_.push_back(std::move(node));
  output_ = nodes_.size() - 1;
  return output_;
}

NodeId ModelGraph::input(std::int64_t channels, std::string name) {
  if (has_input_) throw ConfigError("graph already has an input node");
  if (channels < 1) throw ConfigError("input channels must be >= 1");
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Input;
  n.spec.channels = channels;
  n.out_channels = channels;
  has_input_ = true;
  return append(std::move(n));
}

NodeId ModelGraph::conv(NodeId x, const Conv2dSpec& spec, std::string name) {
  require_node(x, name);
  spec.validate();
  if (spec.in_channels != channels(x)) throw ShapeError(name + " (conv)", "c", spec.in_channels, channels(x));
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Conv;
  n.spec.conv = spec;
  n.inputs = {x};
  n.out_channels = spec.out_channels;
  n.weight = Tensor(spec.weight_shape());
  n.weight.set_requires_grad(true);
  if (spec.bias) {
    n.bias = Tensor(spec.bias_shape());
    n.bias.set_requires_grad(true);
  }
  return append(std::move(n));
}

NodeId ModelGraph::batch_norm(NodeId x, std::string name) {
  require_node(x, name);
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::BatchNorm;
  n.spec.channels = channels(x);
  n.inputs = {x};
  n.out_channels = channels(x);
  n.bn = BatchNormState::create(channels(x));
  return append(std::move(n));
}

NodeId ModelGraph::prelu(NodeId x, std::string name) {
  require_node(x, name);
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::PRelu;
  n.spec.channels = channels(x);
  n.inputs = {x};
  n.out_channels = channels(x);
  n.prelu = PReluState::create(channels(x));
  return append(std::move(n));
}

NodeId ModelGraph::relu(NodeId x, std::string name) {
  require_node(x, name);
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Relu;
  n.inputs = {x};
  n.out_channels = channels(x);
  return append(std::move(n));
}

NodeId ModelGraph::max_pool(NodeId x, std::int64_t window, std::int64_t stride, std::string name,
                            std::int64_t padding) {
  require_node(x, name);
  if (window < 1 || stride < 1 || padding < 0 || padding >= window) {
    throw ConfigError(name + ": invalid pooling window/stride/padding");
  }
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::MaxPool;
  n.spec.window = window;
  n.spec.stride = stride;
  n.spec.padding = padding;
  n.inputs = {x};
  n.out_channels = channels(x);
  return append(std::move(n));
}

NodeId ModelGraph::upsample(NodeId x, std::int64_t factor, std::string name) {
  require_node(x, name);
  if (factor < 1) throw ConfigError(name + ": upsample factor must be >= 1");
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Upsample;
  n.spec.factor = factor;
  n.inputs = {x};
  n.out_channels = channels(x);
  return append(std::move(n));
}

NodeId ModelGraph::concat(const std::vector<NodeId>& parts, std::string name) {
  if (parts.empty()) throw ConfigError(name + ": concat needs at least one input");
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Concat;
  for (NodeId p : parts) {
    require_node(p, n.name);
    n.out_channels += channels(p);
  }
  n.inputs = parts;
  return append(std::move(n));
}

NodeId ModelGraph::add(NodeId a, NodeId b, std::string name) {
  require_node(a, name);
  require_node(b, name);
  if (channels(a) != channels(b)) throw ShapeError(name + " (add)", "c", channels(a), channels(b));
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::Add;
  n.inputs = {a, b};
  n.out_channels = channels(a);
  return append(std::move(n));
}

NodeId ModelGraph::log_softmax(NodeId x, std::string name) {
  require_node(x, name);
  Node n;
  n.name = std::move(name);
  n.spec.kind = LayerKind::LogSoftmax;
  n.inputs = {x};
  n.out_channels = channels(x);
  return append(std::move(n));
}

void ModelGraph::set_output(NodeId node) {
  require_node(node, "set_output");
  output_ = node;
}

NodeId ModelGraph::output() const {
  if (nodes_.empty()) throw ConfigError("empty graph has no output");
  return output_;
}

std::int64_t ModelGraph::input_channels() const {
  for (const Node& n : nodes_) {
    if (n.spec.kind == LayerKind::Input) return n.out_channels;
  }
  throw ConfigError("graph has no input node");
}

Tensor ModelGraph::forward(const Tensor& x, Mode mode) {
  if (!has_input_) throw ConfigError("graph has no input node");
  const NodeId out_id = output();

  // Index of the last consumer of every node, so intermediates can be released early.
  std::vector<std::size_t> last_use(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (NodeId in : nodes_[i].inputs) last_use[in] = i;
  }

  std::vector<Tensor> values(nodes_.size());
  for (std::size_t i = 0; i <= out_id; ++i) {
    Node& node = nodes_[i];
    auto arg = [&](std::size_t k) -> const Tensor& { return values[node.inputs[k]]; };
    switch (node.spec.kind) {
      case LayerKind::Input:
        if (x.shape().c != node.out_channels) throw ShapeError(node.name + " (band count)", "c", node.out_channels, x.shape().c);
        values[i] = x;
        break;
      case LayerKind::Conv:
        values[i] = conv2d(arg(0), node.spec.conv, node.weight, node.bias);
        break;
      case LayerKind::BatchNorm:
        values[i] = ddcm::batch_norm(arg(0), node.bn, mode);
        break;
      case LayerKind::PRelu:
        values[i] = ddcm::prelu(arg(0), node.prelu);
        break;
      case LayerKind::Relu:
        values[i] = ddcm::relu(arg(0));
        break;
      case LayerKind::MaxPool:
        values[i] = ddcm::max_pool(arg(0), node.spec.window, node.spec.stride, node.spec.padding);
        break;
      case LayerKind::Upsample:
        values[i] = upsample_bilinear(arg(0), node.spec.factor);
        break;
      case LayerKind::Concat: {
        std::vector<Tensor> parts;
        parts.reserve(node.inputs.size());
        for (NodeId in : node.inputs) parts.push_back(values[in]);
        values[i] = concat_channels(parts);
        break;
      }
      case LayerKind::Add:
        values[i] = ddcm::add(arg(0), arg(1));
        break;
      case LayerKind::LogSoftmax:
        values[i] = log_softmax_channels(arg(0));
        break;
    }
    for (NodeId in : node.inputs) {
      if (last_use[in] == i) values[in] = Tensor();
    }
  }
  return values[out_id];
}

std::vector<Shape> ModelGraph::infer_shapes(const Shape& input) const {
  validate_shape(input, "infer_shapes");
  std::vector<Shape> shapes(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    const Shape in = node.inputs.empty() ? input : shapes[node.inputs.front()];
    switch (node.spec.kind) {
      case LayerKind::Input:
        if (input.c != node.out_channels) throw ShapeError(node.name + " (band count)", "c", node.out_channels, input.c);
        shapes[i] = input;
        break;
      case LayerKind::Conv:
        shapes[i] = node.spec.conv.output_shape(in);
        break;
      case LayerKind::MaxPool:
        shapes[i] = max_pool_shape(in, node.spec.window, node.spec.stride, node.spec.padding);
        break;
      case LayerKind::Upsample:
        shapes[i] = {in.n, in.c, in.h * node.spec.factor, in.w * node.spec.factor};
        break;
      case LayerKind::Concat:
      case LayerKind::Add: {
        for (NodeId p : node.inputs) {
          const Shape& s = shapes[p];
          if (s.h != in.h) throw ShapeError(node.name, "h", in.h, s.h);
          if (s.w != in.w) throw ShapeError(node.name, "w", in.w, s.w);
        }
        shapes[i] = {in.n, node.out_channels, in.h, in.w};
        break;
      }
      default:
        shapes[i] = in;
        break;
    }
  }
  return shapes;
}

std::vector<NamedTensor> ModelGraph::parameters() const {
  std::vector<NamedTensor> out;
  for (const Node& n : nodes_) {
    switch (n.spec.kind) {
      case LayerKind::Conv:
        out.push_back({n.name + ".weight", n.weight, ParamRole::Weight});
        if (n.bias.defined()) out.push_back({n.name + ".bias", n.bias, ParamRole::Bias});
        break;
      case LayerKind::BatchNorm:
        out.push_back({n.name + ".gamma", n.bn.gamma, ParamRole::Weight});
        out.push_back({n.name + ".beta", n.bn.beta, ParamRole::Bias});
        out.push_back({n.name + ".running_mean", n.bn.running_mean, ParamRole::Buffer});
        out.push_back({n.name + ".running_var", n.bn.running_var, ParamRole::Buffer});
        break;
      case LayerKind::PRelu:
        out.push_back({n.name + ".slope", n.prelu.slope, ParamRole::Weight});
        break;
      default:
        break;
    }
  }
  return out;
}

std::vector<NamedTensor> ModelGraph::trainable() const {
  std::vector<NamedTensor> out;
  for (NamedTensor& p : parameters()) {
    if (p.role != ParamRole::Buffer) out.push_back(std::move(p));
  }
  return out;
}

std::int64_t ModelGraph::trainable_count() const {
  std::int64_t total = 0;
  for (const NamedTensor& p : trainable()) total += p.tensor.numel();
  return total;
}

void ModelGraph::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Node& n : nodes_) {
    if (n.spec.kind != LayerKind::Conv) continue;
    const Conv2dSpec& c = n.spec.conv;
    const double fan_in = static_cast<double>(c.in_channels * c.kernel * c.kernel);
    std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
    for (float& v : n.weight.mutable_values()) v = dist(rng);
    if (n.bias.defined()) {
      for (float& v : n.bias.mutable_values()) v = 0.0f;
    }
  }
}

void ModelGraph::zero_grad() const {
  for (const NamedTensor& p : parameters()) p.tensor.zero_grad();
}

}  // namespace ddcm
