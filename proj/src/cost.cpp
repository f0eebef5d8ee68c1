#include "ddcm/cost.hpp"

#include <algorithm>
#include <cstdio>

namespace ddcm {

CostReport count_cost(const ModelGraph& graph, const Shape& input) {
  const std::vector<Shape> shapes = graph.infer_shapes(input);
  CostReport r;
  const auto& nodes = graph.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    CostRow row{n.name, n.spec.kind, shapes[i]};
    switch (n.spec.kind) {
      case LayerKind::Conv: {
        const Conv2dSpec& c = n.spec.conv;
        const std::int64_t taps = c.out_channels * c.in_channels * c.kernel * c.kernel;
        row.params = taps + (c.bias ? c.out_channels : 0);
        row.macs = taps * shapes[i].h * shapes[i].w * shapes[i].n;
        break;
      }
      case LayerKind::BatchNorm:
        row.params = 2 * n.out_channels;
        row.buffers = 2 * n.out_channels;
        break;
      case LayerKind::PRelu:
        row.params = n.out_channels;
        break;
      default:
        break;
    }
    r.params += row.params;
    r.buffers += row.buffers;
    r.macs += row.macs;
    r.rows.push_back(std::move(row));
  }
  return r;
}

namespace {

std::string shape_text(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

}  // namespace

std::string CostReport::table() const {
  std::size_t width = 5;
  for (const CostRow& row : rows) width = std::max(width, row.name.size());
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s  %-11s  %-16s  %12s  %10s  %16s\n", static_cast<int>(width), "layer", "kind", "output",
                "params", "buffers", "MACs");
  out += buf;
  for (const CostRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %-11s  %-16s  %12lld  %10lld  %16lld\n", static_cast<int>(width), row.name.c_str(),
                  to_string(row.kind), shape_text(row.output).c_str(), static_cast<long long>(row.params),
                  static_cast<long long>(row.buffers), static_cast<long long>(row.macs));
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "\nparams    %lld (%.3f M)\nbuffers   %lld (BN running stats; %.3f M with params)\nMACs      %lld (%.3f G)\nFLOPs     %lld (%.3f G, 2 x MACs)\n",
                static_cast<long long>(params), params / 1e6, static_cast<long long>(buffers), (params + buffers) / 1e6,
                static_cast<long long>(macs), macs / 1e9, static_cast<long long>(flops()), flops() / 1e9);
  out += buf;
  return out;
}

std::string CostReport::csv() const {
  std::string out = "name,kind,n,c,h,w,params,buffers,macs\n";
  char buf[512];
  for (const CostRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%lld,%lld,%lld,%lld,%lld,%lld,%lld\n", row.name.c_str(), to_string(row.kind),
                  static_cast<long long>(row.output.n), static_cast<long long>(row.output.c),
                  static_cast<long long>(row.output.h), static_cast<long long>(row.output.w),
                  static_cast<long long>(row.params), static_cast<long long>(row.buffers), static_cast<long long>(row.macs));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "total,,,,,,%lld,%lld,%lld\n", static_cast<long long>(params), static_cast<long long>(buffers),
                static_cast<long long>(macs));
  out += buf;
  return out;
}

}  // namespace ddcm
