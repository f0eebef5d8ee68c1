#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcm/graph.hpp"

namespace ddcm {

struct CostRow {
  std::string name;
  LayerKind kind = LayerKind::Input;
  Shape output;
  std::int64_t params = 0;   // trainable: conv weight/bias, BN gamma/beta, PReLU slope
  std::int64_t buffers = 0;  // BN running mean/var
  std::int64_t macs = 0;     // conv multiply-accumulates; every other layer counts 0
};

struct CostReport {
  std::vector<CostRow> rows;
  std::int64_t params = 0;
  std::int64_t buffers = 0;
  std::int64_t macs = 0;

  std::int64_t flops() const noexcept { return 2 * macs; }

  /// Per-layer table followed by totals in both conventions.
  std::string table() const;
  /// "name,kind,n,c,h,w,params,buffers,macs" rows and a final "total" row.
  std::string csv() const;
};

/// Static cost of `graph` for a (n, c, h, w) input. Dilation does not change the
/// tap count, so it does not change MACs.
CostReport count_cost(const ModelGraph& graph, const Shape& input);

}  // namespace ddcm
