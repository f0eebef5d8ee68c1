#include <gtest/gtest.h>

#include <cmath>

#include "ddcm/cost.hpp"
#include "ddcm/model_zoo.hpp"
#include "test_support.hpp"

namespace ddcm {
namespace {

using testing::resnet50_trunc3_params;

ModelGraph single_conv(const Conv2dSpec& spec) {
  ModelGraph g;
  g.conv(g.input(spec.in_channels), spec, "conv");
  return g;
}

/// Conv MACs of the ResNet-50 trunk through conv4_x on a square side `s`
/// (stem at s/2, stages at s/4, s/8, s/16; the stride sits on the 3x3 conv).
std::int64_t resnet50_trunc3_macs(std::int64_t s) {
  auto sq = [](std::int64_t v) { return v * v; };
  std::int64_t total = 3 * 64 * 49 * sq(s / 2);
  std::int64_t in = 64;
  std::int64_t side = s / 4;
  const std::int64_t blocks[3] = {3, 4, 6};
  const std::int64_t widths[3] = {64, 128, 256};
  for (int st = 0; st < 3; ++st) {
    const std::int64_t w = widths[st];
    const std::int64_t out = 4 * w;
    for (std::int64_t b = 0; b < blocks[st]; ++b) {
      const std::int64_t in_side = side;
      if (st > 0 && b == 0) side /= 2;
      total += in * w * sq(in_side);
      total += 9 * w * w * sq(side);
      total += w * out * sq(side);
      if (b == 0) total += in * out * sq(side);
      in = out;
    }
  }
  return total;
}

TEST(Cost, SingleConvByHand) {
  const CostReport r = count_cost(single_conv(Conv2dSpec::same(3, 64, 3, 1, true)), {1, 3, 256, 256});
  EXPECT_EQ(r.params, 1792);
  EXPECT_EQ(r.macs, 113246208);
  EXPECT_EQ(r.flops(), 2 * 113246208LL);
  EXPECT_EQ(r.buffers, 0);
}

TEST(Cost, PointwiseOnSinglePixel) {
  for (std::int64_t c : {1, 7, 64}) {
    const CostReport r = count_cost(single_conv(Conv2dSpec::same(c, c, 1, 1, true)), {1, c, 1, 1});
    EXPECT_EQ(r.params, c * c + c);
    EXPECT_EQ(r.macs, c * c);
  }
}

TEST(Cost, DilationLeavesMacsAlone) {
  const CostReport a = count_cost(single_conv(Conv2dSpec::same(4, 8, 3, 1)), {1, 4, 32, 32});
  const CostReport b = count_cost(single_conv(Conv2dSpec::same(4, 8, 3, 5)), {1, 4, 32, 32});
  EXPECT_EQ(a.macs, b.macs);
  EXPECT_EQ(a.params, b.params);
}

TEST(Cost, DoublingHeightDoublesMacs) {
  const ModelGraph g = build_ddcm_r50({});
  const CostReport a = count_cost(g, {1, 3, 256, 256});
  const CostReport b = count_cost(g, {1, 3, 512, 256});
  EXPECT_EQ(b.macs, 2 * a.macs);
  EXPECT_EQ(b.params, a.params);
}

TEST(Cost, TotalsAreColumnSumsAndMatchStoredTensors) {
  const ModelGraph g = build_ddcm_r50({});
  const CostReport r = count_cost(g, {1, 3, 256, 256});
  std::int64_t p = 0, b = 0, m = 0;
  for (const CostRow& row : r.rows) {
    p += row.params;
    b += row.buffers;
    m += row.macs;
  }
  EXPECT_EQ(p, r.params);
  EXPECT_EQ(b, r.buffers);
  EXPECT_EQ(m, r.macs);
  EXPECT_EQ(r.params, g.trainable_count());
  std::int64_t stored = 0;
  for (const NamedTensor& t : g.parameters()) stored += t.tensor.numel();
  EXPECT_EQ(r.params + r.buffers, stored);
}

TEST(Cost, BackboneMatchesHandCount) {
  const CostReport r = count_cost(build_backbone({}), {1, 3, 256, 256});
  EXPECT_EQ(r.params, resnet50_trunc3_params());
  EXPECT_NEAR(static_cast<double>(r.params), 8.55e6, 0.01 * 8.55e6);
  EXPECT_EQ(r.macs, resnet50_trunc3_macs(256));
}

TEST(Cost, DdcmR50NearPublishedFigures) {
  const CostReport r = count_cost(build_ddcm_r50({}), {1, 3, 256, 256});
  EXPECT_NEAR(r.params / 1e6, 9.99, 0.999);
  const double macs_g = static_cast<double>(r.macs) / 1e9;
  const double flops_g = static_cast<double>(r.flops()) / 1e9;
  // MAC counting lands closer; 2 x MACs would be about twice the figure.
  EXPECT_LT(std::abs(macs_g - 4.86), std::abs(flops_g - 4.86));
  EXPECT_NEAR(macs_g, 4.86, 0.15 * 4.86);
}

TEST(Cost, TableAndCsv) {
  const CostReport r = count_cost(single_conv(Conv2dSpec::same(3, 64, 3, 1, true)), {1, 3, 256, 256});
  const std::string csv = r.csv();
  EXPECT_NE(csv.find("conv,conv,1,64,256,256,1792,0,113246208\n"), std::string::npos);
  EXPECT_NE(csv.find("total,,,,,,1792,0,113246208\n"), std::string::npos);
  const std::string table = r.table();
  EXPECT_NE(table.find("113246208"), std::string::npos);
  EXPECT_NE(table.find("FLOPs"), std::string::npos);
}

}  // namespace
}  // namespace ddcm
