#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ddcm/checkpoint.hpp"
#include "ddcm/error.hpp"
#include "ddcm/model_zoo.hpp"
#include "test_support.hpp"

namespace ddcm {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;
using testing::resnet50_trunc3_params;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ddcm_model_zoo_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Backbone, ResNetShapeAndStride) {
  const ModelGraph g = build_backbone({});
  const auto shapes = g.infer_shapes({1, 3, 256, 256});
  EXPECT_EQ(shapes.back(), (Shape{1, 1024, 16, 16}));
  EXPECT_EQ(BackboneSpec{}.out_channels(), 1024);
  EXPECT_EQ(BackboneSpec{}.out_stride(), 16);
}

TEST(Backbone, ResNetForwardShape) {
  ModelGraph g = build_backbone({}, 1);
  std::mt19937_64 rng(1);
  EXPECT_EQ(g.forward(random_tensor({1, 3, 64, 64}, rng), Mode::Eval).shape(), (Shape{1, 1024, 4, 4}));
}

TEST(Backbone, ResNetParameterCount) {
  const ModelGraph g = build_backbone({});
  EXPECT_EQ(g.trainable_count(), resnet50_trunc3_params());
  EXPECT_NEAR(static_cast<double>(g.trainable_count()), 8.55e6, 0.01 * 8.55e6);
}

TEST(Backbone, Tiny) {
  BackboneSpec spec{BackboneKind::Tiny};
  ModelGraph g = build_backbone(spec, 2);
  std::mt19937_64 rng(2);
  EXPECT_EQ(g.forward(random_tensor({1, 3, 64, 64}, rng), Mode::Eval).shape(), (Shape{1, 64, 4, 4}));
  EXPECT_EQ(spec.out_channels(), 64);
}

TEST(Backbone, ParseKind) {
  EXPECT_EQ(parse_backbone_kind("resnet50-trunc3"), BackboneKind::ResNet50Trunc3);
  EXPECT_EQ(parse_backbone_kind("tiny"), BackboneKind::Tiny);
  EXPECT_EQ(to_string(BackboneKind::Tiny), "tiny");
  EXPECT_THROW(parse_backbone_kind("resnet101"), ConfigError);
}

TEST(DdcmR50, FullResolutionLogProbabilities) {
  ModelGraph g = build_ddcm_r50({}, 3);
  std::mt19937_64 rng(3);
  const Tensor y = g.forward(random_tensor({1, 3, 256, 256}, rng), Mode::Eval);
  ASSERT_EQ(y.shape(), (Shape{1, 6, 256, 256}));
  for (std::int64_t i = 0; i < 256; i += 5)
    for (std::int64_t j = 0; j < 256; j += 7) {
      double s = 0;
      for (std::int64_t c = 0; c < 6; ++c) s += std::exp(static_cast<double>(y.at(0, c, i, j)));
      ASSERT_NEAR(s, 1.0, 1e-5);
    }
}

TEST(DdcmR50, ParameterCountNearTenMillion) {
  const ModelGraph g = build_ddcm_r50({});
  EXPECT_NEAR(static_cast<double>(g.trainable_count()), 9.99e6, 0.10 * 9.99e6);
}

TEST(DdcmR50, FusionWiring) {
  const ModelGraph g = build_ddcm_r50({});
  std::map<std::string, Shape> shapes;
  const auto all = g.infer_shapes({1, 3, 128, 128});
  for (std::size_t i = 0; i < all.size(); ++i) shapes[g.node(i).name] = all[i];
  EXPECT_EQ(shapes.at("encoder.pool"), (Shape{1, 3, 32, 32}));
  EXPECT_EQ(shapes.at("decoder.up"), (Shape{1, 18, 32, 32}));
  EXPECT_EQ(shapes.at("fusion"), (Shape{1, 21, 32, 32}));
  EXPECT_EQ(shapes.at("classifier"), (Shape{1, 6, 32, 32}));
  EXPECT_EQ(shapes.at("log_probs"), (Shape{1, 6, 128, 128}));
}

TEST(DdcmR50, ShapeLawForSizesDivisibleBySixteen) {
  const ModelGraph g = build_ddcm_r50(DdcmR50Spec::tiny(5));
  for (std::int64_t h : {16, 48, 80})
    for (std::int64_t w : {32, 64}) EXPECT_EQ(g.infer_shapes({2, 3, h, w}).back(), (Shape{2, 5, h, w}));
}

TEST(DdcmR50, BandMismatchAndBadSpec) {
  ModelGraph g = build_ddcm_r50(DdcmR50Spec::tiny(), 4);
  EXPECT_THROW(g.forward(Tensor({1, 4, 32, 32}), Mode::Eval), ShapeError);
  auto bad = DdcmR50Spec::tiny(1);
  EXPECT_THROW(build_ddcm_r50(bad), ConfigError);
  auto bands = DdcmR50Spec::tiny();
  bands.backbone.in_channels = 4;
  EXPECT_THROW(build_ddcm_r50(bands), ConfigError);
}

TEST(DdcmR50, EveryParameterReceivesGradient) {
  for (const auto& spec : {DdcmR50Spec::tiny(), DdcmR50Spec{}}) {
    ModelGraph g = build_ddcm_r50(spec, 5);
    // The encoder output is max-pooled right after its PReLU, so the slope only
    // sees gradient from windows that are entirely negative. Shift them there.
    for (const NamedTensor& p : g.parameters()) {
      if (p.name == "encoder.merge.bn.beta") {
        Tensor t = p.tensor;
        for (float& v : t.mutable_values()) v = -5.0f;
      }
    }
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({2, 3, 32, 32}, rng);
    Tape tape;
    {
      TapeScope scope(tape);
      const Tensor y = g.forward(x, Mode::Train);
      tape.backward(sum(mul(y, random_tensor(y.shape(), rng))));
    }
    for (const NamedTensor& p : g.trainable()) {
      double norm = 0;
      for (float v : p.tensor.grad()) norm += static_cast<double>(v) * v;
      EXPECT_GT(norm, 0.0) << p.name;
    }
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  ModelGraph a = build_ddcm_r50({}, 6);
  // Give BN buffers non-trivial values.
  std::mt19937_64 rng(6);
  a.forward(random_tensor({2, 3, 64, 64}, rng), Mode::Train);
  const fs::path path = temp_path("roundtrip.ckpt");
  save_checkpoint(a, path);

  ModelGraph b = build_ddcm_r50({}, 7);
  load_checkpoint(b, path);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(0, std::memcmp(pa[i].tensor.values().data(), pb[i].tensor.values().data(),
                             pa[i].tensor.values().size_bytes()))
        << pa[i].name;
  }
  const Tensor x = random_tensor({1, 3, 64, 64}, rng);
  const Tensor ya = a.forward(x, Mode::Eval);
  const Tensor yb = b.forward(x, Mode::Eval);
  EXPECT_EQ(0, std::memcmp(ya.values().data(), yb.values().data(), ya.values().size_bytes()));
}

TEST(Checkpoint, BackboneOnlyLoadLeavesDecoderAtInit) {
  ModelGraph src = build_ddcm_r50(DdcmR50Spec::tiny(), 8);
  const fs::path path = temp_path("backbone.ckpt");
  save_checkpoint(src, path, "backbone.");

  ModelGraph dst = build_ddcm_r50(DdcmR50Spec::tiny(), 9);
  const ModelGraph fresh = build_ddcm_r50(DdcmR50Spec::tiny(), 9);
  load_checkpoint(dst, path, {"backbone."});
  const auto ps = src.parameters();
  const auto pd = dst.parameters();
  const auto pf = fresh.parameters();
  int backbone = 0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const auto& expected = pd[i].name.starts_with("backbone.") ? ps[i] : pf[i];
    backbone += pd[i].name.starts_with("backbone.");
    EXPECT_TRUE(std::equal(pd[i].tensor.values().begin(), pd[i].tensor.values().end(),
                           expected.tensor.values().begin()))
        << pd[i].name;
  }
  EXPECT_GT(backbone, 0);
  // A backbone-only file is not a full checkpoint.
  EXPECT_THROW(load_checkpoint(dst, path), FormatError);
}

TEST(Checkpoint, MismatchListsEveryOffender) {
  ModelGraph a = build_ddcm_r50(DdcmR50Spec::tiny(6), 10);
  const fs::path path = temp_path("six.ckpt");
  save_checkpoint(a, path);
  ModelGraph b = build_ddcm_r50(DdcmR50Spec::tiny(4), 10);
  const auto before = b.parameters().back().tensor.values()[0];
  try {
    load_checkpoint(b, path);
    FAIL();
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("classifier.weight"), std::string::npos);
    EXPECT_NE(msg.find("classifier.bias"), std::string::npos);
  }
  EXPECT_EQ(b.parameters().back().tensor.values()[0], before);
}

TEST(Checkpoint, CorruptedMagicIsFormatError) {
  ModelGraph a = build_ddcm_r50(DdcmR50Spec::tiny(), 11);
  const fs::path path = temp_path("corrupt.ckpt");
  save_checkpoint(a, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  EXPECT_THROW(load_checkpoint(a, path), FormatError);
  std::ofstream(path, std::ios::binary | std::ios::trunc) << "DDCM";
  EXPECT_THROW(load_checkpoint(a, path), FormatError);
}

}  // namespace
}  // namespace ddcm
