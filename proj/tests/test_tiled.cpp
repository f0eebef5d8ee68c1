#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ddcm/error.hpp"
#include "ddcm/model_zoo.hpp"
#include "ddcm/parallel.hpp"
#include "ddcm/tiled.hpp"
#include "test_support.hpp"

namespace ddcm {
namespace {

using testing::random_tensor;

TEST(PlanWindows, ThousandPixelsGivesSevenPerAxis) {
  const std::vector<std::int64_t> expect{0, 100, 200, 300, 400, 500, 552};
  EXPECT_EQ(plan_axis(1000, 448, 100), expect);
  const auto w = plan_windows(1000, 1000, 448, 100);
  ASSERT_EQ(w.size(), 49u);
  EXPECT_EQ(w.front(), (Window{0, 0}));
  EXPECT_EQ(w[1], (Window{0, 100}));
  EXPECT_EQ(w.back(), (Window{552, 552}));
}

TEST(PlanWindows, WindowEqualToImageIsOnePosition) {
  const auto w = plan_windows(448, 448, 448, 100);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], (Window{0, 0}));
}

TEST(PlanWindows, SixThousandPixels) {
  const auto a = plan_axis(6000, 448, 100);
  ASSERT_EQ(a.size(), 57u);
  for (std::size_t i = 0; i < 56; ++i) EXPECT_EQ(a[i], static_cast<std::int64_t>(i) * 100);
  EXPECT_EQ(a[55], 5500);
  EXPECT_EQ(a[56], 5552);
}

TEST(PlanWindows, ExactFitAddsNoExtraPosition) {
  const std::vector<std::int64_t> expect{0, 100, 200};
  EXPECT_EQ(plan_axis(648, 448, 100), expect);
}

TEST(PlanWindows, Errors) {
  EXPECT_THROW(plan_windows(400, 1000, 448, 100), ConfigError);
  EXPECT_THROW(plan_windows(1000, 1000, 448, 0), ConfigError);
}

WindowModel constant_model(std::vector<float> scores) {
  return [scores](const Tensor& x) {
    const Shape s = x.shape();
    Tensor out(Shape{1, static_cast<std::int64_t>(scores.size()), s.h, s.w});
    auto o = out.mutable_values();
    for (std::size_t c = 0; c < scores.size(); ++c)
      for (std::int64_t i = 0; i < s.h * s.w; ++i) o[c * static_cast<std::size_t>(s.h * s.w) + i] = scores[c];
    return out;
  };
}

TEST(PredictImage, HitCountsMatchBruteForceMembership) {
  const Tensor image(Shape{1, 1, 1000, 1000}, 0.5f);
  TiledOptions o;
  o.tta = false;
  const Prediction p = predict_image(constant_model({0.0f, 1.0f}), image, o);

  // Window starts enumerated independently, then every pixel counts the windows holding it.
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s <= 1000 - 448; s += 100) starts.push_back(s);
  starts.push_back(552);
  std::vector<int> axis(1000, 0);
  for (std::int64_t v = 0; v < 1000; ++v)
    for (std::int64_t s : starts) axis[v] += (v >= s && v < s + 448);
  int min_hits = 1 << 30;
  for (std::int64_t y = 0; y < 1000; ++y)
    for (std::int64_t x = 0; x < 1000; ++x) {
      const int h = p.hits[static_cast<std::size_t>(y * 1000 + x)];
      ASSERT_EQ(h, axis[y] * axis[x]) << y << "," << x;
      min_hits = std::min(min_hits, h);
    }
  EXPECT_GE(min_hits, 1);
  // Interior lower bound: ceil(448/100)^2 / 4.
  for (std::int64_t y = 448; y < 552; ++y)
    for (std::int64_t x = 448; x < 552; ++x) EXPECT_GE(p.hits[static_cast<std::size_t>(y * 1000 + x)] * 4, 25);
}

TEST(PredictImage, ConstantModelGivesConstantMapAndTiesGoLow) {
  const Tensor image(Shape{1, 3, 200, 260}, 0.1f);
  TiledOptions o{64, 48, true};
  const Prediction p = predict_image(constant_model({0.0f, 2.0f, 5.0f, 1.0f, 5.0f}), image, o);
  for (std::uint8_t c : p.classes.values) ASSERT_EQ(c, 2);
  // softmax of the constant scores, independent of overlap
  const double z = 1 + std::exp(2.0) + 2 * std::exp(5.0) + std::exp(1.0);
  for (std::int64_t i = 0; i < 200 * 260; i += 997) {
    EXPECT_NEAR(p.probs.at(0, 2, i / 260, i % 260), std::exp(5.0) / z, 1e-6);
    EXPECT_NEAR(p.probs.at(0, 0, i / 260, i % 260), 1.0 / z, 1e-6);
  }
}

// Scores are a fixed per-pixel function of the input bands, so the model commutes with flips.
Tensor pixelwise_scores(const Tensor& x) {
  const Shape s = x.shape();
  Tensor out(Shape{1, 4, s.h, s.w});
  auto o = out.mutable_values();
  const std::int64_t plane = s.h * s.w;
  for (std::int64_t q = 0; q < plane; ++q) {
    const float r = x.values()[static_cast<std::size_t>(q)];
    const float g = x.values()[static_cast<std::size_t>(plane + q)];
    o[static_cast<std::size_t>(q)] = 3 * r;
    o[static_cast<std::size_t>(plane + q)] = 2 * g - r;
    o[static_cast<std::size_t>(2 * plane + q)] = std::sin(7 * r * g);
    o[static_cast<std::size_t>(3 * plane + q)] = 1.0f - g;
  }
  return out;
}

TEST(PredictImage, FlipEquivariantModelIsUnchangedByTta) {
  std::mt19937_64 rng(8);
  const Tensor image = random_tensor({1, 2, 90, 120}, rng, 0.0f, 1.0f);
  TiledOptions o{40, 25, false};
  const Prediction plain = predict_image(pixelwise_scores, image, o);
  o.tta = true;
  const Prediction tta = predict_image(pixelwise_scores, image, o);
  for (std::int64_t i = 0; i < plain.probs.numel(); ++i) ASSERT_NEAR(plain.probs.values()[i], tta.probs.values()[i], 1e-6);
  EXPECT_EQ(plain.classes.values, tta.classes.values);
}

TEST(PredictImage, TtaMapsPredictionsBackToSourcePixels) {
  // Score depends on the position inside the crop, so each flip lands on the
  // mirrored column/row. With one window covering the image the average is the
  // mean softmax over the four reflections.
  const std::int64_t n = 8;
  auto positional = [](const Tensor& x) {
    const Shape s = x.shape();
    Tensor out(Shape{1, 2, s.h, s.w});
    for (std::int64_t i = 0; i < s.h; ++i)
      for (std::int64_t j = 0; j < s.w; ++j) out.mutable_values()[static_cast<std::size_t>(i * s.w + j)] = static_cast<float>(i + 2 * j) / 4.0f;
    return out;
  };
  const Prediction p = predict_image(positional, Tensor(Shape{1, 1, n, n}), {n, n, true});
  auto p0 = [](double score) { return std::exp(score) / (std::exp(score) + 1.0); };
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      const double expect = (p0((i + 2 * j) / 4.0) + p0((i + 2 * (n - 1 - j)) / 4.0) + p0((n - 1 - i + 2 * j) / 4.0) +
                             p0((n - 1 - i + 2 * (n - 1 - j)) / 4.0)) / 4.0;
      EXPECT_NEAR(p.probs.at(0, 0, i, j), expect, 1e-6);
    }
}

TEST(PredictImage, ModelProbabilitiesSumToOneAndThreadCountDoesNotMatter) {
  const int threads = num_threads();
  ModelGraph m = build_ddcm_r50(DdcmR50Spec::tiny(), 5);
  std::mt19937_64 rng(9);
  const Tensor image = random_tensor({1, 3, 80, 96}, rng, 0.0f, 1.0f);
  const TiledOptions o{48, 16, true};
  set_num_threads(1);
  const Prediction a = predict_image(window_model(m), image, o);
  set_num_threads(4);
  const Prediction b = predict_image(window_model(m), image, o);
  set_num_threads(threads);
  EXPECT_EQ(a.classes.values, b.classes.values);
  const std::int64_t plane = 80 * 96;
  for (std::int64_t q = 0; q < plane; ++q) {
    double sum = 0;
    for (std::int64_t c = 0; c < 6; ++c) {
      const float v = a.probs.values()[static_cast<std::size_t>(c * plane + q)];
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
      sum += v;
    }
    ASSERT_NEAR(sum, 1.0, 1e-5);
  }
}

TEST(PredictImage, RejectsMismatchedModelOutput) {
  auto shrink = [](const Tensor& x) { return Tensor(Shape{1, 2, x.shape().h / 2, x.shape().w / 2}); };
  EXPECT_THROW(predict_image(shrink, Tensor(Shape{1, 1, 32, 32}), {16, 16, false}), ShapeError);
}

TEST(Flip, InvolutionAndDirection) {
  Tensor x(Shape{1, 1, 2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor h = flip(x, true, false);
  EXPECT_EQ(std::vector<float>(h.values().begin(), h.values().end()), (std::vector<float>{3, 2, 1, 6, 5, 4}));
  const Tensor v = flip(x, false, true);
  EXPECT_EQ(std::vector<float>(v.values().begin(), v.values().end()), (std::vector<float>{4, 5, 6, 1, 2, 3}));
  const Tensor back = flip(flip(x, true, true), true, true);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(back.values()[i], x.values()[i]);
}

}  // namespace
}  // namespace ddcm
