#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ddcm/dataset.hpp"
#include "ddcm/graph.hpp"

namespace ddcm {

struct Window {
  std::int64_t y = 0;
  std::int64_t x = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

/// Window starts along one axis: multiples of `stride`, plus `length - window`
/// when the grid does not land on it. Sorted, no duplicates.
std::vector<std::int64_t> plan_axis(std::int64_t length, std::int64_t window, std::int64_t stride);

/// Row-major product of the two axis plans. ConfigError if the window exceeds
/// either side or window/stride are not positive.
std::vector<Window> plan_windows(std::int64_t h, std::int64_t w, std::int64_t window, std::int64_t stride);

/// Maps a (1, bands, window, window) crop to (1, classes, window, window) scores.
/// Scores go through a channel softmax, so logits and log-probabilities both work.
using WindowModel = std::function<Tensor(const Tensor&)>;

/// Eval-mode forward of `model`.
WindowModel window_model(ModelGraph& model);

struct TiledOptions {
  std::int64_t window = 448;
  std::int64_t stride = 100;
  /// Identity, h-flip, v-flip and hv-flip per window; identity only when false.
  bool tta = true;
};

struct Prediction {
  Tensor probs;   // (1, classes, h, w), averaged over every window and transform
  LabelMap classes;  // (1, h, w) argmax, ties to the lower index
  std::vector<std::int32_t> hits;  // windows covering each pixel, row-major
};

/// Slides windows over `image` (1, bands, h, w), runs the model on every flip of
/// each crop, maps probabilities back and averages them per pixel.
Prediction predict_image(const WindowModel& model, const Tensor& image, const TiledOptions& options = {});

/// (1, C, h, w) copy mirrored left-right and/or top-bottom.
Tensor flip(const Tensor& x, bool horizontal, bool vertical);

}  // namespace ddcm
