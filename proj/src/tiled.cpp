#include "ddcm/tiled.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddcm/error.hpp"
#include "ddcm/ops.hpp"

namespace ddcm {

std::vector<std::int64_t> plan_axis(std::int64_t length, std::int64_t window, std::int64_t stride) {
  if (window < 1 || stride < 1) throw ConfigError("plan: window and stride must be >= 1");
  if (window > length) {
    throw ConfigError("plan: window " + std::to_string(window) + " exceeds image side " + std::to_string(length));
  }
  std::vector<std::int64_t> starts;
  for (std::int64_t p = 0; p + window <= length; p += stride) starts.push_back(p);
  if (starts.back() != length - window) starts.push_back(length - window);
  return starts;
}

std::vector<Window> plan_windows(std::int64_t h, std::int64_t w, std::int64_t window, std::int64_t stride) {
  const auto ys = plan_axis(h, window, stride);
  const auto xs = plan_axis(w, window, stride);
  std::vector<Window> out;
  out.reserve(ys.size() * xs.size());
  for (std::int64_t y : ys)
    for (std::int64_t x : xs) out.push_back({y, x});
  return out;
}

WindowModel window_model(ModelGraph& model) {
  return [&model](const Tensor& x) { return model.forward(x, Mode::Eval); };
}

Tensor flip(const Tensor& x, bool horizontal, bool vertical) {
  Tensor out = horizontal ? flip(x, FlipAxis::Horizontal) : x.clone();
  return vertical ? flip(out, FlipAxis::Vertical) : out;
}

namespace {

Tensor crop(const Tensor& image, const Window& win, std::int64_t size) {
  const Shape s = image.shape();
  Tensor out(Shape{1, s.c, size, size});
  auto in = image.values();
  auto o = out.mutable_values();
  for (std::int64_t c = 0; c < s.c; ++c)
    for (std::int64_t i = 0; i < size; ++i)
      for (std::int64_t j = 0; j < size; ++j)
        o[static_cast<std::size_t>((c * size + i) * size + j)] =
            in[static_cast<std::size_t>((c * s.h + win.y + i) * s.w + win.x + j)];
  return out;
}

}  // namespace

Prediction predict_image(const WindowModel& model, const Tensor& image, const TiledOptions& opt) {
  const Shape s = image.shape();
  if (s.n != 1) throw ShapeError("predict_image", "n", 1, s.n);
  const std::vector<Window> windows = plan_windows(s.h, s.w, opt.window, opt.stride);
  const std::int64_t plane = s.h * s.w;
  const std::int64_t size = opt.window;

  struct Flip {
    bool h, v;
  };
  std::vector<Flip> transforms{{false, false}};
  if (opt.tta) transforms = {{false, false}, {true, false}, {false, true}, {true, true}};

  std::int64_t classes = 0;
  std::vector<double> sum;
  std::vector<std::int32_t> hits(static_cast<std::size_t>(plane), 0);
  std::vector<double> p;
  for (const Window& win : windows) {
    const Tensor patch = crop(image, win, size);
    for (const Flip& t : transforms) {
      const Tensor scores = flip(model(flip(patch, t.h, t.v)), t.h, t.v);
      const Shape os = scores.shape();
      if (os.n != 1 || os.h != size || os.w != size) throw ShapeError("predict_image: model output does not match the window", "h");
      if (classes == 0) {
        classes = os.c;
        sum.assign(static_cast<std::size_t>(classes * plane), 0.0);
        p.resize(static_cast<std::size_t>(classes));
      } else if (os.c != classes) {
        throw ShapeError("predict_image", "c", classes, os.c);
      }
      auto v = scores.values();
      const std::int64_t wp = size * size;
      for (std::int64_t i = 0; i < size; ++i)
        for (std::int64_t j = 0; j < size; ++j) {
          const std::int64_t q = i * size + j;
          double m = v[static_cast<std::size_t>(q)];
          for (std::int64_t c = 1; c < classes; ++c) m = std::max(m, static_cast<double>(v[static_cast<std::size_t>(c * wp + q)]));
          double z = 0.0;
          for (std::int64_t c = 0; c < classes; ++c) {
            p[static_cast<std::size_t>(c)] = std::exp(static_cast<double>(v[static_cast<std::size_t>(c * wp + q)]) - m);
            z += p[static_cast<std::size_t>(c)];
          }
          const std::int64_t dst = (win.y + i) * s.w + win.x + j;
          for (std::int64_t c = 0; c < classes; ++c) sum[static_cast<std::size_t>(c * plane + dst)] += p[static_cast<std::size_t>(c)] / z;
        }
    }
    for (std::int64_t i = 0; i < size; ++i)
      for (std::int64_t j = 0; j < size; ++j) ++hits[static_cast<std::size_t>((win.y + i) * s.w + win.x + j)];
  }

  Prediction out;
  out.probs = Tensor(Shape{1, classes, s.h, s.w});
  out.classes = LabelMap(1, s.h, s.w);
  auto pr = out.probs.mutable_values();
  const auto reps = static_cast<double>(transforms.size());
  for (std::int64_t q = 0; q < plane; ++q) {
    const double n = hits[static_cast<std::size_t>(q)] * reps;
    std::int64_t best = 0;
    for (std::int64_t c = 0; c < classes; ++c) {
      const double avg = sum[static_cast<std::size_t>(c * plane + q)] / n;
      pr[static_cast<std::size_t>(c * plane + q)] = static_cast<float>(avg);
      if (avg > sum[static_cast<std::size_t>(best * plane + q)] / n) best = c;
    }
    out.classes.values[static_cast<std::size_t>(q)] = static_cast<std::uint8_t>(best);
  }
  out.hits = std::move(hits);
  return out;
}

}  // namespace ddcm
