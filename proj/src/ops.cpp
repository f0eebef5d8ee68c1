#include "ddcm/ops.hpp"

#include <algorithm>
#include <string>

#include "ddcm/autodiff.hpp"
#include "ddcm/error.hpp"

namespace ddcm {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n) throw ShapeError(op, "n", sa.n, sb.n);
  if (sa.c != sb.c) throw ShapeError(op, "c", sa.c, sb.c);
  if (sa.h != sb.h) throw ShapeError(op, "h", sa.h, sb.h);
  if (sa.w != sb.w) throw ShapeError(op, "w", sa.w, sb.w);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  detail::check_finite(out, "add");

  if (Tape* tape = detail::recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out] {
      if (!out.has_grad()) return;
      if (a.requires_grad()) detail::accumulate(a.grad_accumulator(), out.grad());
      if (b.requires_grad()) detail::accumulate(b.grad_accumulator(), out.grad());
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  detail::check_finite(out, "mul");

  if (Tape* tape = detail::recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out] {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        auto bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        auto av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, float factor) {
  Tensor out(x.shape());
  auto o = out.mutable_values();
  auto xv = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * factor;
  detail::check_finite(out, "scale");

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, factor] {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gx = x.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  auto o = out.mutable_values();
  auto xv = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] > 0.0f ? xv[i] : 0.0f;

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out] {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto xv = x.values();
      auto gx = x.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > 0.0f) gx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (float v : x.values()) total += v;
  Tensor out = Tensor::scalar(static_cast<float>(total));
  detail::check_finite(out, "sum");

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out] {
      if (!out.has_grad()) return;
      const float g = out.grad()[0];
      for (float& v : x.grad_accumulator()) v += g;
    });
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs", "c");
  const Shape first = parts.front().shape();
  std::int64_t channels = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.n != first.n) throw ShapeError("concat_channels", "n", first.n, s.n);
    if (s.h != first.h) throw ShapeError("concat_channels", "h", first.h, s.h);
    if (s.w != first.w) throw ShapeError("concat_channels", "w", first.w, s.w);
    channels += s.c;
  }
  const Shape out_shape{first.n, channels, first.h, first.w};
  Tensor out(out_shape);
  auto o = out.mutable_values();
  const std::int64_t plane = first.plane();
  for (std::int64_t n = 0; n < first.n; ++n) {
    std::int64_t c0 = 0;
    for (const Tensor& p : parts) {
      const std::int64_t block = p.shape().c * plane;
      auto src = p.values().subspan(static_cast<std::size_t>(n * block), static_cast<std::size_t>(block));
      std::copy(src.begin(), src.end(), o.begin() + (n * channels + c0) * plane);
      c0 += p.shape().c;
    }
  }

  if (Tape* tape = detail::recording_tape(parts)) {
    out.set_requires_grad(true);
    tape->record([parts, out, channels, plane] {
      if (!out.has_grad()) return;
      auto g = out.grad();
      const std::int64_t batch = out.shape().n;
      std::int64_t c0 = 0;
      for (const Tensor& p : parts) {
        const std::int64_t block = p.shape().c * plane;
        if (p.requires_grad()) {
          auto gp = p.grad_accumulator();
          for (std::int64_t n = 0; n < batch; ++n) {
            detail::accumulate(gp.subspan(static_cast<std::size_t>(n * block), static_cast<std::size_t>(block)),
                               g.subspan(static_cast<std::size_t>((n * channels + c0) * plane),
                                         static_cast<std::size_t>(block)));
          }
        }
        c0 += p.shape().c;
      }
    });
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) { return concat_channels(std::vector<Tensor>{a, b}); }

Tensor slice_channels(const Tensor& x, std::int64_t begin, std::int64_t count) {
  const Shape& s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + std::to_string(s.c) + " channels",
                     "c");
  }
  const Shape out_shape{s.n, count, s.h, s.w};
  Tensor out(out_shape);
  auto o = out.mutable_values();
  auto xv = x.values();
  const std::int64_t plane = s.plane();
  for (std::int64_t n = 0; n < s.n; ++n) {
    auto first = xv.begin() + (n * s.c + begin) * plane;
    std::copy(first, first + count * plane, o.begin() + n * count * plane);
  }

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, begin, count, plane] {
      if (!out.has_grad()) return;
      const Shape& s = x.shape();
      auto g = out.grad();
      auto gx = x.grad_accumulator();
      for (std::int64_t n = 0; n < s.n; ++n) {
        detail::accumulate(gx.subspan(static_cast<std::size_t>((n * s.c + begin) * plane),
                                      static_cast<std::size_t>(count * plane)),
                           g.subspan(static_cast<std::size_t>(n * count * plane), static_cast<std::size_t>(count * plane)));
      }
    });
  }
  return out;
}

Tensor flip(const Tensor& x, FlipAxis axis) {
  const Shape& s = x.shape();
  Tensor out(s);
  auto o = out.mutable_values();
  auto xv = x.values();
  const std::int64_t planes = s.n * s.c;
  for (std::int64_t p = 0; p < planes; ++p) {
    const std::int64_t base = p * s.plane();
    for (std::int64_t y = 0; y < s.h; ++y) {
      const std::int64_t sy = axis == FlipAxis::Vertical ? s.h - 1 - y : y;
      const float* src = xv.data() + base + sy * s.w;
      float* dst = o.data() + base + y * s.w;
      if (axis == FlipAxis::Horizontal) {
        std::reverse_copy(src, src + s.w, dst);
      } else {
        std::copy(src, src + s.w, dst);
      }
    }
  }
  return out;
}

}  // namespace ddcm
