#include "ddcm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <cblas.h>

#include "ddcm/autodiff.hpp"
#include "ddcm/error.hpp"

namespace ddcm {

// ---------------------------------------------------------------------------
// conv2d

Conv2dSpec Conv2dSpec::same(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                            std::int64_t dilation, bool bias) {
  Conv2dSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.kernel = kernel;
  spec.dilation = dilation;
  spec.stride = 1;
  spec.padding = (effective_kernel(kernel, dilation) - 1) / 2;
  spec.bias = bias;
  return spec;
}

void Conv2dSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("conv2d: channel counts must be >= 1");
  if (kernel < 1) throw ConfigError("conv2d: kernel must be >= 1");
  if (dilation < 1) throw ConfigError("conv2d: dilation must be a positive integer");
  if (stride < 1) throw ConfigError("conv2d: stride must be a positive integer");
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
}

Shape Conv2dSpec::output_shape(const Shape& input) const {
  validate();
  if (input.c != in_channels) throw ShapeError("conv2d", "c", in_channels, input.c);
  const std::int64_t e = effective();
  const std::int64_t span_h = input.h + 2 * padding - e;
  const std::int64_t span_w = input.w + 2 * padding - e;
  if (span_h < 0) throw ShapeError("conv2d: non-positive output height for input " + input.str(), "h");
  if (span_w < 0) throw ShapeError("conv2d: non-positive output width for input " + input.str(), "w");
  return {input.n, out_channels, span_h / stride + 1, span_w / stride + 1};
}

namespace {

struct ConvGeometry {
  std::int64_t in_c, in_h, in_w;
  std::int64_t out_h, out_w;
  std::int64_t kernel, dilation, stride, padding;

  std::int64_t rows() const { return in_c * kernel * kernel; }
  std::int64_t cols() const { return out_h * out_w; }
  bool pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

// Valid output-column range [lo, hi) for which ox * stride + offset lands inside [0, width).
void valid_range(std::int64_t offset, std::int64_t stride, std::int64_t width, std::int64_t out_w,
                 std::int64_t& lo, std::int64_t& hi) {
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const std::int64_t last = width - 1 - offset;  // largest ox*stride allowed
  hi = last < 0 ? 0 : std::min(out_w, last / stride + 1);
  lo = std::min(lo, hi);
}

// col[(ic*k + ky)*k + kx][oy*out_w + ox] = x[ic][oy*s + ky*r - p][ox*s + kx*r - p], zero outside.
void im2col(const float* x, const ConvGeometry& g, float* col) {
  const std::int64_t k = g.kernel;
  const std::int64_t cols = g.cols();
  for (std::int64_t ic = 0; ic < g.in_c; ++ic) {
    const float* plane = x + ic * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      const std::int64_t dy = ky * g.dilation - g.padding;
      for (std::int64_t kx = 0; kx < k; ++kx) {
        const std::int64_t dx = kx * g.dilation - g.padding;
        float* dst = col + ((ic * k + ky) * k + kx) * cols;
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        valid_range(dx, g.stride, g.in_w, g.out_w, lo, hi);
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          float* d = dst + oy * g.out_w;
          const std::int64_t iy = oy * g.stride + dy;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(d, d + g.out_w, 0.0f);
            continue;
          }
          const float* row = plane + iy * g.in_w;
          std::fill(d, d + lo, 0.0f);
          if (g.stride == 1) {
            std::copy(row + lo + dx, row + hi + dx, d + lo);
          } else {
            for (std::int64_t ox = lo; ox < hi; ++ox) d[ox] = row[ox * g.stride + dx];
          }
          std::fill(d + hi, d + g.out_w, 0.0f);
        }
      }
    }
  }
}

// Adjoint of im2col: dx[...] += col[...].
void col2im(const float* col, const ConvGeometry& g, float* dx) {
  const std::int64_t k = g.kernel;
  const std::int64_t cols = g.cols();
  for (std::int64_t ic = 0; ic < g.in_c; ++ic) {
    float* plane = dx + ic * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      const std::int64_t dy = ky * g.dilation - g.padding;
      for (std::int64_t kx = 0; kx < k; ++kx) {
        const std::int64_t dx_off = kx * g.dilation - g.padding;
        const float* src = col + ((ic * k + ky) * k + kx) * cols;
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        valid_range(dx_off, g.stride, g.in_w, g.out_w, lo, hi);
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride + dy;
          if (iy < 0 || iy >= g.in_h) continue;
          const float* s = src + oy * g.out_w;
          float* row = plane + iy * g.in_w;
          for (std::int64_t ox = lo; ox < hi; ++ox) row[ox * g.stride + dx_off] += s[ox];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Conv2dSpec& spec, const Tensor& weight, const Tensor& bias) {
  const Shape in = x.shape();
  const Shape out_shape = spec.output_shape(in);
  if (weight.shape() != spec.weight_shape()) {
    throw ShapeError("conv2d: weight shape " + weight.shape().str() + " does not match " +
                         spec.weight_shape().str(),
                     "weight");
  }
  if (spec.bias && (!bias.defined() || bias.shape() != spec.bias_shape())) {
    throw ShapeError("conv2d: bias must be " + spec.bias_shape().str(), "bias");
  }
  const bool use_bias = spec.bias && bias.defined();

  const ConvGeometry g{in.c, in.h, in.w, out_shape.h, out_shape.w,
                       spec.kernel, spec.dilation, spec.stride, spec.padding};
  const auto oc = static_cast<int>(spec.out_channels);
  const auto rows = static_cast<int>(g.rows());
  const auto cols = static_cast<int>(g.cols());

  Tensor out(out_shape);
  auto o = out.mutable_values();
  auto xv = x.values();
  auto wv = weight.values();
  std::vector<float> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows() * g.cols()));
  for (std::int64_t n = 0; n < in.n; ++n) {
    const float* xn = xv.data() + n * in.c * in.plane();
    float* on = o.data() + n * out_shape.c * out_shape.plane();
    if (use_bias) {
      auto bv = bias.values();
      for (int c = 0; c < oc; ++c) std::fill(on + c * cols, on + (c + 1) * cols, bv[static_cast<std::size_t>(c)]);
    }
    const float* b_mat = xn;
    if (!g.pointwise()) {
      im2col(xn, g, col.data());
      b_mat = col.data();
    }
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, oc, cols, rows, 1.0f, wv.data(), rows, b_mat, cols,
                use_bias ? 1.0f : 0.0f, on, cols);
  }
  detail::check_finite(out, "conv2d");

  if (Tape* tape = detail::recording_tape({&x, &weight, use_bias ? &bias : nullptr})) {
    out.set_requires_grad(true);
    tape->record([x, weight, bias, out, g, use_bias] {
      if (!out.has_grad()) return;
      const Shape in = x.shape();
      const Shape os = out.shape();
      const auto oc = static_cast<int>(os.c);
      const auto rows = static_cast<int>(g.rows());
      const auto cols = static_cast<int>(g.cols());
      auto gy = out.grad();
      auto xv = x.values();
      auto wv = weight.values();
      std::vector<float> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows() * g.cols()));

      if (use_bias && bias.requires_grad()) {
        auto gb = bias.grad_accumulator();
        for (std::int64_t n = 0; n < os.n; ++n) {
          for (int c = 0; c < oc; ++c) {
            const float* gp = gy.data() + (n * os.c + c) * cols;
            double s = 0.0;
            for (int i = 0; i < cols; ++i) s += gp[i];
            gb[static_cast<std::size_t>(c)] += static_cast<float>(s);
          }
        }
      }
      for (std::int64_t n = 0; n < os.n; ++n) {
        const float* gyn = gy.data() + n * os.c * os.plane();
        const float* xn = xv.data() + n * in.c * in.plane();
        if (weight.requires_grad()) {
          const float* b_mat = xn;
          if (!g.pointwise()) {
            im2col(xn, g, col.data());
            b_mat = col.data();
          }
          cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, oc, rows, cols, 1.0f, gyn, cols, b_mat, cols, 1.0f,
                      weight.grad_accumulator().data(), rows);
        }
        if (x.requires_grad()) {
          float* gxn = x.grad_accumulator().data() + n * in.c * in.plane();
          if (g.pointwise()) {
            cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, rows, cols, oc, 1.0f, wv.data(), rows, gyn, cols,
                        1.0f, gxn, cols);
          } else {
            cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, rows, cols, oc, 1.0f, wv.data(), rows, gyn, cols,
                        0.0f, col.data(), cols);
            col2im(col.data(), g, gxn);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// batch_norm

BatchNormState BatchNormState::create(std::int64_t channels) {
  BatchNormState st;
  const Shape s{1, channels, 1, 1};
  st.gamma = Tensor(s, 1.0f);
  st.gamma.set_requires_grad(true);
  st.beta = Tensor(s, 0.0f);
  st.beta.set_requires_grad(true);
  st.running_mean = Tensor(s, 0.0f);
  st.running_var = Tensor(s, 1.0f);
  return st;
}

Tensor batch_norm(const Tensor& x, BatchNormState& state, Mode mode) {
  const Shape s = x.shape();
  if (s.c != state.channels()) throw ShapeError("batch_norm", "c", state.channels(), s.c);
  const std::int64_t count = s.n * s.plane();
  if (mode == Mode::Train && count == 1) {
    throw NumericError("batch_norm: train mode needs more than one value per channel (n*h*w == 1)");
  }

  const auto channels = static_cast<std::size_t>(s.c);
  std::vector<float> mean(channels);
  std::vector<float> invstd(channels);
  auto xv = x.values();
  if (mode == Mode::Train) {
    auto rm = state.running_mean.mutable_values();
    auto rv = state.running_var.mutable_values();
    for (std::int64_t c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const float* p = xv.data() + (n * s.c + c) * s.plane();
        for (std::int64_t i = 0; i < s.plane(); ++i) acc += p[i];
      }
      const double mu = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const float* p = xv.data() + (n * s.c + c) * s.plane();
        for (std::int64_t i = 0; i < s.plane(); ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      const auto ci = static_cast<std::size_t>(c);
      mean[ci] = static_cast<float>(mu);
      invstd[ci] = static_cast<float>(1.0 / std::sqrt(var + state.eps));
      const double unbiased = sq / static_cast<double>(count - 1);
      rm[ci] = static_cast<float>((1.0 - state.momentum) * rm[ci] + state.momentum * mu);
      rv[ci] = static_cast<float>((1.0 - state.momentum) * rv[ci] + state.momentum * unbiased);
    }
  } else {
    auto rm = state.running_mean.values();
    auto rv = state.running_var.values();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      invstd[c] = static_cast<float>(1.0 / std::sqrt(static_cast<double>(rv[c]) + state.eps));
    }
  }

  // xhat is kept for backward.
  auto xhat = std::make_shared<std::vector<float>>(xv.size());
  Tensor out(s);
  auto o = out.mutable_values();
  auto gamma = state.gamma.values();
  auto beta = state.beta.values();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const std::int64_t base = (n * s.c + c) * s.plane();
      for (std::int64_t i = 0; i < s.plane(); ++i) {
        const auto idx = static_cast<std::size_t>(base + i);
        const float xh = (xv[idx] - mean[ci]) * invstd[ci];
        (*xhat)[idx] = xh;
        o[idx] = gamma[ci] * xh + beta[ci];
      }
    }
  }
  detail::check_finite(out, "batch_norm");

  Tensor g_t = state.gamma;
  Tensor b_t = state.beta;
  if (Tape* tape = detail::recording_tape({&x, &g_t, &b_t})) {
    out.set_requires_grad(true);
    tape->record([x, g_t, b_t, out, xhat, invstd = std::move(invstd), mode] {
      if (!out.has_grad()) return;
      const Shape s = x.shape();
      const auto count = static_cast<double>(s.n * s.plane());
      auto gy = out.grad();
      auto gamma = g_t.values();
      for (std::int64_t c = 0; c < s.c; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::int64_t n = 0; n < s.n; ++n) {
          const std::int64_t base = (n * s.c + c) * s.plane();
          for (std::int64_t i = 0; i < s.plane(); ++i) {
            const auto idx = static_cast<std::size_t>(base + i);
            sum_dy += gy[idx];
            sum_dy_xhat += static_cast<double>(gy[idx]) * (*xhat)[idx];
          }
        }
        if (g_t.requires_grad()) g_t.grad_accumulator()[ci] += static_cast<float>(sum_dy_xhat);
        if (b_t.requires_grad()) b_t.grad_accumulator()[ci] += static_cast<float>(sum_dy);
        if (!x.requires_grad()) continue;
        auto gx = x.grad_accumulator();
        const double k = static_cast<double>(gamma[ci]) * invstd[ci];
        for (std::int64_t n = 0; n < s.n; ++n) {
          const std::int64_t base = (n * s.c + c) * s.plane();
          for (std::int64_t i = 0; i < s.plane(); ++i) {
            const auto idx = static_cast<std::size_t>(base + i);
            if (mode == Mode::Train) {
              gx[idx] += static_cast<float>(
                  k * (gy[idx] - sum_dy / count - (*xhat)[idx] * sum_dy_xhat / count));
            } else {
              gx[idx] += static_cast<float>(k * gy[idx]);
            }
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// prelu

PReluState PReluState::create(std::int64_t channels, float init) {
  PReluState st;
  st.slope = Tensor(Shape{1, channels, 1, 1}, init);
  st.slope.set_requires_grad(true);
  return st;
}

Tensor prelu(const Tensor& x, const PReluState& state) {
  const Shape s = x.shape();
  const Tensor& slope = state.slope;
  if (slope.shape().c != s.c) throw ShapeError("prelu", "c", slope.shape().c, s.c);
  Tensor out(s);
  auto o = out.mutable_values();
  auto xv = x.values();
  auto a = slope.values();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float ac = a[static_cast<std::size_t>(c)];
      const std::int64_t base = (n * s.c + c) * s.plane();
      for (std::int64_t i = base; i < base + s.plane(); ++i) {
        const float v = xv[static_cast<std::size_t>(i)];
        o[static_cast<std::size_t>(i)] = v >= 0.0f ? v : ac * v;
      }
    }
  }
  detail::check_finite(out, "prelu");

  if (Tape* tape = detail::recording_tape({&x, &slope})) {
    out.set_requires_grad(true);
    tape->record([x, slope, out] {
      if (!out.has_grad()) return;
      const Shape s = x.shape();
      auto gy = out.grad();
      auto xv = x.values();
      auto a = slope.values();
      for (std::int64_t c = 0; c < s.c; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        double ga = 0.0;
        for (std::int64_t n = 0; n < s.n; ++n) {
          const std::int64_t base = (n * s.c + c) * s.plane();
          for (std::int64_t i = base; i < base + s.plane(); ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (xv[idx] < 0.0f) ga += static_cast<double>(gy[idx]) * xv[idx];
          }
        }
        if (slope.requires_grad()) slope.grad_accumulator()[ci] += static_cast<float>(ga);
        if (!x.requires_grad()) continue;
        auto gx = x.grad_accumulator();
        for (std::int64_t n = 0; n < s.n; ++n) {
          const std::int64_t base = (n * s.c + c) * s.plane();
          for (std::int64_t i = base; i < base + s.plane(); ++i) {
            const auto idx = static_cast<std::size_t>(i);
            gx[idx] += xv[idx] >= 0.0f ? gy[idx] : a[ci] * gy[idx];
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// max_pool

Shape max_pool_shape(const Shape& s, std::int64_t kernel, std::int64_t stride, std::int64_t padding) {
  if (kernel < 1 || stride < 1) throw ConfigError("max_pool: kernel and stride must be >= 1");
  if (padding < 0 || padding >= kernel) throw ConfigError("max_pool: padding must be in [0, kernel)");
  if (kernel > s.h + 2 * padding) {
    throw ShapeError("max_pool: window " + std::to_string(kernel) + " larger than input height " + std::to_string(s.h), "h");
  }
  if (kernel > s.w + 2 * padding) {
    throw ShapeError("max_pool: window " + std::to_string(kernel) + " larger than input width " + std::to_string(s.w), "w");
  }
  return {s.n, s.c, (s.h + 2 * padding - kernel) / stride + 1, (s.w + 2 * padding - kernel) / stride + 1};
}

Tensor max_pool(const Tensor& x, std::int64_t kernel, std::int64_t stride, std::int64_t padding) {
  const Shape s = x.shape();
  const Shape os = max_pool_shape(s, kernel, stride, padding);
  Tensor out(os);
  auto o = out.mutable_values();
  auto xv = x.values();
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(os.numel()));
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const float* plane = xv.data() + p * s.plane();
    for (std::int64_t oy = 0; oy < os.h; ++oy) {
      const std::int64_t y0 = std::max<std::int64_t>(oy * stride - padding, 0);
      const std::int64_t y1 = std::min(oy * stride - padding + kernel, s.h);
      for (std::int64_t ox = 0; ox < os.w; ++ox) {
        const std::int64_t x0 = std::max<std::int64_t>(ox * stride - padding, 0);
        const std::int64_t x1 = std::min(ox * stride - padding + kernel, s.w);
        std::int64_t best = y0 * s.w + x0;
        float best_v = plane[best];
        for (std::int64_t iy = y0; iy < y1; ++iy) {
          for (std::int64_t ix = x0; ix < x1; ++ix) {
            const std::int64_t i = iy * s.w + ix;
            if (plane[i] > best_v) {
              best_v = plane[i];
              best = i;
            }
          }
        }
        const auto oi = static_cast<std::size_t>((p * os.h + oy) * os.w + ox);
        o[oi] = best_v;
        (*argmax)[oi] = p * s.plane() + best;
      }
    }
  }

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, argmax] {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.grad_accumulator();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[static_cast<std::size_t>((*argmax)[i])] += gy[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// upsample_bilinear

namespace {

struct LerpTable {
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;
  std::vector<float> frac;
};

// align_corners=false: src = (dst + 0.5) / factor - 0.5, clamped at 0.
LerpTable lerp_table(std::int64_t in, std::int64_t factor) {
  const std::int64_t out = in * factor;
  LerpTable t;
  t.lo.resize(static_cast<std::size_t>(out));
  t.hi.resize(static_cast<std::size_t>(out));
  t.frac.resize(static_cast<std::size_t>(out));
  for (std::int64_t d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) / static_cast<double>(factor) - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::int64_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    const auto i = static_cast<std::size_t>(d);
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = static_cast<float>(src - static_cast<double>(lo));
  }
  return t;
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, std::int64_t factor) {
  if (factor < 1) throw ConfigError("upsample_bilinear: factor must be >= 1, got " + std::to_string(factor));
  const Shape s = x.shape();
  const Shape os{s.n, s.c, s.h * factor, s.w * factor};
  auto ty = std::make_shared<LerpTable>(lerp_table(s.h, factor));
  auto tx = std::make_shared<LerpTable>(lerp_table(s.w, factor));
  Tensor out(os);
  auto o = out.mutable_values();
  auto xv = x.values();
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const float* plane = xv.data() + p * s.plane();
    float* dst = o.data() + p * os.plane();
    for (std::int64_t oy = 0; oy < os.h; ++oy) {
      const auto yi = static_cast<std::size_t>(oy);
      const float fy = ty->frac[yi];
      const float* r0 = plane + ty->lo[yi] * s.w;
      const float* r1 = plane + ty->hi[yi] * s.w;
      for (std::int64_t ox = 0; ox < os.w; ++ox) {
        const auto xi = static_cast<std::size_t>(ox);
        const float fx = tx->frac[xi];
        const std::int64_t x0 = tx->lo[xi];
        const std::int64_t x1 = tx->hi[xi];
        const float top = r0[x0] + fx * (r0[x1] - r0[x0]);
        const float bottom = r1[x0] + fx * (r1[x1] - r1[x0]);
        dst[oy * os.w + ox] = top + fy * (bottom - top);
      }
    }
  }

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, ty, tx] {
      if (!out.has_grad()) return;
      const Shape s = x.shape();
      const Shape os = out.shape();
      auto gy = out.grad();
      auto gx = x.grad_accumulator();
      for (std::int64_t p = 0; p < s.n * s.c; ++p) {
        float* plane = gx.data() + p * s.plane();
        const float* src = gy.data() + p * os.plane();
        for (std::int64_t oy = 0; oy < os.h; ++oy) {
          const auto yi = static_cast<std::size_t>(oy);
          const float fy = ty->frac[yi];
          float* r0 = plane + ty->lo[yi] * s.w;
          float* r1 = plane + ty->hi[yi] * s.w;
          for (std::int64_t ox = 0; ox < os.w; ++ox) {
            const auto xi = static_cast<std::size_t>(ox);
            const float fx = tx->frac[xi];
            const float g = src[oy * os.w + ox];
            const std::int64_t x0 = tx->lo[xi];
            const std::int64_t x1 = tx->hi[xi];
            r0[x0] += g * (1.0f - fy) * (1.0f - fx);
            r0[x1] += g * (1.0f - fy) * fx;
            r1[x0] += g * fy * (1.0f - fx);
            r1[x1] += g * fy * fx;
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// log_softmax_channels

Tensor log_softmax_channels(const Tensor& x) {
  const Shape s = x.shape();
  Tensor out(s);
  auto o = out.mutable_values();
  auto xv = x.values();
  const std::int64_t plane = s.plane();
  for (std::int64_t n = 0; n < s.n; ++n) {
    const std::int64_t base = n * s.c * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      float m = -std::numeric_limits<float>::infinity();
      for (std::int64_t c = 0; c < s.c; ++c) m = std::max(m, xv[static_cast<std::size_t>(base + c * plane + i)]);
      double z = 0.0;
      for (std::int64_t c = 0; c < s.c; ++c) z += std::exp(static_cast<double>(xv[static_cast<std::size_t>(base + c * plane + i)] - m));
      const double log_z = std::log(z);
      for (std::int64_t c = 0; c < s.c; ++c) {
        const auto idx = static_cast<std::size_t>(base + c * plane + i);
        o[idx] = static_cast<float>(static_cast<double>(xv[idx] - m) - log_z);
      }
    }
  }
  detail::check_finite(out, "log_softmax_channels");

  if (Tape* tape = detail::recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record([x, out] {
      if (!out.has_grad()) return;
      const Shape s = out.shape();
      const std::int64_t plane = s.plane();
      auto gy = out.grad();
      auto y = out.values();
      auto gx = x.grad_accumulator();
      for (std::int64_t n = 0; n < s.n; ++n) {
        const std::int64_t base = n * s.c * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          double total = 0.0;
          for (std::int64_t c = 0; c < s.c; ++c) total += gy[static_cast<std::size_t>(base + c * plane + i)];
          for (std::int64_t c = 0; c < s.c; ++c) {
            const auto idx = static_cast<std::size_t>(base + c * plane + i);
            gx[idx] += static_cast<float>(gy[idx] - std::exp(static_cast<double>(y[idx])) * total);
          }
        }
      }
    });
  }
  return out;
}

}  // namespace ddcm
