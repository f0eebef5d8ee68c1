#pragma once

#include <cstdint>

#include "ddcm/tensor.hpp"

namespace ddcm {

enum class Mode { Train, Eval };

/// Spatial span of a k-tap kernel whose taps sit r pixels apart: k + (k-1)(r-1).
constexpr std::int64_t effective_kernel(std::int64_t kernel, std::int64_t dilation) noexcept {
  return kernel + (kernel - 1) * (dilation - 1);
}

/// Square 2-D convolution with dilation. Weights are (out_channels, in_channels, kernel, kernel).
struct Conv2dSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel = 1;
  std::int64_t dilation = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool bias = false;

  /// Stride-1 conv whose zero padding (e-1)/2 keeps h and w unchanged for odd effective kernels.
  static Conv2dSpec same(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                         std::int64_t dilation = 1, bool bias = false);

  std::int64_t effective() const noexcept { return effective_kernel(kernel, dilation); }
  Shape weight_shape() const noexcept { return {out_channels, in_channels, kernel, kernel}; }
  Shape bias_shape() const noexcept { return {1, out_channels, 1, 1}; }

  /// floor((h + 2p - e)/stride) + 1 per spatial axis. Throws ShapeError on channel
  /// mismatch or non-positive output extent.
  Shape output_shape(const Shape& input) const;
  /// Throws ConfigError on non-positive kernel, dilation, stride or channels.
  void validate() const;
};

/// Zero-padded dilated convolution. `bias` may be undefined when spec.bias is false.
Tensor conv2d(const Tensor& x, const Conv2dSpec& spec, const Tensor& weight, const Tensor& bias = {});

/// Per-channel batch normalization parameters and running statistics, each (1,c,1,1).
struct BatchNormState {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  float momentum = 0.1f;
  float eps = 1e-5f;

  /// gamma = 1, beta = 0, running stats (0, 1); gamma and beta require gradients.
  static BatchNormState create(std::int64_t channels);
  std::int64_t channels() const { return gamma.shape().c; }
};

/// Train mode standardizes over (n, h, w) with batch statistics and updates the
/// running stats as (1 - momentum) * old + momentum * batch (unbiased variance).
/// Eval mode uses the running stats only.
Tensor batch_norm(const Tensor& x, BatchNormState& state, Mode mode);

/// Learnable per-channel negative slope, initialized to 0.25.
struct PReluState {
  Tensor slope;

  static PReluState create(std::int64_t channels, float init = 0.25f);
};

Tensor prelu(const Tensor& x, const PReluState& state);

/// Max pooling; gradient goes to the first maximal tap in row-major window order.
/// Taps in the `padding` border are ignored (never selected).
Tensor max_pool(const Tensor& x, std::int64_t kernel, std::int64_t stride, std::int64_t padding = 0);

/// floor((extent + 2*padding - kernel)/stride) + 1; throws ShapeError when the window exceeds the padded input.
Shape max_pool_shape(const Shape& input, std::int64_t kernel, std::int64_t stride, std::int64_t padding = 0);

/// Bilinear upsampling by an integer factor, align_corners = false.
Tensor upsample_bilinear(const Tensor& x, std::int64_t factor);

/// log-softmax over the channel axis at every (n, h, w).
Tensor log_softmax_channels(const Tensor& x);

}  // namespace ddcm
