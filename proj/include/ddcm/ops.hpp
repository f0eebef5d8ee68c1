#pragma once

#include <cstdint>
#include <vector>

#include "ddcm/tensor.hpp"

namespace ddcm {

// Elementwise ops require identical shapes; mismatches raise ShapeError naming the axis.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float factor);
Tensor relu(const Tensor& x);

/// Sum of all elements as a (1,1,1,1) tensor. Accumulates in double.
Tensor sum(const Tensor& x);

/// Stacks along the channel axis; all parts share n, h, w.
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Channels [begin, begin + count). Inverse of concat_channels.
Tensor slice_channels(const Tensor& x, std::int64_t begin, std::int64_t count);

enum class FlipAxis { Horizontal, Vertical };

/// Mirrors the w axis (Horizontal) or the h axis (Vertical). Not differentiated.
Tensor flip(const Tensor& x, FlipAxis axis);

}  // namespace ddcm
