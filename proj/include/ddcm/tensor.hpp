#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ddcm {

/// Extent of a rank-4 (batch, channel, height, width) tensor.
struct Shape {
  std::int64_t n = 1;
  std::int64_t c = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;

  constexpr std::int64_t numel() const noexcept { return n * c * h * w; }
  constexpr std::int64_t plane() const noexcept { return h * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const;
};

/// Dense float32 tensor in (n, c, h, w) row-major order with an optional gradient buffer.
///
/// A Tensor is a shared handle: copies alias the same storage, which is how the
/// tape keeps inputs and outputs of recorded ops alive. The gradient buffer is
/// allocated on first accumulation, so inference never pays for it.
class Tensor {
 public:
  /// Undefined tensor (no storage). Used for absent optional inputs such as a conv bias.
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  static Tensor scalar(float value) { return Tensor(Shape{}, value); }

  bool defined() const noexcept { return static_cast<bool>(storage_); }
  const Shape& shape() const;
  std::int64_t numel() const { return shape().numel(); }

  std::span<const float> values() const;
  /// Write access for leaf initialization and optimizer updates.
  std::span<float> mutable_values();

  std::int64_t index(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;
  float at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;
  /// Value of a (1,1,1,1) tensor.
  float item() const;

  bool requires_grad() const noexcept { return storage_ && storage_->requires_grad; }
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const noexcept { return storage_ && !storage_->grad.empty(); }
  /// Empty span when no gradient has been accumulated.
  std::span<const float> grad() const;
  /// Gradient buffer, zero-allocated on first use. Callers accumulate into it.
  std::span<float> grad_accumulator() const;
  /// Releases the gradient buffer.
  void zero_grad() const;

  /// True when both handles alias the same storage.
  bool same(const Tensor& other) const noexcept { return storage_ == other.storage_; }
  /// Deep copy of shape and values; the copy has no gradient and does not require one.
  Tensor clone() const;

 private:
  struct Storage {
    Shape shape;
    std::vector<float> values;
    std::vector<float> grad;
    bool requires_grad = false;
  };

  Storage& storage() const;

  std::shared_ptr<Storage> storage_;
};

/// Throws ShapeError unless every dimension is at least one.
void validate_shape(const Shape& shape, const std::string& op);

/// True when all values are finite.
bool all_finite(std::span<const float> values);

}  // namespace ddcm
