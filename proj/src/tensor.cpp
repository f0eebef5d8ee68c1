#include "ddcm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ddcm/error.hpp"

namespace ddcm {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void validate_shape(const Shape& shape, const std::string& op) {
  const std::pair<const char*, std::int64_t> dims[] = {
      {"n", shape.n}, {"c", shape.c}, {"h", shape.h}, {"w", shape.w}};
  for (const auto& [axis, extent] : dims) {
    if (extent < 1) {
      throw ShapeError(op + ": axis '" + axis + "' must be >= 1, got " + std::to_string(extent),
                       axis);
    }
  }
}

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

Tensor::Tensor(Shape shape, float fill) : storage_(std::make_shared<Storage>()) {
  validate_shape(shape, "Tensor");
  storage_->shape = shape;
  storage_->values.assign(static_cast<std::size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values) : storage_(std::make_shared<Storage>()) {
  validate_shape(shape, "Tensor");
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("Tensor", "numel", shape.numel(), static_cast<long long>(values.size()));
  }
  storage_->shape = shape;
  storage_->values = std::move(values);
}

Tensor::Storage& Tensor::storage() const {
  if (!storage_) throw Error("use of undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::span<const float> Tensor::values() const { return storage().values; }

std::span<float> Tensor::mutable_values() { return storage().values; }

std::int64_t Tensor::index(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
  const Shape& s = shape();
  return ((n * s.c + c) * s.h + h) * s.w + w;
}

float Tensor::at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
  return storage().values[static_cast<std::size_t>(index(n, c, h, w))];
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item", "numel", 1, numel());
  return storage().values.front();
}

Tensor& Tensor::set_requires_grad(bool flag) {
  storage().requires_grad = flag;
  return *this;
}

std::span<const float> Tensor::grad() const { return storage().grad; }

std::span<float> Tensor::grad_accumulator() const {
  Storage& s = storage();
  if (s.grad.empty()) s.grad.assign(s.values.size(), 0.0f);
  return s.grad;
}

void Tensor::zero_grad() const {
  Storage& s = storage();
  s.grad.clear();
  s.grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  const Storage& s = storage();
  return Tensor(s.shape, s.values);
}

}  // namespace ddcm
