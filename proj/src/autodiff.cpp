#include "ddcm/autodiff.hpp"

#include <string>

#include "ddcm/error.hpp"

namespace ddcm {
namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

void Tape::record(BackwardFn fn) {
  if (consumed_) throw NumericError("Tape::record: tape already consumed by backward(); clear() it first");
  entries_.push_back(std::move(fn));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) {
    throw NumericError("backward called twice on the same tape; clear the tape and zero gradients first");
  }
  if (!loss.defined() || loss.shape() != Shape{}) {
    throw NumericError("backward requires a (1,1,1,1) loss, got " +
                       (loss.defined() ? loss.shape().str() : std::string("undefined")));
  }
  if (entries_.empty()) throw NumericError("backward on an empty tape");
  if (!loss.requires_grad()) throw NumericError("backward: loss does not depend on any parameter");

  loss.grad_accumulator()[0] += 1.0f;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  consumed_ = true;
}

void Tape::clear() {
  entries_.clear();
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() noexcept { return g_active_tape; }

namespace detail {

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) noexcept {
  if (g_active_tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->requires_grad()) return g_active_tape;
  }
  return nullptr;
}

Tape* recording_tape(const std::vector<Tensor>& inputs) noexcept {
  if (g_active_tape == nullptr) return nullptr;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return g_active_tape;
  }
  return nullptr;
}

void accumulate(std::span<float> dst, std::span<const float> src) {
  const std::size_t n = dst.size();
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
}

void check_finite([[maybe_unused]] const Tensor& out, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  if (!all_finite(out.values())) throw NumericError(std::string(op) + ": non-finite output");
#endif
}

}  // namespace detail
}  // namespace ddcm
