#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "ddcm/tensor.hpp"

namespace ddcm {

/// Ordered record of executed differentiable ops.
///
/// Ops executed while a tape is active (see TapeScope) and having at least one
/// input that requires a gradient append a closure here. backward() replays the
/// closures in exact reverse order; every closure accumulates (+=) into its
/// inputs' gradient buffers.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
  /// Throws NumericError for a non-scalar loss, an empty tape, or a second call
  /// before clear().
  void backward(const Tensor& loss);

  /// Drops all recorded ops and re-arms backward().
  void clear();

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  std::vector<BackwardFn> entries_;
  bool consumed_ = false;
};

/// Makes `tape` the recording tape of the calling thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Tape active on this thread, or nullptr.
Tape* active_tape() noexcept;

namespace detail {

/// Tape to record onto when any input requires a gradient, else nullptr.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs) noexcept;
Tape* recording_tape(const std::vector<Tensor>& inputs) noexcept;

/// dst += src elementwise.
void accumulate(std::span<float> dst, std::span<const float> src);

/// Debug-build guard for the finite-output invariant of forward ops.
void check_finite(const Tensor& out, const char* op);

}  // namespace detail
}  // namespace ddcm
