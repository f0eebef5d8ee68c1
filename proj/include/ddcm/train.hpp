#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "ddcm/dataset.hpp"
#include "ddcm/graph.hpp"

namespace ddcm {

/// -mean over pixels of w[label] * log_probs[label]. `log_probs` is (n, C, h, w),
/// `labels` (n, h, w) with values in [0, C). Gradient flows to `log_probs` only.
Tensor weighted_ce_loss(const Tensor& log_probs, const LabelMap& labels, std::span<const double> weights);

/// Fraction of pixels whose argmax class equals the label (ties to the lower index).
double pixel_accuracy(const Tensor& scores, const LabelMap& labels);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 term added to the gradient before the moment updates.
  double weight_decay = 5e-5;
};

/// Adam with the AMSGrad running maximum of the second moment.
class AdamAmsgrad {
 public:
  AdamAmsgrad(std::vector<NamedTensor> params, AdamOptions options = {});

  /// One update. Parameters with role Bias use `bias_lr`, the rest `weight_lr`.
  /// Parameters without a gradient are skipped. Any non-finite gradient aborts the
  /// step before anything is modified.
  void step(double weight_lr, double bias_lr);

  std::int64_t steps() const noexcept { return t_; }
  const std::vector<NamedTensor>& params() const noexcept { return params_; }
  std::span<const float> max_second_moment(std::size_t i) const { return v_max_.at(i); }

 private:
  std::vector<NamedTensor> params_;
  AdamOptions options_;
  std::vector<std::vector<float>> m_, v_, v_max_;
  std::int64_t t_ = 0;
};

struct TrainSchedule {
  double base_lr = 8.5e-5 / std::sqrt(2.0);
  double bias_lr_mult = 2.0;
  double power = 0.9;
  double max_iter = 1e8;
  double step_gamma = 0.85;
  std::int64_t step_period = 15;
};

/// base_lr * (1 - iter/max_iter)^power * step_gamma^floor(epoch/step_period),
/// times bias_lr_mult for bias parameters.
double lr_at(const TrainSchedule& schedule, std::int64_t iter, std::int64_t epoch, bool is_bias);

struct EpochRecord {
  std::int64_t epoch = 0;
  std::int64_t iter = 0;  // iterations completed so far
  double lr = 0.0;        // weight LR of the last iteration
  double loss = 0.0;      // mean training loss over the epoch
  double acc = 0.0;       // training pixel accuracy over the epoch
  double val_loss = NAN;  // NaN without a validation set
};

struct TrainOptions {
  std::int64_t epochs = 1;
  std::int64_t batch_size = 5;
  SamplerOptions sampler;
  TrainSchedule schedule;
  AdamOptions adam;
  /// Checkpoints and the CSV log go here; empty disables all file output.
  std::filesystem::path out_dir;
  const TileDataset* validation = nullptr;
  /// Stop after this many iterations (0 = no limit).
  std::int64_t max_iterations = 0;
  /// Stop once an epoch's training accuracy reaches this (0 = never).
  double stop_accuracy = 0.0;
  std::function<void(std::int64_t iter, double loss)> on_iteration;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<double> class_weights;
  std::int64_t iterations = 0;
};

/// Mean loss and pixel accuracy of whole tiles in eval mode. Tile sides must be
/// multiples of 16.
std::pair<double, double> evaluate_tiles(ModelGraph& model, const TileDataset& data, std::span<const double> weights);

/// Runs the patch-sampled training loop: per batch forward, weighted loss,
/// backward and an AMSGrad step, with LRs from `lr_at`. With an output directory
/// it appends "epoch,iter,lr,loss,acc" lines to train_log.csv and writes
/// last.ckpt every epoch and best.ckpt on the lowest validation loss (training
/// loss without a validation set). A non-finite loss throws NumericError and
/// leaves the checkpoints of earlier epochs in place.
TrainResult train(ModelGraph& model, const TileDataset& data, const TrainOptions& options);

}  // namespace ddcm
