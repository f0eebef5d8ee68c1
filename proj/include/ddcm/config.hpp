#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ddcm/model_zoo.hpp"
#include "ddcm/tiled.hpp"
#include "ddcm/train.hpp"

namespace ddcm {

/// Everything a run needs, read from an INI file:
///
///   [model]  backbone, classes, seed, kernel,
///            {encoder,decoder1,decoder2}_{rates,growth,out}
///   [train]  lr, bias_lr_mult, weight_decay, beta1, beta2, eps, poly_power,
///            max_iter, step_gamma, step_period, batch, patch_size,
///            patches_per_epoch, align, epochs, seed, hflip, vflip, stop_accuracy
///   [infer]  window, stride, tta
///   [data]   root, palette
///
/// Omitted keys keep their defaults. Rates are comma-separated. Channel counts
/// that follow from other keys (DDCM inputs) are derived, not configured.
struct ExperimentConfig {
  DdcmR50Spec model;
  std::uint64_t model_seed = 0;

  TrainSchedule schedule;
  AdamOptions adam;
  SamplerOptions sampler;
  std::int64_t batch_size = 5;
  std::int64_t epochs = 100;
  double stop_accuracy = 0.0;

  TiledOptions infer;

  std::filesystem::path data_root;
  std::filesystem::path palette;

  /// ConfigError for unknown sections or keys, unparsable values, or a model
  /// spec that does not validate.
  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig parse(const std::string& text);

  /// Fully resolved INI text; parse(to_ini()) reproduces the config.
  std::string to_ini() const;
  /// "section.key = value" for every key that differs from the defaults.
  std::vector<std::string> overrides() const;

  TrainOptions train_options() const;
};

}  // namespace ddcm
