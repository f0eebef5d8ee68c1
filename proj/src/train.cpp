#include "ddcm/train.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "ddcm/autodiff.hpp"
#include "ddcm/checkpoint.hpp"
#include "ddcm/error.hpp"

namespace ddcm {

namespace fs = std::filesystem;

Tensor weighted_ce_loss(const Tensor& log_probs, const LabelMap& labels, std::span<const double> weights) {
  const Shape s = log_probs.shape();
  if (labels.n != s.n) throw ShapeError("weighted_ce_loss", "n", s.n, labels.n);
  if (labels.h != s.h) throw ShapeError("weighted_ce_loss", "h", s.h, labels.h);
  if (labels.w != s.w) throw ShapeError("weighted_ce_loss", "w", s.w, labels.w);
  if (static_cast<std::int64_t>(weights.size()) != s.c) {
    throw ConfigError("weighted_ce_loss: " + std::to_string(weights.size()) + " class weights for " +
                      std::to_string(s.c) + " classes");
  }
  const std::int64_t plane = s.plane();
  const auto pixels = static_cast<double>(s.n * plane);
  auto lp = log_probs.values();
  double total = 0.0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t i = 0; i < plane; ++i) {
      const std::uint8_t l = labels.values[static_cast<std::size_t>(n * plane + i)];
      if (l >= s.c) {
        throw DataError("weighted_ce_loss: label " + std::to_string(l) + " outside [0, " + std::to_string(s.c) + ")");
      }
      total -= weights[l] * lp[static_cast<std::size_t>((n * s.c + l) * plane + i)];
    }
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / pixels));
  detail::check_finite(out, "weighted_ce_loss");

  if (Tape* tape = detail::recording_tape({&log_probs})) {
    out.set_requires_grad(true);
    std::vector<double> w(weights.begin(), weights.end());
    tape->record([log_probs, labels, w = std::move(w), out, pixels] {
      if (!out.has_grad()) return;
      const double g = out.grad()[0] / pixels;
      const Shape s = log_probs.shape();
      const std::int64_t plane = s.plane();
      auto gx = log_probs.grad_accumulator();
      for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
          const std::uint8_t l = labels.values[static_cast<std::size_t>(n * plane + i)];
          gx[static_cast<std::size_t>((n * s.c + l) * plane + i)] -= static_cast<float>(w[l] * g);
        }
      }
    });
  }
  return out;
}

double pixel_accuracy(const Tensor& scores, const LabelMap& labels) {
  const Shape s = scores.shape();
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w) throw ShapeError("pixel_accuracy: label map does not match scores", "h");
  const std::int64_t plane = s.plane();
  auto v = scores.values();
  std::int64_t correct = 0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t i = 0; i < plane; ++i) {
      std::int64_t best = 0;
      float best_v = v[static_cast<std::size_t>(n * s.c * plane + i)];
      for (std::int64_t c = 1; c < s.c; ++c) {
        const float x = v[static_cast<std::size_t>((n * s.c + c) * plane + i)];
        if (x > best_v) {
          best_v = x;
          best = c;
        }
      }
      correct += best == labels.values[static_cast<std::size_t>(n * plane + i)];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(s.n * plane);
}

// Optimizer

AdamAmsgrad::AdamAmsgrad(std::vector<NamedTensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(options_.beta1 >= 0 && options_.beta1 < 1) || !(options_.beta2 >= 0 && options_.beta2 < 1)) {
    throw ConfigError("adam: betas must lie in [0, 1)");
  }
  if (!(options_.eps > 0)) throw ConfigError("adam: eps must be positive");
  if (!(options_.weight_decay >= 0)) throw ConfigError("adam: weight decay must be non-negative");
  for (const NamedTensor& p : params_) {
    const auto n = static_cast<std::size_t>(p.tensor.numel());
    m_.emplace_back(n, 0.0f);
    v_.emplace_back(n, 0.0f);
    v_max_.emplace_back(n, 0.0f);
  }
}

void AdamAmsgrad::step(double weight_lr, double bias_lr) {
  if (!(weight_lr >= 0) || !(bias_lr >= 0)) throw ConfigError("adam: learning rates must be non-negative");
  for (const NamedTensor& p : params_) {
    if (p.tensor.has_grad() && !all_finite(p.tensor.grad())) {
      throw NumericError("adam: non-finite gradient in '" + p.name + "'; step skipped");
    }
  }
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double wd = options_.weight_decay;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor t = params_[k].tensor;
    if (!t.has_grad()) continue;
    const double lr = params_[k].role == ParamRole::Bias ? bias_lr : weight_lr;
    auto theta = t.mutable_values();
    auto g = t.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    auto& vmax = v_max_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = static_cast<double>(g[i]) + wd * theta[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      vmax[i] = std::max(vmax[i], v[i]);
      const double m_hat = mi / c1;
      const double v_hat = static_cast<double>(vmax[i]) / c2;
      theta[i] = static_cast<float>(theta[i] - lr * m_hat / (std::sqrt(v_hat) + options_.eps));
    }
  }
}

// Schedule

double lr_at(const TrainSchedule& s, std::int64_t iter, std::int64_t epoch, bool is_bias) {
  if (iter < 0 || epoch < 0) throw ConfigError("lr_at: iteration and epoch must be non-negative");
  if (static_cast<double>(iter) >= s.max_iter) throw ConfigError("lr_at: iteration is past max_iter");
  if (s.step_period < 1) throw ConfigError("lr_at: step period must be >= 1");
  const double poly = std::pow(1.0 - static_cast<double>(iter) / s.max_iter, s.power);
  const double step = std::pow(s.step_gamma, static_cast<double>(epoch / s.step_period));
  return s.base_lr * poly * step * (is_bias ? s.bias_lr_mult : 1.0);
}

// Training loop

namespace {

void save_atomically(const ModelGraph& model, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  save_checkpoint(model, tmp);
  fs::rename(tmp, path);
}

std::string csv_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%.9e,%.9f,%.9f", static_cast<long long>(r.epoch),
                static_cast<long long>(r.iter), r.lr, r.loss, r.acc);
  return buf;
}

}  // namespace

std::pair<double, double> evaluate_tiles(ModelGraph& model, const TileDataset& data, std::span<const double> weights) {
  double loss = 0.0, correct = 0.0, pixels = 0.0;
  for (const Tile& t : data.tiles()) {
    if (t.image.height % 16 != 0 || t.image.width % 16 != 0) {
      throw ConfigError("evaluate: tile '" + t.name + "' sides must be multiples of 16");
    }
    const Tensor lp = model.forward(image_to_tensor(t.image), Mode::Eval);
    LabelMap labels(1, t.labels.height, t.labels.width);
    labels.values = t.labels.pixels;
    const double n = static_cast<double>(labels.values.size());
    loss += weighted_ce_loss(lp, labels, weights).item() * n;
    correct += pixel_accuracy(lp, labels) * n;
    pixels += n;
  }
  if (pixels == 0) throw DataError("evaluate: dataset is empty");
  return {loss / pixels, correct / pixels};
}

TrainResult train(ModelGraph& model, const TileDataset& data, const TrainOptions& opt) {
  if (opt.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (opt.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (model.channels(model.output()) != data.class_count()) {
    throw ConfigError("train: model predicts " + std::to_string(model.channels(model.output())) +
                      " classes but the dataset has " + std::to_string(data.class_count()));
  }

  TrainResult result;
  result.class_weights = compute_class_stats(data).weights;
  const std::span<const double> weights(result.class_weights);

  PatchSampler sampler(data, opt.sampler);
  AdamAmsgrad adam(model.trainable(), opt.adam);

  std::ofstream log;
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    const fs::path log_path = opt.out_dir / "train_log.csv";
    const bool fresh = !fs::exists(log_path) || fs::file_size(log_path) == 0;
    log.open(log_path, std::ios::app);
    if (!log) throw DataError("train: cannot write '" + log_path.string() + "'");
    if (fresh) log << "epoch,iter,lr,loss,acc\n" << std::flush;
  }

  double best = std::numeric_limits<double>::infinity();
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; epoch < opt.epochs; ++epoch) {
    sampler.start_epoch(static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0, correct = 0.0, pixels = 0.0, lr = 0.0;
    while (opt.max_iterations == 0 || iter < opt.max_iterations) {
      Batch batch = sampler.next_batch(opt.batch_size);
      if (!batch.images.defined()) break;
      model.zero_grad();
      Tape tape;
      double loss = 0.0, acc = 0.0;
      {
        TapeScope scope(tape);
        const Tensor lp = model.forward(batch.images, Mode::Train);
        const Tensor l = weighted_ce_loss(lp, batch.labels, weights);
        loss = l.item();
        if (!std::isfinite(loss)) {
          throw NumericError("train: loss became " + std::to_string(loss) + " at iteration " + std::to_string(iter) +
                             " (epoch " + std::to_string(epoch) + ")");
        }
        acc = pixel_accuracy(lp, batch.labels);
        tape.backward(l);
      }
      lr = lr_at(opt.schedule, iter, epoch, false);
      adam.step(lr, lr_at(opt.schedule, iter, epoch, true));
      ++iter;
      const auto n = static_cast<double>(batch.labels.values.size());
      loss_sum += loss * n;
      correct += acc * n;
      pixels += n;
      if (opt.on_iteration) opt.on_iteration(iter, loss);
    }
    if (pixels == 0) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.iter = iter;
    rec.lr = lr;
    rec.loss = loss_sum / pixels;
    rec.acc = correct / pixels;
    if (opt.validation) rec.val_loss = evaluate_tiles(model, *opt.validation, weights).first;
    result.epochs.push_back(rec);

    if (log.is_open()) {
      log << csv_line(rec) << '\n' << std::flush;
      save_atomically(model, opt.out_dir / "last.ckpt");
      const double score = opt.validation ? rec.val_loss : rec.loss;
      if (score < best) {
        best = score;
        save_atomically(model, opt.out_dir / "best.ckpt");
      }
    }
    if (opt.on_epoch) opt.on_epoch(rec);
    if (opt.stop_accuracy > 0 && rec.acc >= opt.stop_accuracy) break;
  }
  result.iterations = iter;
  return result;
}

}  // namespace ddcm
