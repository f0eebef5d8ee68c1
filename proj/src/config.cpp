#include "ddcm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddcm/error.hpp"

namespace ddcm {

namespace pt = boost::property_tree;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string rates_text(const std::vector<std::int64_t>& r) {
  std::string out;
  for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + std::to_string(r[i]);
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

// Ordered (section, key, value) view of a config, used both for writing and for
// diffing against the defaults.
std::vector<std::array<std::string, 3>> entries(const ExperimentConfig& c) {
  const auto& m = c.model;
  return {
      {"model", "backbone", to_string(m.backbone.kind)},
      {"model", "classes", std::to_string(m.num_classes)},
      {"model", "seed", std::to_string(c.model_seed)},
      {"model", "kernel", std::to_string(m.encoder.kernel)},
      {"model", "encoder_rates", rates_text(m.encoder.rates)},
      {"model", "encoder_growth", std::to_string(m.encoder.block_out_channels)},
      {"model", "encoder_out", std::to_string(m.encoder.merge_out_channels)},
      {"model", "decoder1_rates", rates_text(m.decoder1.rates)},
      {"model", "decoder1_growth", std::to_string(m.decoder1.block_out_channels)},
      {"model", "decoder1_out", std::to_string(m.decoder1.merge_out_channels)},
      {"model", "decoder2_rates", rates_text(m.decoder2.rates)},
      {"model", "decoder2_growth", std::to_string(m.decoder2.block_out_channels)},
      {"model", "decoder2_out", std::to_string(m.decoder2.merge_out_channels)},
      {"train", "lr", num(c.schedule.base_lr)},
      {"train", "bias_lr_mult", num(c.schedule.bias_lr_mult)},
      {"train", "weight_decay", num(c.adam.weight_decay)},
      {"train", "beta1", num(c.adam.beta1)},
      {"train", "beta2", num(c.adam.beta2)},
      {"train", "eps", num(c.adam.eps)},
      {"train", "poly_power", num(c.schedule.power)},
      {"train", "max_iter", num(c.schedule.max_iter)},
      {"train", "step_gamma", num(c.schedule.step_gamma)},
      {"train", "step_period", std::to_string(c.schedule.step_period)},
      {"train", "batch", std::to_string(c.batch_size)},
      {"train", "patch_size", std::to_string(c.sampler.patch_size)},
      {"train", "patches_per_epoch", std::to_string(c.sampler.patches_per_epoch)},
      {"train", "align", std::to_string(c.sampler.align)},
      {"train", "epochs", std::to_string(c.epochs)},
      {"train", "seed", std::to_string(c.sampler.seed)},
      {"train", "hflip", bool_text(c.sampler.hflip)},
      {"train", "vflip", bool_text(c.sampler.vflip)},
      {"train", "stop_accuracy", num(c.stop_accuracy)},
      {"infer", "window", std::to_string(c.infer.window)},
      {"infer", "stride", std::to_string(c.infer.stride)},
      {"infer", "tta", bool_text(c.infer.tta)},
      {"data", "root", c.data_root.string()},
      {"data", "palette", c.palette.string()},
  };
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("config: '" + key + "' has invalid value '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + text + "'");
}

std::vector<std::int64_t> parse_rates(const std::string& key, const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config: '" + key + "' has an empty rate");
    out.push_back(parse_number<std::int64_t>(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' needs at least one rate");
  return out;
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& v) {
  auto& m = c.model;
  auto i64 = [&] { return parse_number<std::int64_t>(key, v); };
  auto u64 = [&] { return parse_number<std::uint64_t>(key, v); };
  auto dbl = [&] { return parse_number<double>(key, v); };
  if (key == "model.backbone") m.backbone.kind = parse_backbone_kind(v);
  else if (key == "model.classes") m.num_classes = i64();
  else if (key == "model.seed") c.model_seed = u64();
  else if (key == "model.kernel") m.encoder.kernel = m.decoder1.kernel = m.decoder2.kernel = i64();
  else if (key == "model.encoder_rates") m.encoder.rates = parse_rates(key, v);
  else if (key == "model.encoder_growth") m.encoder.block_out_channels = i64();
  else if (key == "model.encoder_out") m.encoder.merge_out_channels = i64();
  else if (key == "model.decoder1_rates") m.decoder1.rates = parse_rates(key, v);
  else if (key == "model.decoder1_growth") m.decoder1.block_out_channels = i64();
  else if (key == "model.decoder1_out") m.decoder1.merge_out_channels = i64();
  else if (key == "model.decoder2_rates") m.decoder2.rates = parse_rates(key, v);
  else if (key == "model.decoder2_growth") m.decoder2.block_out_channels = i64();
  else if (key == "model.decoder2_out") m.decoder2.merge_out_channels = i64();
  else if (key == "train.lr") c.schedule.base_lr = dbl();
  else if (key == "train.bias_lr_mult") c.schedule.bias_lr_mult = dbl();
  else if (key == "train.weight_decay") c.adam.weight_decay = dbl();
  else if (key == "train.beta1") c.adam.beta1 = dbl();
  else if (key == "train.beta2") c.adam.beta2 = dbl();
  else if (key == "train.eps") c.adam.eps = dbl();
  else if (key == "train.poly_power") c.schedule.power = dbl();
  else if (key == "train.max_iter") c.schedule.max_iter = dbl();
  else if (key == "train.step_gamma") c.schedule.step_gamma = dbl();
  else if (key == "train.step_period") c.schedule.step_period = i64();
  else if (key == "train.batch") c.batch_size = i64();
  else if (key == "train.patch_size") c.sampler.patch_size = i64();
  else if (key == "train.patches_per_epoch") c.sampler.patches_per_epoch = i64();
  else if (key == "train.align") c.sampler.align = i64();
  else if (key == "train.epochs") c.epochs = i64();
  else if (key == "train.seed") c.sampler.seed = u64();
  else if (key == "train.hflip") c.sampler.hflip = parse_bool(key, v);
  else if (key == "train.vflip") c.sampler.vflip = parse_bool(key, v);
  else if (key == "train.stop_accuracy") c.stop_accuracy = dbl();
  else if (key == "infer.window") c.infer.window = i64();
  else if (key == "infer.stride") c.infer.stride = i64();
  else if (key == "infer.tta") c.infer.tta = parse_bool(key, v);
  else if (key == "data.root") c.data_root = v;
  else if (key == "data.palette") c.palette = v;
  else throw ConfigError("config: unknown key '" + key + "'");
}

void finish(ExperimentConfig& c) {
  auto& m = c.model;
  m.encoder.in_channels = m.backbone.in_channels;
  m.decoder1.in_channels = m.backbone.out_channels();
  m.decoder2.in_channels = m.decoder1.merge_out_channels;
  m.validate();
  if (c.batch_size < 1) throw ConfigError("config: train.batch must be >= 1");
  if (c.epochs < 1) throw ConfigError("config: train.epochs must be >= 1");
  if (c.sampler.patch_size < 16 || c.sampler.patch_size % 16 != 0) {
    throw ConfigError("config: train.patch_size must be a positive multiple of 16");
  }
  if (c.sampler.patches_per_epoch < 1) throw ConfigError("config: train.patches_per_epoch must be >= 1");
  if (c.sampler.align < 1) throw ConfigError("config: train.align must be >= 1");
  if (c.schedule.step_period < 1) throw ConfigError("config: train.step_period must be >= 1");
  if (!(c.schedule.base_lr >= 0)) throw ConfigError("config: train.lr must be non-negative");
  if (c.infer.window < 16 || c.infer.window % 16 != 0) {
    throw ConfigError("config: infer.window must be a positive multiple of 16");
  }
  if (c.infer.stride < 1) throw ConfigError("config: infer.stride must be >= 1");
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside any section");
    for (const auto& [key, value] : body) apply(c, section + "." + key, value.get_value<std::string>());
  }
  finish(c);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::to_ini() const {
  std::string out;
  std::string section;
  for (const auto& [s, k, v] : entries(*this)) {
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += k + " = " + v + "\n";
  }
  return out;
}

std::vector<std::string> ExperimentConfig::overrides() const {
  ExperimentConfig defaults;
  finish(defaults);
  const auto a = entries(defaults);
  const auto b = entries(*this);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i][2] != b[i][2]) out.push_back(b[i][0] + "." + b[i][1] + " = " + b[i][2]);
  return out;
}

TrainOptions ExperimentConfig::train_options() const {
  TrainOptions o;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.sampler = sampler;
  o.schedule = schedule;
  o.adam = adam;
  o.stop_accuracy = stop_accuracy;
  return o;
}

}  // namespace ddcm
