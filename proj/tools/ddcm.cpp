// ddcm: synth | analyze | rf | train | predict | eval
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure, 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ddcm/checkpoint.hpp"
#include "ddcm/config.hpp"
#include "ddcm/cost.hpp"
#include "ddcm/ddcm_module.hpp"
#include "ddcm/error.hpp"
#include "ddcm/image_io.hpp"
#include "ddcm/manifest.hpp"
#include "ddcm/metrics.hpp"
#include "ddcm/parallel.hpp"
#include "ddcm/serialize.hpp"
#include "ddcm/tiled.hpp"

namespace fs = std::filesystem;
using namespace ddcm;

namespace {

ExperimentConfig load_config(const std::string& path) {
  return path.empty() ? ExperimentConfig::parse("") : ExperimentConfig::load(path);
}

Palette resolve_palette(const ExperimentConfig& cfg, const fs::path& data_root) {
  if (!cfg.palette.empty()) return Palette::load(cfg.palette);
  if (!data_root.empty() && fs::exists(data_root / "palette.txt")) return Palette::load(data_root / "palette.txt");
  return Palette::isprs(static_cast<int>(cfg.model.num_classes));
}

Shape parse_input_shape(const std::string& text) {
  Shape s{1, 0, 0, 0};
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> s.c >> x1 >> s.h >> x2 >> s.w) || x1 != 'x' || x2 != 'x' || s.c < 1 || s.h < 1 || s.w < 1 || in.peek() != EOF) {
    throw ConfigError("analyze: --input must look like 3x256x256, got '" + text + "'");
  }
  return s;
}

std::string threads_text() { return std::to_string(num_threads()); }

// synth

struct SynthArgs {
  std::string out;
  SynthOptions opt;
};

int run_synth(const SynthArgs& a) {
  const TileDataset ds = generate_synthetic(a.out, a.opt);
  std::vector<fs::path> files{fs::path(a.out) / "palette.txt"};
  for (const Tile& t : ds.tiles()) {
    files.push_back(fs::path(a.out) / "images" / (t.name + ".png"));
    files.push_back(fs::path(a.out) / "labels" / (t.name + ".png"));
  }
  write_manifest(fs::path(a.out) / "manifest.txt", "synth",
                 {{"tiles", std::to_string(a.opt.tiles)},
                  {"size", std::to_string(a.opt.size)},
                  {"classes", std::to_string(a.opt.classes)},
                  {"seed", std::to_string(a.opt.seed)},
                  {"lattice", std::to_string(a.opt.lattice)}},
                 files);
  std::printf("wrote %zu tiles to %s\n", ds.size(), a.out.c_str());
  return 0;
}

// analyze

struct AnalyzeArgs {
  std::string config;
  std::string input = "3x256x256";
  bool csv = false;
  bool backbone_only = false;
};

int run_analyze(const AnalyzeArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const Shape input = parse_input_shape(a.input);
  for (const std::string& o : cfg.overrides()) std::printf("# override: %s\n", o.c_str());
  const ModelGraph g = a.backbone_only ? build_backbone(cfg.model.backbone) : build_ddcm_r50(cfg.model);
  const CostReport r = count_cost(g, input);
  std::fputs(a.csv ? r.csv().c_str() : r.table().c_str(), stdout);
  return 0;
}

// rf

struct RfArgs {
  std::int64_t kernel = 3;
  std::vector<std::int64_t> rates{1, 2, 3, 5, 7, 9};
};

int run_rf(const RfArgs& a) {
  DdcmConfig cfg;
  cfg.kernel = a.kernel;
  cfg.rates = a.rates;
  std::printf("%lld\n", static_cast<long long>(receptive_field(cfg)));
  return 0;
}

// train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
};

int run_train(const TrainArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.data.empty()) cfg.data_root = a.data;
  if (cfg.data_root.empty()) throw ConfigError("train: no dataset (pass --data or set data.root)");
  for (const std::string& o : cfg.overrides()) std::printf("override: %s\n", o.c_str());

  const TileDataset data = TileDataset::open(cfg.data_root);
  if (data.class_count() != cfg.model.num_classes) {
    throw ConfigError("train: dataset has " + std::to_string(data.class_count()) + " classes, model.classes is " +
                      std::to_string(cfg.model.num_classes));
  }
  const fs::path out = a.out;
  fs::create_directories(out);
  {
    std::ofstream f(out / "config.ini");
    f << cfg.to_ini();
    if (!f) throw DataError("train: cannot write '" + (out / "config.ini").string() + "'");
  }

  ModelGraph model = build_ddcm_r50(cfg.model, cfg.model_seed);
  TrainOptions opt = cfg.train_options();
  opt.out_dir = out;
  opt.on_epoch = [](const EpochRecord& r) {
    std::printf("epoch %lld  iter %lld  lr %.3e  loss %.5f  acc %.4f\n", static_cast<long long>(r.epoch),
                static_cast<long long>(r.iter), r.lr, r.loss, r.acc);
    std::fflush(stdout);
  };
  const TrainResult res = train(model, data, opt);

  std::string weights;
  for (std::size_t i = 0; i < res.class_weights.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.9g", i ? "," : "", res.class_weights[i]);
    weights += buf;
  }
  const EpochRecord& last = res.epochs.back();
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.9f", last.acc);
  write_manifest(out / "manifest.txt", "train",
                 {{"threads", threads_text()},
                  {"model_seed", std::to_string(cfg.model_seed)},
                  {"sampler_seed", std::to_string(cfg.sampler.seed)},
                  {"epochs_run", std::to_string(res.epochs.size())},
                  {"iterations", std::to_string(res.iterations)},
                  {"final_train_acc", acc},
                  {"class_weights", weights}},
                 {out / "config.ini", out / "train_log.csv", out / "last.ckpt", out / "best.ckpt"}, cfg.to_ini());
  return 0;
}

// predict

struct PredictArgs {
  std::string ckpt;
  std::string image;
  std::string out;
  std::string config;
  std::string probs;
  bool no_tta = false;
};

int run_predict(const PredictArgs& a) {
  const fs::path ckpt = a.ckpt;
  fs::path config_path = a.config;
  if (config_path.empty() && fs::exists(ckpt.parent_path() / "config.ini")) config_path = ckpt.parent_path() / "config.ini";
  ExperimentConfig cfg = load_config(config_path.string());
  if (a.no_tta) cfg.infer.tta = false;

  ModelGraph model = build_ddcm_r50(cfg.model, cfg.model_seed);
  load_checkpoint(model, ckpt);
  const Image img = read_rgb_png(a.image);
  const Prediction p = predict_image(window_model(model), image_to_tensor(img), cfg.infer);

  const Palette palette = resolve_palette(cfg, cfg.data_root);
  if (palette.size() != cfg.model.num_classes) {
    throw ConfigError("predict: palette has " + std::to_string(palette.size()) + " classes, model predicts " +
                      std::to_string(cfg.model.num_classes));
  }
  Image labels(img.height, img.width, 1);
  labels.pixels = p.classes.values;
  write_label_png(a.out, labels, palette);
  std::vector<fs::path> files{fs::path(a.out)};
  if (!a.probs.empty()) {
    save_tensors(a.probs, {{"probs", p.probs}});
    files.emplace_back(a.probs);
  }
  write_manifest(fs::path(a.out + ".manifest.txt"), "predict",
                 {{"checkpoint", ckpt.string()},
                  {"checkpoint_sha1", git_blob_sha1_file(ckpt)},
                  {"image", a.image},
                  {"image_sha1", git_blob_sha1_file(a.image)},
                  {"tta", cfg.infer.tta ? "true" : "false"},
                  {"threads", threads_text()}},
                 files, cfg.to_ini());
  return 0;
}

// eval

struct EvalArgs {
  std::string pred;
  std::string ref;
  std::string palette;
  std::string exclude = "clutter";
  std::string csv;
  int ignore = -1;
};

int run_eval(const EvalArgs& a) {
  fs::path ref = a.ref;
  fs::path ref_root = ref;
  if (fs::is_directory(ref / "labels")) ref = ref / "labels";
  if (!fs::is_directory(ref)) throw DataError("eval: '" + ref.string() + "' is not a directory");
  if (!fs::is_directory(a.pred)) throw DataError("eval: '" + a.pred + "' is not a directory");
  Palette palette = !a.palette.empty()                         ? Palette::load(a.palette)
                    : fs::exists(ref_root / "palette.txt") ? Palette::load(ref_root / "palette.txt")
                                                             : Palette::isprs();

  std::vector<std::string> names;
  for (const PaletteEntry& e : palette.entries()) names.push_back(e.name);
  std::set<std::size_t> excluded;
  if (!a.exclude.empty() && a.exclude != "none") {
    std::stringstream ss(a.exclude);
    std::string name;
    while (std::getline(ss, name, ',')) {
      const auto idx = palette.find(name);
      if (!idx) throw ConfigError("eval: --exclude names unknown class '" + name + "'");
      excluded.insert(static_cast<std::size_t>(*idx));
    }
  }
  ConfusionMatrix cm(names, excluded);

  std::vector<fs::path> refs;
  for (const auto& e : fs::directory_iterator(ref))
    if (e.is_regular_file() && e.path().extension() == ".png") refs.push_back(e.path());
  if (refs.empty()) throw DataError("eval: no PNG files under '" + ref.string() + "'");
  std::sort(refs.begin(), refs.end());
  std::optional<std::uint8_t> ignore;
  if (a.ignore >= 0) ignore = static_cast<std::uint8_t>(a.ignore);
  for (const fs::path& r : refs) {
    const fs::path p = fs::path(a.pred) / r.filename();
    if (!fs::exists(p)) throw DataError("eval: no prediction for '" + r.filename().string() + "'");
    const Image rl = read_label_png(r, &palette);
    const Image pl = read_label_png(p, &palette);
    if (rl.height != pl.height || rl.width != pl.width) {
      throw DataError("eval: '" + r.filename().string() + "' prediction and reference sizes differ");
    }
    cm.accumulate(pl.pixels, rl.pixels, ignore);
  }
  for (std::size_t c : cm.undefined_classes()) {
    std::fprintf(stderr, "warning: class '%s' absent from reference and prediction; left out of the means\n", names[c].c_str());
  }
  std::fputs(cm.report_text().c_str(), stdout);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    f << cm.report_csv();
    if (!f) throw DataError("eval: cannot write '" + a.csv + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dilated dense-context segmentation engine"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (1 = bit-deterministic)")->check(CLI::PositiveNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic tile dataset");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--tiles", sa.opt.tiles, "Tile count")->capture_default_str();
  synth->add_option("--size", sa.opt.size, "Tile side in pixels")->capture_default_str();
  synth->add_option("--classes", sa.opt.classes, "Class count (2..6)")->capture_default_str();
  synth->add_option("--seed", sa.opt.seed, "Generator seed")->capture_default_str();
  synth->add_option("--lattice", sa.opt.lattice, "Label cell size in pixels")->capture_default_str();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Parameter and MAC counts per layer");
  analyze->add_option("--config", aa.config, "Experiment config (INI)");
  analyze->add_option("--input", aa.input, "Input shape CxHxW")->capture_default_str();
  analyze->add_flag("--csv", aa.csv, "CSV instead of a table");
  analyze->add_flag("--backbone-only", aa.backbone_only, "Count the backbone alone");

  RfArgs ra;
  auto* rf = app.add_subcommand("rf", "Receptive field of a DDCM rate chain");
  rf->add_option("--kernel", ra.kernel, "Kernel size")->capture_default_str();
  rf->add_option("--rates", ra.rates, "Comma-separated dilation rates")->delimiter(',')->capture_default_str();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train on a tile dataset");
  trn->add_option("--config", ta.config, "Experiment config (INI)");
  trn->add_option("--data", ta.data, "Dataset root (images/, labels/)");
  trn->add_option("--out", ta.out, "Run directory")->required();

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Tiled prediction of one image");
  predict->add_option("--ckpt", pa.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--image", pa.image, "RGB PNG")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pa.out, "Class-map PNG")->required();
  predict->add_option("--config", pa.config, "Experiment config (default: config.ini next to the checkpoint)");
  predict->add_option("--probs", pa.probs, "Also write the probability tensor here");
  predict->add_flag("--no-tta", pa.no_tta, "Identity transform only");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Confusion-matrix metrics of predicted class maps");
  eval->add_option("--pred", ea.pred, "Directory of predicted PNGs")->required();
  eval->add_option("--ref", ea.ref, "Reference PNG directory or dataset root")->required();
  eval->add_option("--ignore", ea.ignore, "Reference value to skip")->check(CLI::Range(0, 255));
  eval->add_option("--exclude", ea.exclude, "Classes left out of the means (comma-separated, or none)")->capture_default_str();
  eval->add_option("--palette", ea.palette, "Palette file");
  eval->add_option("--csv", ea.csv, "Also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (*synth) return run_synth(sa);
    if (*analyze) return run_analyze(aa);
    if (*rf) return run_rf(ra);
    if (*trn) return run_train(ta);
    if (*predict) return run_predict(pa);
    if (*eval) return run_eval(ea);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
