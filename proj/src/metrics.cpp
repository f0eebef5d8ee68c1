#include "ddcm/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "ddcm/error.hpp"

namespace ddcm {

namespace {

std::set<std::size_t> clutter_of(const std::vector<std::string>& names) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == "clutter") out.insert(i);
  return out;
}

std::string fmt(std::optional<double> v, const char* spec) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : ConfusionMatrix(class_names, clutter_of(class_names)) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names, std::set<std::size_t> excluded_from_mean)
    : names_(std::move(class_names)), excluded_(std::move(excluded_from_mean)), counts_(names_.size() * names_.size(), 0) {
  if (names_.empty()) throw ConfigError("confusion matrix: no classes");
  for (std::size_t c : excluded_)
    if (c >= names_.size()) throw ConfigError("confusion matrix: excluded class " + std::to_string(c) + " out of range");
}

void ConfusionMatrix::accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref,
                                 std::optional<std::uint8_t> ignore) {
  if (pred.size() != ref.size()) {
    throw DataError("accumulate: prediction has " + std::to_string(pred.size()) + " pixels, reference " +
                    std::to_string(ref.size()));
  }
  const std::size_t n = classes();
  std::vector<std::uint64_t> local(counts_.size(), 0);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ignore && ref[i] == *ignore) continue;
    if (ref[i] >= n || pred[i] >= n) {
      throw DataError("accumulate: class index " + std::to_string(std::max(ref[i], pred[i])) + " at pixel " +
                      std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    }
    ++local[ref[i] * n + pred[i]];
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += local[i];
}

void ConfusionMatrix::add(std::size_t ref, std::size_t pred, std::uint64_t count) {
  if (ref >= classes() || pred >= classes()) throw DataError("confusion matrix: class index out of range");
  counts_[ref * classes() + pred] += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes() != classes()) throw DataError("confusion matrix: merging matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (std::uint64_t v : counts_) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t r = 0; r < classes(); ++r)
    if (r != c) s += count(r, c);
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes(); ++p)
    if (p != c) s += count(c, p);
  return s;
}

void ConfusionMatrix::require_nonempty(const char* what) const {
  if (total() == 0) throw DataError(std::string(what) + ": confusion matrix is empty");
}

std::optional<double> ConfusionMatrix::f1(std::size_t c) const {
  require_nonempty("f1");
  const double tp = static_cast<double>(true_positives(c));
  const double denom = 2 * tp + static_cast<double>(false_positives(c) + false_negatives(c));
  if (denom == 0) return std::nullopt;
  return 2 * tp / denom;
}

std::optional<double> ConfusionMatrix::iou(std::size_t c) const {
  require_nonempty("iou");
  const double tp = static_cast<double>(true_positives(c));
  const double denom = tp + static_cast<double>(false_positives(c) + false_negatives(c));
  if (denom == 0) return std::nullopt;
  return tp / denom;
}

double ConfusionMatrix::overall_accuracy() const {
  require_nonempty("overall accuracy");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < classes(); ++c) trace += count(c, c);
  return static_cast<double>(trace) / static_cast<double>(total());
}

double ConfusionMatrix::mean_of(std::optional<double> (ConfusionMatrix::*measure)(std::size_t) const) const {
  double sum = 0;
  int n = 0;
  for (std::size_t c = 0; c < classes(); ++c) {
    if (excluded_.count(c)) continue;
    if (const auto v = (this->*measure)(c)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) throw DataError("mean: no class with a defined measure");
  return sum / n;
}

double ConfusionMatrix::mean_f1() const {
  require_nonempty("mean f1");
  return mean_of(&ConfusionMatrix::f1);
}

double ConfusionMatrix::mean_iou() const {
  require_nonempty("mean iou");
  return mean_of(&ConfusionMatrix::iou);
}

std::vector<std::size_t> ConfusionMatrix::undefined_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes(); ++c)
    if (!excluded_.count(c) && true_positives(c) + false_positives(c) + false_negatives(c) == 0) out.push_back(c);
  return out;
}

std::string ConfusionMatrix::report_text() const {
  std::size_t width = 5;
  for (const auto& n : names_) width = std::max(width, n.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %7s  %7s\n", static_cast<int>(width), "class", "F1", "IoU");
  out += buf;
  for (std::size_t c = 0; c < classes(); ++c) {
    const std::string f = fmt(f1(c), "%.4f");
    const std::string i = fmt(iou(c), "%.4f");
    std::snprintf(buf, sizeof buf, "%-*s  %7s  %7s%s\n", static_cast<int>(width), names_[c].c_str(),
                  f.empty() ? "-" : f.c_str(), i.empty() ? "-" : i.c_str(), excluded_.count(c) ? "  (not in mean)" : "");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s  %7.4f  %7.4f\n", static_cast<int>(width), "mean", mean_f1(), mean_iou());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-*s  %7.4f\n", static_cast<int>(width), "OA", overall_accuracy());
  out += buf;
  return out;
}

std::string ConfusionMatrix::report_csv() const {
  std::string out = "class,f1,iou\n";
  for (std::size_t c = 0; c < classes(); ++c) out += names_[c] + "," + fmt(f1(c), "%.6f") + "," + fmt(iou(c), "%.6f") + "\n";
  out += "mean," + fmt(mean_f1(), "%.6f") + "," + fmt(mean_iou(), "%.6f") + "\n";
  out += "overall_accuracy," + fmt(overall_accuracy(), "%.6f") + ",\n";
  return out;
}

}  // namespace ddcm
