#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ddcm {

/// counts[ref][pred] over evaluated pixels.
class ConfusionMatrix {
 public:
  /// Classes named "clutter" are left out of the means by default.
  explicit ConfusionMatrix(std::vector<std::string> class_names);
  ConfusionMatrix(std::vector<std::string> class_names, std::set<std::size_t> excluded_from_mean);

  std::size_t classes() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::set<std::size_t>& excluded() const noexcept { return excluded_; }

  /// Adds one count per pixel. Pixels whose reference equals `ignore` are skipped.
  /// DataError for a size mismatch or a class index out of range.
  void accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref,
                  std::optional<std::uint8_t> ignore = std::nullopt);
  void add(std::size_t ref, std::size_t pred, std::uint64_t count = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::uint64_t count(std::size_t ref, std::size_t pred) const { return counts_.at(ref * classes() + pred); }
  std::uint64_t total() const noexcept;
  std::uint64_t true_positives(std::size_t c) const { return count(c, c); }
  std::uint64_t false_positives(std::size_t c) const;
  std::uint64_t false_negatives(std::size_t c) const;

  /// nullopt when the class is absent from both reference and prediction.
  /// Every measure throws DataError on an empty matrix.
  std::optional<double> f1(std::size_t c) const;
  std::optional<double> iou(std::size_t c) const;
  double overall_accuracy() const;
  /// Means over classes that are neither excluded nor undefined.
  double mean_f1() const;
  double mean_iou() const;
  /// Non-excluded classes skipped from the means because they are undefined.
  std::vector<std::size_t> undefined_classes() const;

  std::string report_text() const;
  /// "class,f1,iou" rows, then "mean" and "overall_accuracy" rows. Undefined values are empty.
  std::string report_csv() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  void require_nonempty(const char* what) const;
  double mean_of(std::optional<double> (ConfusionMatrix::*measure)(std::size_t) const) const;

  std::vector<std::string> names_;
  std::set<std::size_t> excluded_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace ddcm
