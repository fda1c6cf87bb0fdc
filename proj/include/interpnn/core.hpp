#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "interpnn/random.hpp"

namespace interpnn {

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DimensionMismatchError : public Error {
  using Error::Error;
};
class EmptyDatasetError : public Error {
  using Error::Error;
};
class DegenerateSplitError : public Error {
  using Error::Error;
};
class KTooLargeError : public Error {
  using Error::Error;
};
class OutOfRegimeError : public Error {
  using Error::Error;
};
class EmptyQuerySetError : public Error {
  using Error::Error;
};
class EmptyGridError : public Error {
  using Error::Error;
};
class SchemeMismatchError : public Error {
  using Error::Error;
};
class TaskMismatchError : public Error {
  using Error::Error;
};
class NonBinaryLabelError : public Error {
  using Error::Error;
};
class CsvParseError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};
class IoError : public Error {
  using Error::Error;
};

enum class Task { kRegression, kClassification };

using Point = std::vector<double>;

inline bool is_binary_label(double y) { return y == 0.0 || y == 1.0; }

/// Feature matrix plus labels, stored row-major with uniform dimension.
/// Immutable in spirit: all mutating calls happen before the dataset is
/// handed to an index or model.
class LabeledDataset {
 public:
  LabeledDataset(Task task, int dim) : task_(task), dim_(dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  }

  static LabeledDataset from_rows(Task task, const std::vector<Point>& points,
                                  const std::vector<double>& labels);

  void add(std::span<const double> point, double label) {
    if (static_cast<int>(point.size()) != dim_)
      throw DimensionMismatchError("point dimension " + std::to_string(point.size()) +
                                   " != dataset dimension " + std::to_string(dim_));
    coords_.insert(coords_.end(), point.begin(), point.end());
    labels_.push_back(label);
  }

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] Task task() const { return task_; }

  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  [[nodiscard]] double label(std::size_t i) const { return labels_[i]; }
  [[nodiscard]] std::span<const double> labels() const { return labels_; }
  [[nodiscard]] std::span<const double> coords() const { return coords_; }

 private:
  Task task_;
  int dim_;
  std::vector<double> coords_;
  std::vector<double> labels_;
};

struct Violation {
  enum class Kind { kEmptyDataset, kDimensionMismatch, kNonFiniteValue, kNonBinaryLabel };
  Kind kind;
  std::size_t index = 0;  // offending point index (0 for kEmptyDataset)

  [[nodiscard]] std::string to_string() const {
    switch (kind) {
      case Kind::kEmptyDataset:
        return "EmptyDataset";
      case Kind::kDimensionMismatch:
        return "DimensionMismatch at index " + std::to_string(index);
      case Kind::kNonFiniteValue:
        return "NonFiniteValue at index " + std::to_string(index);
      case Kind::kNonBinaryLabel:
        return "NonBinaryLabel at index " + std::to_string(index);
    }
    return "Unknown";
  }
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] std::string to_string() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += v.to_string();
    }
    return s.empty() ? "Ok" : s;
  }
};

/// Validates raw rows before a dataset is constructed. Reports every
/// violation with its point index; the reference dimension is that of the
/// first row.
inline ValidationReport validate_rows(Task task, const std::vector<Point>& points,
                                      const std::vector<double>& labels) {
  if (points.size() != labels.size())
    throw std::invalid_argument("points/labels size mismatch");
  ValidationReport report;
  if (points.empty()) {
    report.violations.push_back({Violation::Kind::kEmptyDataset, 0});
    return report;
  }
  const std::size_t ref_dim = points.front().size();
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != ref_dim || points[i].empty()) {
      report.violations.push_back({Violation::Kind::kDimensionMismatch, i});
      continue;
    }
    for (double c : points[i]) {
      if (!std::isfinite(c)) {
        report.violations.push_back({Violation::Kind::kNonFiniteValue, i});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(labels[i])) {
      report.violations.push_back({Violation::Kind::kNonFiniteValue, i});
    } else if (task == Task::kClassification && !is_binary_label(labels[i])) {
      report.violations.push_back({Violation::Kind::kNonBinaryLabel, i});
    }
  }
  return report;
}

/// Validates an already constructed dataset (uniform dimension holds by
/// construction, so only emptiness, finiteness and label range are checked).
inline ValidationReport validate_dataset(const LabeledDataset& ds) {
  ValidationReport report;
  if (ds.size() == 0) {
    report.violations.push_back({Violation::Kind::kEmptyDataset, 0});
    return report;
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double c : ds.point(i)) {
      if (!std::isfinite(c)) {
        report.violations.push_back({Violation::Kind::kNonFiniteValue, i});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double y = ds.label(i);
    if (!std::isfinite(y)) {
      report.violations.push_back({Violation::Kind::kNonFiniteValue, i});
    } else if (ds.task() == Task::kClassification && !is_binary_label(y)) {
      report.violations.push_back({Violation::Kind::kNonBinaryLabel, i});
    }
  }
  return report;
}

inline LabeledDataset LabeledDataset::from_rows(Task task, const std::vector<Point>& points,
                                                const std::vector<double>& labels) {
  if (points.size() != labels.size())
    throw std::invalid_argument("points/labels size mismatch");
  const ValidationReport report = validate_rows(task, points, labels);
  if (!report.ok()) throw Error("invalid dataset: " + report.to_string());
  LabeledDataset ds(task, static_cast<int>(points.front().size()));
  for (std::size_t i = 0; i < points.size(); ++i) ds.add(points[i], labels[i]);
  return ds;
}

/// Uniform-random disjoint partition of ds into (train, test). The train
/// size is n * train_fraction rounded to nearest, ties toward train.
/// Deterministic under the seed; the relative order of rows is preserved
/// inside each part.
inline std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                                  double train_fraction,
                                                                  RngSeed seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  const std::size_t n = ds.size();
  if (n == 0) throw EmptyDatasetError("cannot split an empty dataset");
  const auto train_n =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 0.5));
  if (train_n == 0 || train_n >= n)
    throw DegenerateSplitError("split would leave an empty side (n=" + std::to_string(n) +
                               ", fraction=" + std::to_string(train_fraction) + ")");

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());

  LabeledDataset train(ds.task(), ds.dim());
  LabeledDataset test(ds.task(), ds.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto& part = i < train_n ? train : test;
    part.add(ds.point(order[i]), ds.label(order[i]));
  }
  return {std::move(train), std::move(test)};
}

/// Order-independent content hash of a dataset (FNV-1a over the canonically
/// sorted rows). Used to make data-driven seeds invariant to row order.
std::uint64_t dataset_content_hash(const LabeledDataset& ds);

namespace detail {

inline void fnv1a(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
}

}  // namespace detail

/// Stable row ordering (label first, then coordinates); used both by the
/// content hash and by canonical_sorted so that identical multisets of rows
/// produce identical downstream results.
inline std::vector<std::uint32_t> canonical_row_order(const LabeledDataset& ds) {
  std::vector<std::uint32_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (ds.label(a) != ds.label(b)) return ds.label(a) < ds.label(b);
    const auto pa = ds.point(a);
    const auto pb = ds.point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  });
  return order;
}

inline LabeledDataset canonical_sorted(const LabeledDataset& ds) {
  LabeledDataset out(ds.task(), ds.dim());
  for (std::uint32_t i : canonical_row_order(ds)) out.add(ds.point(i), ds.label(i));
  return out;
}

inline std::uint64_t dataset_content_hash(const LabeledDataset& ds) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  const std::uint64_t dim = static_cast<std::uint64_t>(ds.dim());
  detail::fnv1a(h, &dim, sizeof dim);
  for (std::uint32_t i : canonical_row_order(ds)) {
    const double y = ds.label(i);
    detail::fnv1a(h, &y, sizeof y);
    const auto p = ds.point(i);
    detail::fnv1a(h, p.data(), p.size() * sizeof(double));
  }
  return h;
}

/// Numerically exact-ish mean: pairwise summation, independent of any
/// parallel schedule because callers pass values in a fixed order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

/// Standard error of the mean (0 for fewer than two values).
inline double stderr_of_mean(std::span<const double> v) {
  const std::size_t m = v.size();
  if (m < 2) return 0.0;
  const double mu = mean(v);
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
  return std::sqrt(pairwise_sum(sq) / (static_cast<double>(m) * static_cast<double>(m - 1)));
}

}  // namespace interpnn
