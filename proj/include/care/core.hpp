#pragma once
// Shared domain types: datasets, confidence vectors, class counts, the
// accumulated frequency matrix and rectified label state.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace care {

using ClassIndex = std::uint32_t;
using Labels = std::vector<ClassIndex>;

/// Raised when an input violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on filesystem / format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
/// Scales v to unit L2 norm; leaves an all-zero vector untouched.
void normalize_in_place(std::span<double> v);

/// Lowest index of the maximum entry.
std::size_t argmax(std::span<const double> v);

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kSimplexTolerance = 1e-6;

struct Dataset {
  std::size_t num_classes = 0;
  Matrix features;    // N x D, unit rows
  Matrix prototypes;  // C x D, unit rows
  Labels observed_labels;
  std::optional<Labels> true_labels;

  std::size_t num_samples() const { return features.rows(); }
  std::size_t feature_dim() const { return features.cols(); }
  bool has_truth() const { return true_labels.has_value(); }
};

enum class ViolationKind { LabelOutOfRange, NonNormalizedRow, LengthMismatch, EmptyDimension };

struct Violation {
  ViolationKind kind;
  std::string where;  // e.g. "observed_labels[3]"
  std::string detail;
};

std::string to_string(ViolationKind kind);

/// Every invariant violation in the dataset; empty means valid.
std::vector<Violation> validate_dataset(const Dataset& d);
/// Throws ValidationError summarizing all violations.
void require_valid(const Dataset& d);

/// A probability distribution over classes. Construction enforces the simplex.
class ConfidenceVector {
 public:
  explicit ConfidenceVector(std::vector<double> probs, double tolerance = kSimplexTolerance);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t c) const { return probs_[c]; }
  std::span<const double> probs() const { return probs_; }

  static bool on_simplex(std::span<const double> p, double tolerance = kSimplexTolerance);

 private:
  std::vector<double> probs_;
};

struct ClassCounts {
  std::vector<std::uint64_t> counts;
  std::uint32_t epoch = 0;

  std::size_t num_classes() const { return counts.size(); }
  std::uint64_t total() const;

  static ClassCounts from_labels(std::span<const ClassIndex> labels, std::size_t num_classes,
                                 std::uint32_t epoch = 0);
  bool operator==(const ClassCounts&) const = default;
};

/// Per-sample accumulated consensus evidence. Rows only ever grow.
class FrequencyMatrix {
 public:
  FrequencyMatrix() = default;
  FrequencyMatrix(std::size_t num_samples, std::size_t num_classes)
      : values_(num_samples, num_classes) {}

  /// Initial state: one row per sample holding `weight` at the observed label.
  static FrequencyMatrix from_labels(std::span<const ClassIndex> labels, std::size_t num_classes,
                                     double weight = 1.0);

  std::size_t num_samples() const { return values_.rows(); }
  std::size_t num_classes() const { return values_.cols(); }
  std::uint32_t epoch() const { return epoch_; }
  void set_epoch(std::uint32_t e) { epoch_ = e; }

  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  /// Adds a non-negative increment to row i. Throws on a negative entry.
  void add_to_row(std::size_t i, std::span<const double> increment);

  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
  std::uint32_t epoch_ = 0;
};

struct RectifiedState {
  Labels labels;
  ClassCounts counts;
  std::vector<double> prior;  // counts / N
};

}  // namespace care
