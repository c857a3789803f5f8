#include "care/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace care {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError("matrix data size does not match shape");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void normalize_in_place(std::span<double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::LabelOutOfRange: return "label-out-of-range";
    case ViolationKind::NonNormalizedRow: return "non-normalized-row";
    case ViolationKind::LengthMismatch: return "length-mismatch";
    case ViolationKind::EmptyDimension: return "empty-dimension";
  }
  return "unknown";
}

namespace {

void check_labels(const Labels& labels, std::size_t num_classes, const char* name,
                  std::vector<Violation>& out) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      out.push_back({ViolationKind::LabelOutOfRange,
                     std::string(name) + "[" + std::to_string(i) + "]",
                     "label " + std::to_string(labels[i]) + " >= C=" + std::to_string(num_classes)});
    }
  }
}

void check_rows(const Matrix& m, const char* name, std::vector<Violation>& out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = l2_norm(m.row(r));
    if (!(std::abs(n - 1.0) <= kUnitNormTolerance)) {
      std::ostringstream detail;
      detail << "row norm " << n;
      out.push_back({ViolationKind::NonNormalizedRow,
                     std::string(name) + "[" + std::to_string(r) + "]", detail.str()});
    }
  }
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  const std::size_t n = d.num_samples();
  if (n == 0) out.push_back({ViolationKind::EmptyDimension, "features", "N must be positive"});
  if (d.num_classes == 0) out.push_back({ViolationKind::EmptyDimension, "num_classes", "C must be positive"});
  if (d.feature_dim() == 0) out.push_back({ViolationKind::EmptyDimension, "features", "D must be positive"});

  if (d.prototypes.rows() != d.num_classes) {
    out.push_back({ViolationKind::LengthMismatch, "prototypes",
                   "expected " + std::to_string(d.num_classes) + " rows, got " +
                       std::to_string(d.prototypes.rows())});
  }
  if (d.prototypes.cols() != d.feature_dim()) {
    out.push_back({ViolationKind::LengthMismatch, "prototypes",
                   "prototype dim " + std::to_string(d.prototypes.cols()) +
                       " != feature dim " + std::to_string(d.feature_dim())});
  }
  if (d.observed_labels.size() != n) {
    out.push_back({ViolationKind::LengthMismatch, "observed_labels",
                   "length " + std::to_string(d.observed_labels.size()) + " != N=" + std::to_string(n)});
  }
  if (d.true_labels && d.true_labels->size() != n) {
    out.push_back({ViolationKind::LengthMismatch, "true_labels",
                   "length " + std::to_string(d.true_labels->size()) + " != N=" + std::to_string(n)});
  }

  check_labels(d.observed_labels, d.num_classes, "observed_labels", out);
  if (d.true_labels) check_labels(*d.true_labels, d.num_classes, "true_labels", out);
  check_rows(d.features, "features", out);
  check_rows(d.prototypes, "prototypes", out);
  return out;
}

void require_valid(const Dataset& d) {
  const auto violations = validate_dataset(d);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << violations.size() << " dataset violation(s):";
  constexpr std::size_t kShown = 20;
  for (std::size_t k = 0; k < violations.size() && k < kShown; ++k) {
    const auto& v = violations[k];
    msg << "\n  " << to_string(v.kind) << " at " << v.where << ": " << v.detail;
  }
  if (violations.size() > kShown) msg << "\n  ...";
  throw ValidationError(msg.str());
}

ConfidenceVector::ConfidenceVector(std::vector<double> probs, double tolerance)
    : probs_(std::move(probs)) {
  if (!on_simplex(probs_, tolerance)) {
    throw ValidationError("confidence vector is not on the probability simplex");
  }
}

bool ConfidenceVector::on_simplex(std::span<const double> p, double tolerance) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

std::uint64_t ClassCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ClassCounts ClassCounts::from_labels(std::span<const ClassIndex> labels, std::size_t num_classes,
                                     std::uint32_t epoch) {
  ClassCounts out{std::vector<std::uint64_t>(num_classes, 0), epoch};
  for (ClassIndex y : labels) {
    if (y >= num_classes) throw ValidationError("label out of range while counting classes");
    ++out.counts[y];
  }
  return out;
}

FrequencyMatrix FrequencyMatrix::from_labels(std::span<const ClassIndex> labels,
                                             std::size_t num_classes, double weight) {
  FrequencyMatrix F(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw ValidationError("label out of range in frequency init");
    F.values_(i, labels[i]) = weight;
  }
  return F;
}

void FrequencyMatrix::add_to_row(std::size_t i, std::span<const double> increment) {
  auto row = values_.row(i);
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (increment[c] < 0.0) throw ValidationError("frequency accumulation must not subtract");
  }
  for (std::size_t c = 0; c < row.size(); ++c) row[c] += increment[c];
}

}  // namespace care
