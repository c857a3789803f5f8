#pragma once
// Evaluation: head/medium/tail splits, noise rates, accuracy and macro F1.

#include <array>
#include <span>
#include <vector>

#include "care/core.hpp"

namespace care {

enum class Group : std::uint8_t { Head = 0, Medium = 1, Tail = 2 };

/// Partition of classes into frequency groups.
struct GroupSplit {
  std::vector<Group> group_of;  // indexed by class
  std::array<std::vector<ClassIndex>, 3> members;

  std::size_t num_classes() const { return group_of.size(); }
};

/// Classes sorted by count (descending, ties by index) then cut into
/// ceil(C/3) head, ceil(rest/2) medium and the remainder as tail.
/// Fewer than three classes form a single head group.
GroupSplit group_split(const ClassCounts& counts);

struct GroupRates {
  double overall = 0.0;
  double head = 0.0;
  double med = 0.0;
  double tail = 0.0;
  std::array<std::size_t, 3> group_sizes{};  // samples per group (by true class)
};

/// Mismatch fraction overall and per group, grouped by the TRUE class.
/// Empty groups report 0.
GroupRates noise_rate_by_group(std::span<const ClassIndex> labels, std::span<const ClassIndex> truth,
                               const GroupSplit& split);

/// rho_c = P(label != truth | truth = c); 0 for classes without samples.
std::vector<double> per_class_noise_rate(std::span<const ClassIndex> labels,
                                         std::span<const ClassIndex> truth, std::size_t num_classes);

double accuracy(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth);

/// Accuracy restricted to samples whose true class is in each group.
std::array<double, 3> group_accuracy(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth,
                                     const GroupSplit& split);

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// samples contributes 0.
double macro_f1(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth, std::size_t num_classes);

struct MetricRecord {
  GroupRates noise;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_nr;
};

}  // namespace care
