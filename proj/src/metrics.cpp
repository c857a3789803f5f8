#include "care/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace care {

GroupSplit group_split(const ClassCounts& counts) {
  const std::size_t C = counts.num_classes();
  GroupSplit split;
  split.group_of.assign(C, Group::Head);
  std::vector<ClassIndex> order(C);
  std::iota(order.begin(), order.end(), ClassIndex{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](ClassIndex a, ClassIndex b) { return counts.counts[a] > counts.counts[b]; });
  if (C < 3) {
    split.members[0] = order;
    return split;
  }
  const std::size_t head = (C + 2) / 3;
  const std::size_t med = (C - head + 1) / 2;
  for (std::size_t r = 0; r < C; ++r) {
    const Group g = r < head ? Group::Head : (r < head + med ? Group::Medium : Group::Tail);
    split.group_of[order[r]] = g;
    split.members[static_cast<std::size_t>(g)].push_back(order[r]);
  }
  return split;
}

namespace {

void check_lengths(std::span<const ClassIndex> a, std::span<const ClassIndex> b) {
  if (a.size() != b.size()) throw ValidationError("label vectors differ in length");
}

double ratio(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

GroupRates noise_rate_by_group(std::span<const ClassIndex> labels, std::span<const ClassIndex> truth,
                               const GroupSplit& split) {
  check_lengths(labels, truth);
  std::array<std::size_t, 3> wrong{}, total{};
  std::size_t all_wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= split.num_classes()) throw ValidationError("true label outside group split");
    const auto g = static_cast<std::size_t>(split.group_of[truth[i]]);
    const bool miss = labels[i] != truth[i];
    ++total[g];
    wrong[g] += miss;
    all_wrong += miss;
  }
  GroupRates out;
  out.overall = ratio(all_wrong, truth.size());
  out.head = ratio(wrong[0], total[0]);
  out.med = ratio(wrong[1], total[1]);
  out.tail = ratio(wrong[2], total[2]);
  out.group_sizes = total;
  return out;
}

std::vector<double> per_class_noise_rate(std::span<const ClassIndex> labels,
                                         std::span<const ClassIndex> truth, std::size_t num_classes) {
  check_lengths(labels, truth);
  std::vector<std::size_t> wrong(num_classes, 0), total(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++total.at(truth[i]);
    wrong[truth[i]] += labels[i] != truth[i];
  }
  std::vector<double> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) out[c] = ratio(wrong[c], total[c]);
  return out;
}

double accuracy(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth) {
  check_lengths(pred, truth);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return ratio(hit, pred.size());
}

std::array<double, 3> group_accuracy(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth,
                                     const GroupSplit& split) {
  check_lengths(pred, truth);
  std::array<std::size_t, 3> hit{}, total{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto g = static_cast<std::size_t>(split.group_of.at(truth[i]));
    ++total[g];
    hit[g] += pred[i] == truth[i];
  }
  return {ratio(hit[0], total[0]), ratio(hit[1], total[1]), ratio(hit[2], total[2])};
}

double macro_f1(std::span<const ClassIndex> pred, std::span<const ClassIndex> truth, std::size_t num_classes) {
  check_lengths(pred, truth);
  if (num_classes == 0) return 0.0;
  std::vector<std::size_t> tp(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || truth[i] >= num_classes) throw ValidationError("label outside class range");
    ++predicted[pred[i]];
    ++actual[truth[i]];
    tp[pred[i]] += pred[i] == truth[i];
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double precision = ratio(tp[c], predicted[c]);
    const double recall = ratio(tp[c], actual[c]);
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(num_classes);
}

}  // namespace care
