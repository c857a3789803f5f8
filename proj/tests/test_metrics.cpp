#include <doctest.h>

#include "care/metrics.hpp"
#include "care/rng.hpp"

using namespace care;

namespace {

std::array<std::size_t, 3> sizes(const GroupSplit& s) {
  return {s.members[0].size(), s.members[1].size(), s.members[2].size()};
}

}  // namespace

TEST_CASE("group sizes for 100 classes") {
  std::vector<std::uint64_t> counts(100);
  for (std::size_t c = 0; c < 100; ++c) counts[c] = 1000 - c;
  const auto s = group_split(ClassCounts{counts, 0});
  CHECK(sizes(s) == std::array<std::size_t, 3>{34, 33, 33});
  CHECK(s.group_of[0] == Group::Head);
  CHECK(s.group_of[33] == Group::Head);
  CHECK(s.group_of[34] == Group::Medium);
  CHECK(s.group_of[99] == Group::Tail);
}

TEST_CASE("three classes get one group each, in count order") {
  const auto s = group_split(ClassCounts{{1, 5, 3}, 0});
  CHECK(s.group_of[1] == Group::Head);
  CHECK(s.group_of[2] == Group::Medium);
  CHECK(s.group_of[0] == Group::Tail);
}

TEST_CASE("uniform counts split by index") {
  const auto s = group_split(ClassCounts{std::vector<std::uint64_t>(7, 10), 0});
  CHECK(s.members[0] == std::vector<ClassIndex>{0, 1, 2});
  CHECK(s.members[1] == std::vector<ClassIndex>{3, 4});
  CHECK(s.members[2] == std::vector<ClassIndex>{5, 6});
}

TEST_CASE("fewer than three classes form one head group") {
  const auto s = group_split(ClassCounts{{4, 9}, 0});
  CHECK(sizes(s) == std::array<std::size_t, 3>{2, 0, 0});
}

TEST_CASE("split is a partition ordered by count") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    CounterRng rng(3, Stream::Instances, t);
    std::vector<std::uint64_t> counts(3 + rng.below(40));
    for (auto& n : counts) n = rng.below(100);
    const auto s = group_split(ClassCounts{counts, 0});
    std::vector<int> seen(counts.size(), 0);
    for (int g = 0; g < 3; ++g) {
      for (ClassIndex c : s.members[g]) {
        ++seen[c];
        CHECK(static_cast<int>(s.group_of[c]) == g);
      }
    }
    for (int v : seen) CHECK(v == 1);
    for (int g = 0; g < 2; ++g) {
      for (ClassIndex a : s.members[g]) {
        for (ClassIndex b : s.members[g + 1]) CHECK(counts[a] >= counts[b]);
      }
    }
  }
}

TEST_CASE("group noise rates are keyed by the true class") {
  const Labels labels{0, 1, 2}, truth{0, 1, 1};
  GroupSplit split;
  split.group_of = {Group::Head, Group::Medium, Group::Tail};
  split.members = {std::vector<ClassIndex>{0}, std::vector<ClassIndex>{1}, std::vector<ClassIndex>{2}};
  const auto r = noise_rate_by_group(labels, truth, split);
  CHECK(r.overall == doctest::Approx(1.0 / 3.0));
  CHECK(r.head == 0.0);
  CHECK(r.med == doctest::Approx(0.5));
  CHECK(r.tail == 0.0);
  CHECK(r.group_sizes == std::array<std::size_t, 3>{1, 2, 0});

  const auto clean = noise_rate_by_group(truth, truth, split);
  CHECK(clean.overall == 0.0);
  CHECK(clean.med == 0.0);
}

TEST_CASE("overall rate is the count-weighted mean of group rates") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(5, Stream::Instances, t);
    const std::size_t C = 3 + rng.below(10), N = 1 + rng.below(300);
    Labels truth(N), labels(N);
    for (std::size_t i = 0; i < N; ++i) {
      truth[i] = static_cast<ClassIndex>(rng.below(C));
      labels[i] = rng.below(3) == 0 ? static_cast<ClassIndex>(rng.below(C)) : truth[i];
    }
    const auto split = group_split(ClassCounts::from_labels(truth, C));
    const auto r = noise_rate_by_group(labels, truth, split);
    const double weighted = (r.head * static_cast<double>(r.group_sizes[0]) +
                             r.med * static_cast<double>(r.group_sizes[1]) +
                             r.tail * static_cast<double>(r.group_sizes[2])) /
                            static_cast<double>(N);
    CHECK(r.overall == doctest::Approx(weighted).epsilon(1e-12));
  }
}

TEST_CASE("per-class noise rate") {
  const Labels labels{0, 1, 0, 2}, truth{0, 0, 0, 2};
  const auto rho = per_class_noise_rate(labels, truth, 4);
  CHECK(rho[0] == doctest::Approx(1.0 / 3.0));
  CHECK(rho[1] == 0.0);
  CHECK(rho[2] == 0.0);
  CHECK(rho[3] == 0.0);
}

TEST_CASE("accuracy") {
  CHECK(accuracy(Labels{0, 1, 1}, Labels{0, 1, 1}) == 1.0);
  CHECK(accuracy(Labels{1, 0}, Labels{0, 1}) == 0.0);
  CHECK(accuracy(Labels{0, 1, 1}, Labels{0, 1, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy(Labels{0}, Labels{0, 1}), ValidationError);
}

TEST_CASE("group accuracy") {
  GroupSplit split;
  split.group_of = {Group::Head, Group::Medium, Group::Tail};
  split.members = {std::vector<ClassIndex>{0}, std::vector<ClassIndex>{1}, std::vector<ClassIndex>{2}};
  const auto a = group_accuracy(Labels{0, 0, 1, 2}, Labels{0, 1, 1, 2}, split);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(0.5));
  CHECK(a[2] == 1.0);
}

TEST_CASE("macro F1") {
  CHECK(macro_f1(Labels{0, 1, 2}, Labels{0, 1, 2}, 3) == 1.0);
  CHECK(macro_f1(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}, 2) == doctest::Approx(0.5));
  CHECK(macro_f1(Labels{0, 0, 0, 0}, Labels{0, 0, 1, 1}, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(macro_f1(Labels{1, 0}, Labels{0, 1}, 2) == 0.0);
}

TEST_CASE("metrics stay in [0, 1]") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(6, Stream::Instances, t);
    const std::size_t C = 1 + rng.below(8), N = 1 + rng.below(50);
    Labels a(N), b(N);
    for (std::size_t i = 0; i < N; ++i) {
      a[i] = static_cast<ClassIndex>(rng.below(C));
      b[i] = static_cast<ClassIndex>(rng.below(C));
    }
    const double f1 = macro_f1(a, b, C);
    CHECK((f1 >= 0.0 && f1 <= 1.0));
    for (double r : per_class_noise_rate(a, b, C)) CHECK((r >= 0.0 && r <= 1.0));
  }
}
