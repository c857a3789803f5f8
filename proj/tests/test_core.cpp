#include <doctest.h>

#include <cmath>
#include <random>

#include "care/core.hpp"
#include "care/rng.hpp"
#include "care/synth.hpp"

using namespace care;

namespace {

Dataset tiny_dataset() {
  return synth_features(ClassCounts{{3, 2, 2}, 0}, ClusterSpec{4, 0.3, 7});
}

bool has_kind(const std::vector<Violation>& vs, ViolationKind k, const std::string& where) {
  for (const auto& v : vs) {
    if (v.kind == k && v.where == where) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("argmax takes the lowest index on ties") {
  const std::vector<double> v{0.2, 0.4, 0.4, 0.1};
  CHECK(argmax(v) == 1);
  const std::vector<double> zeros(5, 0.0);
  CHECK(argmax(zeros) == 0);
}

TEST_CASE("normalize_in_place") {
  std::vector<double> v{3.0, 4.0};
  normalize_in_place(v);
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(l2_norm(v) == doctest::Approx(1.0));
  std::vector<double> z{0.0, 0.0};
  normalize_in_place(z);
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("a synthesized dataset has no violations") {
  CHECK(validate_dataset(tiny_dataset()).empty());
  const auto big = synth_features(longtail_profile({10.0, 50, 8}), ClusterSpec{16, 0.4, 1});
  CHECK(validate_dataset(big).empty());
}

TEST_CASE("out-of-range label is reported with its index") {
  auto d = tiny_dataset();
  d.observed_labels[3] = static_cast<ClassIndex>(d.num_classes);
  const auto vs = validate_dataset(d);
  CHECK(has_kind(vs, ViolationKind::LabelOutOfRange, "observed_labels[3]"));
  try {
    require_valid(d);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("observed_labels[3]") != std::string::npos);
  }
}

TEST_CASE("feature row of norm 0.5 is rejected") {
  auto d = tiny_dataset();
  for (double& x : d.features.row(2)) x *= 0.5;
  CHECK(has_kind(validate_dataset(d), ViolationKind::NonNormalizedRow, "features[2]"));
}

TEST_CASE("length mismatches and empty dimensions") {
  auto d = tiny_dataset();
  d.observed_labels.pop_back();
  CHECK(has_kind(validate_dataset(d), ViolationKind::LengthMismatch, "observed_labels"));

  Dataset empty;
  const auto vs = validate_dataset(empty);
  CHECK(has_kind(vs, ViolationKind::EmptyDimension, "features"));
  CHECK(has_kind(vs, ViolationKind::EmptyDimension, "num_classes"));

  auto p = tiny_dataset();
  p.prototypes = Matrix(2, 4, 0.5);
  CHECK(has_kind(validate_dataset(p), ViolationKind::LengthMismatch, "prototypes"));
}

TEST_CASE("all violations are listed, not just the first") {
  auto d = tiny_dataset();
  d.observed_labels[0] = 99;
  d.observed_labels[4] = 99;
  for (double& x : d.features.row(1)) x *= 2.0;
  CHECK(validate_dataset(d).size() == 3);
}

TEST_CASE("confidence vectors: normalized accepted, perturbed rejected") {
  std::size_t accepted = 0, rejected = 0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    CounterRng rng(11, Stream::Instances, t);
    const std::size_t C = 1 + rng.below(12);
    std::vector<double> p(C);
    double s = 0.0;
    for (double& x : p) s += (x = rng.uniform() + 1e-3);
    for (double& x : p) x /= s;
    CHECK_NOTHROW(ConfidenceVector{p});
    ++accepted;

    const std::size_t k = rng.below(C);
    auto up = p;
    up[k] += 0.01;
    CHECK_THROWS_AS(ConfidenceVector{up}, ValidationError);
    auto down = p;
    down[k] -= 0.01;
    CHECK_THROWS_AS(ConfidenceVector{down}, ValidationError);
    rejected += 2;
  }
  CHECK(accepted == 500);
  CHECK(rejected == 1000);
}

TEST_CASE("simplex check rejects negatives and empty vectors") {
  CHECK_FALSE(ConfidenceVector::on_simplex(std::vector<double>{1.2, -0.2}));
  CHECK_FALSE(ConfidenceVector::on_simplex(std::vector<double>{}));
  CHECK(ConfidenceVector::on_simplex(std::vector<double>{1.0}));
}

TEST_CASE("class counts") {
  const Labels y{0, 2, 2, 1, 2};
  const auto c = ClassCounts::from_labels(y, 4, 3);
  CHECK(c.counts == std::vector<std::uint64_t>{1, 1, 3, 0});
  CHECK(c.total() == 5);
  CHECK(c.epoch == 3);
  CHECK_THROWS_AS(ClassCounts::from_labels(y, 2), ValidationError);
}

TEST_CASE("frequency matrix starts at weighted one-hots and only grows") {
  const Labels y{1, 0};
  auto F = FrequencyMatrix::from_labels(y, 3, 0.5);
  CHECK(F.row(0)[1] == 0.5);
  CHECK(F.row(1)[0] == 0.5);
  CHECK(F.row(1)[2] == 0.0);
  const std::vector<double> inc{0.1, 0.0, 0.2};
  F.add_to_row(0, inc);
  CHECK(F.row(0)[2] == doctest::Approx(0.2));
  const std::vector<double> bad{0.0, -0.1, 0.0};
  CHECK_THROWS_AS(F.add_to_row(0, bad), ValidationError);
  CHECK(F.row(0)[1] == 0.5);
}

TEST_CASE("counter rng is a pure function of its key") {
  CounterRng a(5, Stream::Noise, 9), b(5, Stream::Noise, 9), c(5, Stream::Noise, 10);
  const auto a1 = a(), b1 = b();
  CHECK(a1 == b1);
  CHECK(a1 != c());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(a.below(7) < 7);
  }
}
