#include <doctest.h>

#include <cmath>
#include <random>

#include "care/rng.hpp"
#include "care/synth.hpp"
#include "care/trainer.hpp"

using namespace care;

namespace {

struct Instance {
  CosineHead head;
  Matrix features;
  std::vector<std::size_t> batch;
  Labels labels;
  std::vector<double> prior;
};

Instance random_instance(std::uint64_t t, std::size_t C) {
  CounterRng rng(21, Stream::Instances, t);
  std::normal_distribution<double> gauss;
  const std::size_t D = 2 + rng.below(10), B = 1 + rng.below(10);
  Instance in;
  in.head.scale = 1.0 + 29.0 * rng.uniform();
  in.head.weights = Matrix(C, D);
  for (double& w : in.head.weights.data()) w = gauss(rng);
  in.features = Matrix(B, D);
  for (std::size_t i = 0; i < B; ++i) {
    for (double& x : in.features.row(i)) x = gauss(rng);
    normalize_in_place(in.features.row(i));
    in.batch.push_back(i);
    in.labels.push_back(static_cast<ClassIndex>(rng.below(C)));
  }
  double s = 0.0;
  in.prior.resize(C);
  for (double& p : in.prior) s += (p = 0.02 + rng.uniform());
  for (double& p : in.prior) p /= s;
  return in;
}

double batch_loss(const CosineHead& head, const Instance& in) {
  return la_loss_and_grad(head, in.features, in.batch, in.labels, in.prior).loss;
}

Dataset standard_dataset(double noise_rate, std::uint64_t seed = 0) {
  const auto clean = synth_features(longtail_profile({10.0, 500, 20}), ClusterSpec{64, 0.4, seed});
  return inject_noise(clean, {NoiseKind::Symmetric, noise_rate, seed});
}

}  // namespace

TEST_CASE("logit-adjusted loss worked example") {
  const std::vector<double> z{0.0, 0.0}, prior{0.75, 0.25};
  CHECK(la_loss(z, 1, prior) == doctest::Approx(1.386294).epsilon(1e-6));
  CHECK(la_loss(std::vector<double>{3.0}, 0, std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("uniform prior reduces to cross-entropy and the loss is never negative") {
  for (std::uint64_t t = 0; t < 500; ++t) {
    CounterRng rng(22, Stream::Instances, t);
    const std::size_t C = 1 + rng.below(12);
    std::vector<double> z(C), prior(C);
    double s = 0.0;
    for (double& x : z) x = 60.0 * (rng.uniform() - 0.5);
    for (double& p : prior) s += (p = 1e-4 + rng.uniform());
    for (double& p : prior) p /= s;
    const auto y = static_cast<ClassIndex>(rng.below(C));
    const std::vector<double> uniform(C, 1.0 / static_cast<double>(C));
    CHECK(std::abs(la_loss(z, y, uniform) - ce_loss(z, y)) <= 1e-10);
    CHECK(la_loss(z, y, prior) >= 0.0);
  }
}

TEST_CASE("loss input validation") {
  const std::vector<double> z{1.0, 2.0};
  CHECK_THROWS_AS(la_loss(z, 2, std::vector<double>{0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(la_loss(z, 0, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(la_loss(z, 0, std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST_CASE("smoothed prior keeps empty classes positive") {
  const auto p = smoothed_prior(ClassCounts{{6, 0, 2}, 0});
  CHECK(p[0] == doctest::Approx(7.0 / 11.0));
  CHECK(p[1] == doctest::Approx(1.0 / 11.0));
  CHECK(p[2] == doctest::Approx(3.0 / 11.0));
}

TEST_CASE("analytic gradient matches central differences on 5-class instances") {
  const double h = 1e-4;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto in = random_instance(t, 5);
    const Matrix g = la_grad(in.head, in.features, in.batch, in.labels, in.prior);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t k = 0; k < g.data().size(); ++k) {
      CosineHead plus = in.head, minus = in.head;
      plus.weights.data()[k] += h;
      minus.weights.data()[k] -= h;
      const double numeric = (batch_loss(plus, in) - batch_loss(minus, in)) / (2.0 * h);
      diff2 += (g.data()[k] - numeric) * (g.data()[k] - numeric);
      norm2 += std::max(g.data()[k] * g.data()[k], numeric * numeric);
    }
    CHECK(std::sqrt(diff2) <= 1e-5 * std::max(std::sqrt(norm2), 1e-12));
  }
}

TEST_CASE("uniform prior gradient equals the cross-entropy gradient") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto in = random_instance(1000 + t, 4);
    const std::vector<double> uniform(4, 0.25);
    const auto a = la_loss_and_grad(in.head, in.features, in.batch, in.labels, uniform);
    const auto b = la_loss_and_grad(in.head, in.features, in.batch, in.labels, {});
    CHECK(std::abs(a.loss - b.loss) <= 1e-10);
    for (std::size_t k = 0; k < a.grad.data().size(); ++k) {
      CHECK(std::abs(a.grad.data()[k] - b.grad.data()[k]) <= 1e-10);
    }
  }
}

TEST_CASE("saturated softmax has a vanishing gradient") {
  CosineHead head{Matrix(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}), 200.0};
  const Matrix f(1, 3, std::vector<double>{0.0, 1.0, 0.0});
  const std::vector<std::size_t> batch{0};
  const Labels y{1};
  const auto lg = la_loss_and_grad(head, f, batch, y, {});
  for (double g : lg.grad.data()) CHECK(std::abs(g) < 1e-12);
  CHECK(lg.loss < 1e-12);
}

TEST_CASE("sgd step reductions") {
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.1;
  auto head = CosineHead::random(3, 4, 25.0, 1);
  const auto before = head.weights;

  OptimizerState opt;
  sgd_step(head, Matrix(3, 4, 0.0), opt, cfg);
  for (std::size_t k = 0; k < before.data().size(); ++k) CHECK(head.weights.data()[k] == doctest::Approx(before.data()[k]));

  Matrix g(3, 4);
  for (std::size_t k = 0; k < g.data().size(); ++k) g.data()[k] = 0.01 * static_cast<double>(k);
  Matrix expected = before;
  for (std::size_t k = 0; k < g.data().size(); ++k) expected.data()[k] -= 0.1 * g.data()[k];
  for (std::size_t r = 0; r < 3; ++r) normalize_in_place(expected.row(r));
  sgd_step(head, g, opt, cfg);
  for (std::size_t k = 0; k < g.data().size(); ++k) CHECK(head.weights.data()[k] == doctest::Approx(expected.data()[k]));

  CHECK_THROWS_AS(sgd_step(head, Matrix(2, 4), opt, cfg), ValidationError);
}

TEST_CASE("momentum accumulates velocity") {
  TrainConfig cfg;
  cfg.momentum = 0.5;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 1e-3;
  CosineHead head{Matrix(1, 2, std::vector<double>{1.0, 0.0}), 1.0};
  OptimizerState opt;
  const Matrix g(1, 2, std::vector<double>{0.0, -1.0});
  sgd_step(head, g, opt, cfg);
  sgd_step(head, g, opt, cfg);
  CHECK(opt.velocity(0, 1) == doctest::Approx(-1.5));
  CHECK(opt.step == 2);
}

TEST_CASE("train config validation") {
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ok;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ok;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(loss_kind_from_string(to_string(LossKind::CE)) == LossKind::CE);
  CHECK_THROWS_AS(loss_kind_from_string("focal"), ValidationError);
}

TEST_CASE("seeded runs are identical") {
  const auto d = standard_dataset(0.5);
  TrainConfig cfg;
  cfg.epochs = 4;
  const auto a = run_care(d, cfg, {});
  const auto b = run_care(d, cfg, {});
  CHECK(a.head.weights == b.head.weights);
  CHECK(a.final_state.labels == b.final_state.labels);
  CHECK(a.predictions == b.predictions);
  REQUIRE(a.epochs.size() == 4);
  for (std::size_t e = 0; e < 4; ++e) {
    CHECK(*a.epochs[e].train_loss == *b.epochs[e].train_loss);
    CHECK(*a.epochs[e].nr_overall == *b.epochs[e].nr_overall);
    CHECK(a.epochs[e].class_counts == b.epochs[e].class_counts);
  }
}

TEST_CASE("epoch records describe the run") {
  const auto d = standard_dataset(0.5);
  TrainConfig cfg;
  cfg.epochs = 3;
  std::vector<ClassCounts> seen;
  RunOptions opt;
  opt.on_consensus = [&](std::size_t, const ConsensusState& s) { seen.push_back(s.rectified.counts); };
  const auto r = run_care(d, cfg, opt);
  CHECK(r.initial.epoch == 0);
  CHECK(*r.initial.nr_overall == empirical_noise_rate(d));
  REQUIRE(seen.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(r.epochs[e].epoch == e + 1);
    CHECK(r.epochs[e].class_counts == seen[e].counts);
    CHECK(seen[e].epoch == e + 1);
    CHECK(*r.epochs[e].train_loss >= 0.0);
  }
}

TEST_CASE("without truth the noise fields stay empty") {
  auto d = standard_dataset(0.2);
  d.true_labels.reset();
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto r = run_care(d, cfg, {});
  CHECK_FALSE(r.initial.nr_overall.has_value());
  CHECK_FALSE(r.epochs[0].acc_eval.has_value());
  CHECK(r.epochs[0].train_loss.has_value());
}

TEST_CASE("clean data with oracle experts never leaves the truth") {
  const auto d = standard_dataset(0.0);
  const std::size_t N = d.num_samples(), C = d.num_classes;
  Matrix oracle(N, C, 0.01 / static_cast<double>(C - 1));
  for (std::size_t i = 0; i < N; ++i) oracle(i, (*d.true_labels)[i]) = 0.99;
  RunOptions opt;
  opt.te_override = oracle;
  opt.ie_override = oracle;
  bool stayed = true;
  opt.on_consensus = [&](std::size_t, const ConsensusState& s) { stayed = stayed && s.rectified.labels == *d.true_labels; };
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto r = run_care(d, cfg, opt);
  CHECK(stayed);
  CHECK(*r.epochs.back().nr_overall == 0.0);
  CHECK(*r.epochs.back().acc_eval > 0.5);
}

TEST_CASE("trained head on clean data keeps up with nearest prototype") {
  const auto d = standard_dataset(0.0);
  std::size_t proto_hits = 0;
  const auto te = te_confidences(d, kDefaultScale);
  for (std::size_t i = 0; i < d.num_samples(); ++i) proto_hits += argmax(te.row(i)) == (*d.true_labels)[i];
  const double baseline = static_cast<double>(proto_hits) / static_cast<double>(d.num_samples());
  const auto r = run_care(d, TrainConfig{}, {});
  CHECK(*r.epochs.back().acc_eval > baseline - 0.02);
}

TEST_CASE("logit adjustment helps the tail over plain cross-entropy") {
  const auto d = standard_dataset(0.5);
  TrainConfig la, ce;
  ce.loss = LossKind::CE;
  const auto a = run_care(d, la, {});
  const auto b = run_care(d, ce, {});
  CHECK(*a.epochs.back().acc_tail >= *b.epochs.back().acc_tail);
}

TEST_CASE("expert override shape is checked") {
  const auto d = standard_dataset(0.2);
  RunOptions opt;
  opt.ie_override = Matrix(3, 3, 1.0 / 3.0);
  CHECK_THROWS_AS(run_care(d, TrainConfig{}, opt), ValidationError);
}
