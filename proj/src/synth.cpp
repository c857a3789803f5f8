#include "care/synth.hpp"

#include <cmath>
#include <random>

#include "care/rng.hpp"

namespace care {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Symmetric: return "symmetric";
    case NoiseKind::PairFlip: return "pairflip";
    case NoiseKind::Joint: return "joint";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "symmetric" || s == "sym" || s == "uniform") return NoiseKind::Symmetric;
  if (s == "pairflip" || s == "asym" || s == "asymmetric") return NoiseKind::PairFlip;
  if (s == "joint") return NoiseKind::Joint;
  throw ValidationError("unknown noise kind '" + s + "'");
}

ClassCounts longtail_profile(const ImbalanceSpec& spec) {
  if (spec.num_classes == 0) throw ValidationError("imbalance profile needs at least one class");
  if (spec.max_per_class == 0) throw ValidationError("max_per_class must be positive");
  if (!(spec.imbalance_factor >= 1.0)) throw ValidationError("imbalance factor must be >= 1");

  const std::size_t C = spec.num_classes;
  ClassCounts out{std::vector<std::uint64_t>(C, spec.max_per_class), 0};
  if (C == 1) return out;
  const double n1 = static_cast<double>(spec.max_per_class);
  for (std::size_t c = 0; c < C; ++c) {
    const double exponent = -static_cast<double>(c) / static_cast<double>(C - 1);
    const double n = std::round(n1 * std::pow(spec.imbalance_factor, exponent));
    out.counts[c] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
  }
  return out;
}

namespace {

std::vector<double> gaussian_vector(CounterRng& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = scale * normal(rng);
  return v;
}

}  // namespace

Dataset synth_features(const ClassCounts& counts, const ClusterSpec& spec) {
  if (spec.feature_dim < 2) throw ValidationError("feature_dim must be at least 2");
  if (!(spec.spread > 0.0)) throw ValidationError("cluster spread must be positive");
  const std::size_t C = counts.num_classes();
  if (C == 0) throw ValidationError("no classes to synthesize");
  const std::size_t D = spec.feature_dim;

  Dataset d;
  d.num_classes = C;
  d.prototypes = Matrix(C, D);
  for (std::size_t c = 0; c < C; ++c) {
    CounterRng rng(spec.seed, Stream::Prototypes, c);
    auto v = gaussian_vector(rng, D, 1.0);
    normalize_in_place(v);
    std::copy(v.begin(), v.end(), d.prototypes.row(c).begin());
  }

  const std::size_t N = counts.total();
  d.features = Matrix(N, D);
  Labels truth;
  truth.reserve(N);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::uint64_t k = 0; k < counts.counts[c]; ++k) truth.push_back(static_cast<ClassIndex>(c));
  }
  for (std::size_t i = 0; i < N; ++i) {
    CounterRng rng(spec.seed, Stream::Features, i);
    auto v = gaussian_vector(rng, D, spec.spread);
    const auto proto = d.prototypes.row(truth[i]);
    for (std::size_t k = 0; k < D; ++k) v[k] += proto[k];
    normalize_in_place(v);
    std::copy(v.begin(), v.end(), d.features.row(i).begin());
  }
  d.observed_labels = truth;
  d.true_labels = std::move(truth);
  return d;
}

Matrix transition_matrix(NoiseKind kind, double rate, const ClassCounts& class_counts) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("noise rate must lie in [0, 1)");
  const std::size_t C = class_counts.num_classes();
  if (C == 0) throw ValidationError("transition matrix needs at least one class");
  Matrix T(C, C);
  if (C == 1) {
    T(0, 0) = 1.0;
    return T;
  }
  for (std::size_t i = 0; i < C; ++i) {
    switch (kind) {
      case NoiseKind::Symmetric:
        for (std::size_t j = 0; j < C; ++j) {
          if (j != i) T(i, j) = rate / static_cast<double>(C - 1);
        }
        break;
      case NoiseKind::PairFlip:
        T(i, (i + 1) % C) = rate;
        break;
      case NoiseKind::Joint: {
        double others = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
          if (k != i) others += static_cast<double>(class_counts.counts[k]);
        }
        for (std::size_t j = 0; j < C; ++j) {
          if (j == i) continue;
          T(i, j) = others > 0.0
                        ? rate * static_cast<double>(class_counts.counts[j]) / others
                        : rate / static_cast<double>(C - 1);
        }
        break;
      }
    }
    // Off-diagonal entries on a 2^-40 grid make every partial sum exact, so
    // the row sums to exactly 1 in any summation order.
    double off = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      if (j == i) continue;
      T(i, j) = std::ldexp(std::round(std::ldexp(T(i, j), 40)), -40);
      off += T(i, j);
    }
    T(i, i) = 1.0 - off;
  }
  return T;
}

Dataset inject_noise(Dataset d, const NoiseSpec& spec) {
  if (!d.true_labels) throw ValidationError("noise injection requires true labels");
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw ValidationError("noise rate must lie in [0, 1)");
  const auto& truth = *d.true_labels;
  const auto counts = ClassCounts::from_labels(truth, d.num_classes);
  const Matrix T = transition_matrix(spec.kind, spec.rate, counts);
  const std::size_t C = d.num_classes;

  d.observed_labels.assign(truth.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CounterRng rng(spec.seed, Stream::Noise, i);
    const double u = rng.uniform();
    const auto row = T.row(truth[i]);
    // Keep the true label unless u falls past the cumulative flip mass.
    ClassIndex label = truth[i];
    if (u >= row[truth[i]]) {
      double acc = row[truth[i]];
      for (std::size_t j = 0; j < C; ++j) {
        if (j == truth[i]) continue;
        acc += row[j];
        label = static_cast<ClassIndex>(j);
        if (u < acc) break;
      }
    }
    d.observed_labels[i] = label;
  }
  return d;
}

double empirical_noise_rate(const Dataset& d) {
  if (!d.true_labels) throw ValidationError("noise rate requires true labels");
  const auto& truth = *d.true_labels;
  if (truth.size() != d.observed_labels.size()) throw ValidationError("label length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += d.observed_labels[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace care
