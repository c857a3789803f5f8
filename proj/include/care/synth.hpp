#pragma once
// Synthetic long-tailed datasets with injected label noise and known truth.

#include <cstdint>
#include <string>

#include "care/core.hpp"

namespace care {

struct ImbalanceSpec {
  double imbalance_factor = 10.0;  // n_1 / n_C
  std::uint64_t max_per_class = 500;
  std::size_t num_classes = 20;
};

enum class NoiseKind { Symmetric, PairFlip, Joint };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Symmetric;
  double rate = 0.5;
  std::uint64_t seed = 0;
};

struct ClusterSpec {
  std::size_t feature_dim = 64;
  double spread = 0.4;  // per-coordinate std of the Gaussian perturbation
  std::uint64_t seed = 0;
};

/// Exponential profile n_c = round(n_1 * IF^(-(c-1)/(C-1))), floor 1.
ClassCounts longtail_profile(const ImbalanceSpec& spec);

/// Random unit prototypes plus unit-normalized noisy copies, class-sorted.
/// Observed labels start equal to the true labels.
Dataset synth_features(const ClassCounts& counts, const ClusterSpec& spec);

/// Row-stochastic C x C matrix of flip probabilities. `class_counts` is only
/// consulted by the joint kind, where flips are attracted to populous classes.
Matrix transition_matrix(NoiseKind kind, double rate, const ClassCounts& class_counts);

/// Resamples observed labels from the transition matrix applied to the
/// true labels. True labels and N are preserved.
Dataset inject_noise(Dataset d, const NoiseSpec& spec);

/// Fraction of samples whose observed label differs from the true label.
double empirical_noise_rate(const Dataset& d);

}  // namespace care
