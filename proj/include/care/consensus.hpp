#pragma once
// Class-adaptive Top-K expert consensus: per-class K selection, reliability
// weighting, frequency accumulation and argmax label rectification.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "care/core.hpp"

namespace care {

enum class KForm { PowerQuarter, Step, Exponential, Logarithmic, Linear, Global };

std::string to_string(KForm form);
KForm k_form_from_string(const std::string& s);

/// Maps a class's sample count to its Top-K size.
///
/// Step and Linear need statistics of the current class counts (group
/// thresholds, n_min / n_max); call fitted() with the counts in force before
/// evaluating K. The other forms ignore fitting.
struct KPolicy {
  KForm form = KForm::PowerQuarter;

  // Step: K per frequency group, with the minimum count of each group.
  std::size_t k_head = 8;
  std::size_t k_med = 4;
  std::size_t k_tail = 2;
  std::uint64_t head_min_count = 1;
  std::uint64_t med_min_count = 1;

  // Linear: counts mapped onto [k_min, k_max].
  std::size_t k_min = 1;
  std::size_t k_max = 9;
  std::uint64_t n_min = 1;
  std::uint64_t n_max = 1;

  // Global: one K for every class.
  std::size_t global_k = 4;

  KPolicy fitted(const ClassCounts& counts) const;
};

/// K for a class with n_c samples, clamped to [1, C]. Throws on n_c == 0.
std::size_t compute_k(const KPolicy& policy, std::uint64_t n_c, std::size_t num_classes);

/// Largest k with k^4 <= n.
std::uint64_t integer_fourth_root(std::uint64_t n);

struct TopKSet {
  std::vector<ClassIndex> classes;  // descending confidence, ties by ascending index
  double mass = 0.0;

  bool contains(ClassIndex c) const;
};

TopKSet topk(std::span<const double> probs, std::size_t k);

/// Top-K mass when the observed label is inside the set, otherwise 1.
double reliability_weight(std::span<const double> probs, const TopKSet& top, ClassIndex observed);

/// p_c when c is in the Top-K set, otherwise 0.
double class_contribution(std::span<const double> probs, const TopKSet& top, ClassIndex c);

/// One auxiliary expert's view of a sample.
struct ExpertVote {
  std::span<const double> probs;
  TopKSet top;
};

/// Adds sum_m alpha_m * g_m(c) over the auxiliary experts plus the base
/// expert's be_weight on the observed label to row i.
void accumulate(FrequencyMatrix& F, std::size_t i, std::span<const ExpertVote> votes,
                ClassIndex observed, double be_weight);

/// Row-wise argmax (lowest index on ties), recount and empirical prior.
RectifiedState rectify(const FrequencyMatrix& F);

/// Starting state before the first epoch: F = scaled BE one-hots, labels =
/// observed labels, counts from the observed labels.
struct ConsensusState {
  FrequencyMatrix frequency;
  RectifiedState rectified;

  static ConsensusState initial(std::span<const ClassIndex> observed, std::size_t num_classes,
                                double be_weight);
};

struct ConsensusOptions {
  double be_weight = 1.0;
};

/// One consensus pass. `experts` holds an N x C confidence matrix per
/// auxiliary expert (TE, IE, or file-backed). Each sample's K comes from the
/// previous epoch's count of its previous rectified class. Updates the
/// frequency matrix in place and replaces the rectified state.
void epoch_consensus(ConsensusState& state, std::span<const ClassIndex> observed,
                     std::span<const Matrix* const> experts, const KPolicy& policy,
                     const ConsensusOptions& options);

}  // namespace care
