#pragma once
// Statistical checks of the consensus theory and an independent oracle for
// the accumulation equations.
//
// Expert confidences for the Monte-Carlo trials are drawn as
//   p = (1 - advantage) * Dirichlet(concentration) + advantage * onehot(y)
// so E[p_y] - E[p_c] = advantage for every c != y.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "care/consensus.hpp"
#include "care/core.hpp"
#include "care/rng.hpp"
#include "care/trainer.hpp"

namespace care {

struct ConfidenceGenerator {
  double advantage = 0.2;      // in [0, 1]
  double concentration = 1.0;  // symmetric Dirichlet parameter, > 0
};

/// One draw of an expert confidence vector centred on class y.
std::vector<double> draw_confidence(CounterRng& rng, std::size_t num_classes, ClassIndex y,
                                    const ConfidenceGenerator& gen);
/// Same draw written into p; p.size() is the class count.
void draw_confidence_into(CounterRng& rng, std::span<double> p, ClassIndex y, const ConfidenceGenerator& gen);

inline constexpr std::size_t kMinStatisticalTrials = 1000;

struct TheoryTrialConfig {
  std::size_t trials = 10000;
  std::size_t num_classes = 10;
  std::size_t k = 2;
  ConfidenceGenerator generator;
  std::uint64_t seed = 0;
};

struct Theorem1Result {
  double joint_prob_true = 0.0;       // Pr(y in both Top-K sets)
  double max_joint_prob_wrong = 0.0;  // max over c != y of Pr(c in both)
  double ratio = 0.0;                 // +inf when no wrong class ever co-occurs
  std::size_t trials = 0;
};

/// Two conditionally independent experts per trial; the true class is 0.
Theorem1Result mc_theorem1(const TheoryTrialConfig& cfg);

struct ConsensusPrecisionStats {
  std::uint64_t included = 0;  // P_t(K): Top-K inclusions of t across samples and experts
  std::uint64_t correct = 0;   // T_t(K): inclusions on samples truly of class t
  double precision() const { return included ? static_cast<double>(correct) / static_cast<double>(included) : 0.0; }
  double false_share() const { return included ? 1.0 - precision() : 0.0; }
};

struct PropositionConfig {
  std::size_t trials = 10000;
  std::size_t num_classes = 20;
  std::uint64_t tail_count = 10;    // samples of the tail class per trial
  std::uint64_t other_count = 200;  // samples of every other class per trial
  std::size_t k_tail = 1;
  std::size_t k_global = 8;
  std::size_t num_experts = 2;
  ConfidenceGenerator generator;
  std::size_t bootstrap_resamples = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
};

struct PropositionResult {
  ConsensusPrecisionStats at_k_tail;
  ConsensusPrecisionStats at_k_global;
  double margin = 0.0;  // precision(k_tail) - precision(k_global)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t degenerate_trials = 0;  // trials where either K saw no inclusion of t
  std::size_t trials = 0;
};

/// Per-trial histogram of the tail class's rank in every expert vote:
/// ranked[t*C + r] votes put the tail at rank r, ranked_correct[t*C + r] of
/// them on samples truly of the tail class.
struct PropositionSamples {
  std::size_t num_classes = 0;
  std::size_t trials = 0;
  std::vector<std::uint32_t> ranked;
  std::vector<std::uint32_t> ranked_correct;
};

/// The tail class is the last class index; each trial draws a fresh population.
/// Only the population fields of cfg are used.
PropositionSamples sample_tail_ranks(const PropositionConfig& cfg);

/// Precision at cfg.k_tail and cfg.k_global with the bootstrap interval.
PropositionResult evaluate_k_pair(const PropositionSamples& samples, const PropositionConfig& cfg);

/// sample_tail_ranks followed by evaluate_k_pair.
PropositionResult mc_proposition1(const PropositionConfig& cfg);

/// Inputs for the literal transcription of the accumulation equations.
struct OracleInstance {
  std::size_t num_classes = 0;
  Labels observed;
  /// confidences[e][m] is the N x C matrix of auxiliary expert m at epoch e+1.
  std::vector<std::vector<Matrix>> confidences;
  KPolicy policy;
  double be_weight = 1.0;
};

inline constexpr std::size_t kOracleMaxSamples = 50;
inline constexpr std::size_t kOracleMaxClasses = 10;

/// Frequency matrix after all epochs, computed without any consensus-module code.
Matrix brute_force_frequency(const OracleInstance& instance);

/// Runs the same instance through epoch_consensus.
Matrix consensus_frequency(const OracleInstance& instance);

struct OracleComparison {
  double max_abs_diff = 0.0;
  std::size_t instances = 0;
  bool labels_match = true;
};

/// Random instances with N <= 20, C <= 5, cycling through every K form.
OracleComparison compare_with_oracle(std::size_t instances, std::uint64_t seed);

enum class ExpertCombo { TextOnly, ImageOnly, Both };

/// run_care with BE plus the chosen auxiliary experts.
RunReport ablation_single_expert(const Dataset& d, ExpertCombo which, double be_weight, const TrainConfig& cfg,
                                 RunOptions options = {});

/// Whether every epoch's rectified labels equalled the observed labels.
struct AblationOutcome {
  RunReport report;
  bool labels_never_moved = true;
  double initial_nr = 0.0;
  double final_nr = 0.0;
};

AblationOutcome ablation_outcome(const Dataset& d, ExpertCombo which, double be_weight, const TrainConfig& cfg,
                                 RunOptions options = {});

}  // namespace care
