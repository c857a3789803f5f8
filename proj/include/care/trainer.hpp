#pragma once
// Logit-adjusted training of the cosine head and the full rectify-then-train
// loop: each epoch runs a consensus pass, recounts the rectified labels and
// then one minibatch SGD pass against them.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "care/consensus.hpp"
#include "care/core.hpp"
#include "care/experts.hpp"

namespace care {

enum class LossKind { LA, CE };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  LossKind loss = LossKind::LA;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizerState {
  Matrix velocity;
  std::uint64_t step = 0;
};

/// -log softmax(z + log prior)[y], max-subtracted.
double la_loss(std::span<const double> logits, ClassIndex y, std::span<const double> prior);

/// Plain softmax cross-entropy.
double ce_loss(std::span<const double> logits, ClassIndex y);

/// Add-one smoothed prior (n_c + 1) / (N + C).
std::vector<double> smoothed_prior(const ClassCounts& counts);

struct LossAndGrad {
  double loss = 0.0;  // batch mean
  Matrix grad;        // d(mean loss) / d(weights), C x D
};

/// Mean logit-adjusted loss over the batch rows of `features` and its exact
/// gradient with respect to the raw (unnormalized) head weights. An empty
/// prior means plain cross-entropy.
LossAndGrad la_loss_and_grad(const CosineHead& head, const Matrix& features,
                             std::span<const std::size_t> batch, std::span<const ClassIndex> labels,
                             std::span<const double> prior);

/// Gradient half of la_loss_and_grad.
Matrix la_grad(const CosineHead& head, const Matrix& features, std::span<const std::size_t> batch,
               std::span<const ClassIndex> labels, std::span<const double> prior);

/// velocity = momentum * velocity + grad + wd * W; W -= lr * velocity; rows renormalized.
void sgd_step(CosineHead& head, const Matrix& grad, OptimizerState& opt, const TrainConfig& cfg);

struct RunOptions {
  KPolicy policy;
  double scale = kDefaultScale;
  double be_weight = 1.0;
  bool use_te = true;
  bool use_ie = true;
  std::optional<Matrix> te_override;  // file-backed confidences replace computed ones
  std::optional<Matrix> ie_override;
  /// Called after each consensus pass, before that epoch's SGD pass.
  std::function<void(std::size_t epoch, const ConsensusState&)> on_consensus;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::optional<double> nr_overall, nr_head, nr_med, nr_tail;
  std::optional<double> train_loss;
  std::optional<double> acc_eval;
  std::optional<double> macro_f1;
  std::optional<double> acc_head, acc_med, acc_tail;
  std::vector<std::uint64_t> class_counts;
};

struct RunReport {
  EpochRecord initial;  // state before the first consensus pass
  std::vector<EpochRecord> epochs;
  CosineHead head;
  RectifiedState final_state;
  Labels predictions;  // argmax of the final head's raw logits
};

Labels head_predictions(const CosineHead& head, const Dataset& d);

/// Noise-rate and accuracy fields of an epoch record. Truth-dependent fields
/// stay empty when the dataset carries no ground truth.
EpochRecord describe_epoch(const Dataset& d, std::size_t epoch, std::span<const ClassIndex> rectified,
                           std::span<const ClassIndex> predictions, const ClassCounts& counts);

RunReport run_care(const Dataset& d, const TrainConfig& cfg, const RunOptions& options);

}  // namespace care
