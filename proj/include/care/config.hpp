#pragma once
// Effective configuration for every command, with JSON round-tripping.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "care/consensus.hpp"
#include "care/synth.hpp"
#include "care/trainer.hpp"
#include "care/verify.hpp"

namespace care {

struct VerifySettings {
  std::size_t trials = 10000;
  std::size_t theorem_classes = 10;
  std::size_t theorem_k = 2;
  double advantage = 0.2;
  double concentration = 1.0;
  double theorem_threshold = 0.0;  // 0 means "use the calibrated default"
  std::size_t prop_classes = 20;
  std::uint64_t prop_tail_count = 10;
  std::uint64_t prop_other_count = 200;
  std::size_t k_tail = 1;
  std::size_t k_global = 8;
  std::size_t bootstrap = 1000;
  std::size_t oracle_instances = 1000;
  bool run_ablation = true;

  bool operator==(const VerifySettings&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;

  // synth
  double imbalance_factor = 10.0;
  std::uint64_t max_per_class = 500;
  std::size_t num_classes = 20;
  NoiseKind noise = NoiseKind::Symmetric;
  double noise_rate = 0.5;
  std::size_t feature_dim = 64;
  double spread = 0.4;

  // rectify
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  LossKind loss = LossKind::LA;
  KForm k_form = KForm::PowerQuarter;
  std::size_t k_global = 4;
  std::size_t k_head = 8, k_med = 4, k_tail = 2;
  std::size_t k_min = 1, k_max = 9;
  double scale = kDefaultScale;
  double be_weight = 1.0;
  std::string te_file;
  std::string ie_file;

  VerifySettings verify;

  bool operator==(const RunConfig&) const = default;

  ImbalanceSpec imbalance_spec() const;
  NoiseSpec noise_spec() const;
  ClusterSpec cluster_spec() const;
  TrainConfig train_config() const;
  KPolicy k_policy() const;

  /// Range checks on every field; throws ValidationError.
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_config(const std::string& path);

}  // namespace care
