#pragma once
// Implementations behind the `care` command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "care/config.hpp"
#include "care/trainer.hpp"

namespace care {

/// Theorem-1 pass threshold for the default trial setup (C=10, K=2,
/// advantage 0.2, concentration 1), locked from a 10^6-trial calibration run.
inline constexpr double kTheorem1Threshold = 50.0;

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitVerification = 3 };

Dataset synthesize(const RunConfig& cfg);

/// Writes a dataset directory. Returns the synthesized dataset.
Dataset cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Runs the rectify-then-train loop and writes metrics.jsonl, curves.csv,
/// rectified_labels.u32, predictions.u32, head.f64 and report.json.
RunReport cmd_rectify(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                      const std::filesystem::path& out_dir);

struct VerifyOutcome {
  nlohmann::json report;
  bool all_passed = false;
  std::vector<std::string> warnings;
};

VerifyOutcome cmd_verify(const RunConfig& cfg);

/// MetricRecord for a finished run against its dataset.
nlohmann::json cmd_evaluate(const std::filesystem::path& run_dir, const std::filesystem::path& dataset_dir);

nlohmann::json to_json(const EpochRecord& r);

}  // namespace care
