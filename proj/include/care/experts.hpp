#pragma once
// The three confidence sources: text prototypes (TE), the trainable cosine
// classifier (IE) and the observed label itself (BE). Confidence matrices can
// also be loaded from CARECONF files produced outside this library.

#include <filesystem>
#include <span>
#include <string>

#include "care/core.hpp"

namespace care {

inline constexpr double kDefaultScale = 25.0;
inline constexpr double kConfidenceFileTolerance = 1e-4;

/// Linear classifier over cosine similarity: z_c = s * <w_c/|w_c|, f>.
struct CosineHead {
  Matrix weights;  // C x D
  double scale = kDefaultScale;

  std::size_t num_classes() const { return weights.rows(); }
  std::size_t feature_dim() const { return weights.cols(); }

  /// Random unit rows drawn from the HeadInit stream.
  static CosineHead random(std::size_t num_classes, std::size_t feature_dim, double scale,
                           std::uint64_t seed);

  /// Logits for a unit-norm feature vector.
  std::vector<double> logits(std::span<const double> feature) const;
  void normalize_rows();
};

enum class ExpertKind { Text, Image, Base, File };

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

ConfidenceVector te_confidence(const Dataset& d, std::size_t i, double scale);
ConfidenceVector ie_confidence(const CosineHead& head, const Dataset& d, std::size_t i);

/// One-hot at the observed label scaled by be_weight. Not a distribution when
/// be_weight < 1, so a plain vector is returned.
std::vector<double> be_confidence(ClassIndex observed, std::size_t num_classes, double be_weight = 1.0);

/// N x C matrices of expert confidences for a whole dataset.
Matrix te_confidences(const Dataset& d, double scale);
Matrix ie_confidences(const CosineHead& head, const Dataset& d);

enum class ConfidenceFormat { Csv, F32le };

/// Reads a CARECONF v1 file and checks its shape and every row's simplex sum.
Matrix load_confidence_file(const std::filesystem::path& path, std::size_t num_samples,
                            std::size_t num_classes);
void save_confidence_file(const std::filesystem::path& path, const Matrix& probs,
                          ConfidenceFormat format);

}  // namespace care
