#include "care/experts.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "care/rng.hpp"

namespace care {

CosineHead CosineHead::random(std::size_t num_classes, std::size_t feature_dim, double scale,
                              std::uint64_t seed) {
  if (!(scale > 0.0)) throw ValidationError("cosine head scale must be positive");
  CosineHead head{Matrix(num_classes, feature_dim), scale};
  for (std::size_t c = 0; c < num_classes; ++c) {
    CounterRng rng(seed, Stream::HeadInit, c);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto row = head.weights.row(c);
    for (double& x : row) x = normal(rng);
    normalize_in_place(row);
  }
  return head;
}

std::vector<double> CosineHead::logits(std::span<const double> feature) const {
  std::vector<double> z(num_classes());
  for (std::size_t c = 0; c < z.size(); ++c) {
    const auto w = weights.row(c);
    const double norm = l2_norm(w);
    z[c] = norm > 0.0 ? scale * dot(w, feature) / norm : 0.0;
  }
  return z;
}

void CosineHead::normalize_rows() {
  for (std::size_t c = 0; c < weights.rows(); ++c) normalize_in_place(weights.row(c));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& x : p) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

namespace {

void check_index(const Dataset& d, std::size_t i) {
  if (i >= d.num_samples()) throw ValidationError("sample index out of range");
}

std::vector<double> prototype_logits(const Dataset& d, std::size_t i, double scale) {
  const auto f = d.features.row(i);
  std::vector<double> z(d.num_classes);
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = scale * dot(d.prototypes.row(c), f);
  return z;
}

}  // namespace

ConfidenceVector te_confidence(const Dataset& d, std::size_t i, double scale) {
  check_index(d, i);
  return ConfidenceVector(softmax(prototype_logits(d, i, scale)));
}

ConfidenceVector ie_confidence(const CosineHead& head, const Dataset& d, std::size_t i) {
  check_index(d, i);
  if (head.num_classes() != d.num_classes || head.feature_dim() != d.feature_dim()) {
    throw ValidationError("cosine head shape does not match dataset");
  }
  return ConfidenceVector(softmax(head.logits(d.features.row(i))));
}

std::vector<double> be_confidence(ClassIndex observed, std::size_t num_classes, double be_weight) {
  if (observed >= num_classes) throw ValidationError("observed label out of range");
  if (!(be_weight > 0.0 && be_weight <= 1.0)) throw ValidationError("be_weight must lie in (0, 1]");
  std::vector<double> p(num_classes, 0.0);
  p[observed] = be_weight;
  return p;
}

Matrix te_confidences(const Dataset& d, double scale) {
  Matrix out(d.num_samples(), d.num_classes);
  for (std::size_t i = 0; i < d.num_samples(); ++i) {
    const auto p = softmax(prototype_logits(d, i, scale));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

Matrix ie_confidences(const CosineHead& head, const Dataset& d) {
  if (head.num_classes() != d.num_classes || head.feature_dim() != d.feature_dim()) {
    throw ValidationError("cosine head shape does not match dataset");
  }
  Matrix out(d.num_samples(), d.num_classes);
  for (std::size_t i = 0; i < d.num_samples(); ++i) {
    const auto p = softmax(head.logits(d.features.row(i)));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

// --- CARECONF v1 -----------------------------------------------------------
//
//   CARECONF v1 N=<n> C=<c> fmt=<csv|f32le> [key=value ...]\n
//   [# comment lines]\n
//   payload: N rows of C probabilities, decimal text (csv) or
//            row-major little-endian float32 (f32le)

namespace {

struct ConfHeader {
  std::size_t n = 0;
  std::size_t c = 0;
  ConfidenceFormat format = ConfidenceFormat::Csv;
};

std::size_t parse_count(const std::string& value, const std::string& what) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("malformed CARECONF header: bad " + what + " '" + value + "'");
  }
  return out;
}

ConfHeader parse_header(const std::string& line) {
  std::istringstream in(line);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "CARECONF" || version != "v1") throw ValidationError("malformed CARECONF header: bad magic");
  ConfHeader h;
  bool have_n = false, have_c = false, have_fmt = false;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed CARECONF header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "N") {
      h.n = parse_count(value, "N");
      have_n = true;
    } else if (key == "C") {
      h.c = parse_count(value, "C");
      have_c = true;
    } else if (key == "fmt") {
      if (value == "csv") h.format = ConfidenceFormat::Csv;
      else if (value == "f32le") h.format = ConfidenceFormat::F32le;
      else throw ValidationError("malformed CARECONF header: unknown fmt '" + value + "'");
      have_fmt = true;
    }
    // Other key=value tokens are provenance and ignored.
  }
  if (!have_n || !have_c || !have_fmt) throw ValidationError("malformed CARECONF header: missing N, C or fmt");
  return h;
}

float read_f32le(const unsigned char* bytes) {
  std::uint32_t bits = 0;
  for (int k = 3; k >= 0; --k) bits = (bits << 8) | bytes[k];
  return std::bit_cast<float>(bits);
}

void write_f32le(std::ostream& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                  static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

Matrix load_confidence_file(const std::filesystem::path& path, std::size_t num_samples,
                            std::size_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open confidence file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("malformed CARECONF header: empty file");
  const ConfHeader h = parse_header(line);
  if (h.n != num_samples || h.c != num_classes) {
    throw ValidationError("confidence file dims N=" + std::to_string(h.n) + " C=" + std::to_string(h.c) +
                          " do not match dataset N=" + std::to_string(num_samples) +
                          " C=" + std::to_string(num_classes));
  }
  while (in.peek() == '#') std::getline(in, line);

  Matrix out(h.n, h.c);
  if (h.format == ConfidenceFormat::Csv) {
    for (std::size_t r = 0; r < h.n; ++r) {
      if (!std::getline(in, line)) throw ValidationError("confidence file truncated at row " + std::to_string(r));
      std::istringstream row(line);
      std::string cell;
      std::size_t c = 0;
      while (std::getline(row, cell, ',')) {
        if (c >= h.c) throw ValidationError("too many columns in row " + std::to_string(r));
        try {
          std::size_t used = 0;
          out(r, c) = std::stod(cell, &used);
        } catch (const std::exception&) {
          throw ValidationError("unparsable probability in row " + std::to_string(r));
        }
        ++c;
      }
      if (c != h.c) throw ValidationError("row " + std::to_string(r) + " has " + std::to_string(c) + " columns");
    }
  } else {
    std::vector<unsigned char> bytes(h.n * h.c * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw ValidationError("confidence file payload truncated");
    for (std::size_t k = 0; k < h.n * h.c; ++k) out.data()[k] = read_f32le(bytes.data() + 4 * k);
  }

  for (std::size_t r = 0; r < h.n; ++r) {
    if (!ConfidenceVector::on_simplex(out.row(r), kConfidenceFileTolerance)) {
      double sum = 0.0;
      for (double x : out.row(r)) sum += x;
      std::ostringstream msg;
      msg << "confidence row " << r << " is not on the simplex (sum " << sum << ")";
      throw ValidationError(msg.str());
    }
  }
  return out;
}

void save_confidence_file(const std::filesystem::path& path, const Matrix& probs, ConfidenceFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write confidence file " + path.string());
  out << "CARECONF v1 N=" << probs.rows() << " C=" << probs.cols()
      << " fmt=" << (format == ConfidenceFormat::Csv ? "csv" : "f32le") << "\n";
  if (format == ConfidenceFormat::Csv) {
    char buf[32];
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      for (std::size_t c = 0; c < probs.cols(); ++c) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), probs(r, c));
        if (c) out << ',';
        out.write(buf, end - buf);
      }
      out << '\n';
    }
  } else {
    for (double v : probs.data()) write_f32le(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed writing confidence file " + path.string());
}

}  // namespace care
