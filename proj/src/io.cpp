#include "care/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace care {

namespace fs = std::filesystem;

std::string to_string(DType t) {
  switch (t) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::U32: return "u32";
  }
  return "unknown";
}

namespace {

std::size_t width(DType t) { return t == DType::F64 ? 8 : 4; }

DType dtype_from_string(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f64") return DType::F64;
  if (s == "u32") return DType::U32;
  throw ValidationError("unknown dtype '" + s + "'");
}

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const auto bits = std::bit_cast<U>(value);
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<unsigned char>(bits >> (8 * k)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t k = sizeof(T); k-- > 0;) bits = (bits << 8) | p[k];
  return std::bit_cast<T>(bits);
}

void write_array(const fs::path& path, const ArrayHeader& h, const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "CAREDS v1 dtype=" << to_string(h.dtype) << " rows=" << h.rows << " cols=" << h.cols << "\n";
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

ArrayHeader parse_array_header(std::istream& in, const fs::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing CAREDS header");
  std::istringstream hs(line);
  std::string magic, version, token;
  hs >> magic >> version;
  if (magic != "CAREDS" || version != "v1") throw ValidationError(path.string() + ": bad magic, expected 'CAREDS v1'");
  ArrayHeader h;
  bool have_dtype = false, have_rows = false, have_cols = false;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ValidationError(path.string() + ": malformed header token '" + token + "'");
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    try {
      if (key == "dtype") {
        h.dtype = dtype_from_string(value);
        have_dtype = true;
      } else if (key == "rows") {
        h.rows = std::stoull(value);
        have_rows = true;
      } else if (key == "cols") {
        h.cols = std::stoull(value);
        have_cols = true;
      }
    } catch (const std::logic_error&) {
      throw ValidationError(path.string() + ": malformed header value '" + token + "'");
    }
  }
  if (!have_dtype || !have_rows || !have_cols) throw ValidationError(path.string() + ": header lacks dtype/rows/cols");
  return h;
}

std::vector<unsigned char> read_payload(const fs::path& path, ArrayHeader& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  h = parse_array_header(in, path);
  std::vector<unsigned char> bytes(h.rows * h.cols * width(h.dtype));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw ValidationError(path.string() + ": payload truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(path.string() + ": trailing bytes after payload");
  return bytes;
}

}  // namespace

ArrayHeader read_array_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_array_header(in, path);
}

void write_matrix(const fs::path& path, const Matrix& m, DType dtype) {
  if (dtype == DType::U32) throw ValidationError("matrices are stored as f32 or f64");
  std::vector<unsigned char> payload;
  payload.reserve(m.data().size() * width(dtype));
  for (double v : m.data()) {
    if (dtype == DType::F32) put_le(payload, static_cast<float>(v));
    else put_le(payload, v);
  }
  write_array(path, {dtype, m.rows(), m.cols()}, payload);
}

Matrix read_matrix(const fs::path& path) {
  ArrayHeader h;
  const auto bytes = read_payload(path, h);
  if (h.dtype == DType::U32) throw ValidationError(path.string() + ": expected a floating-point array");
  Matrix m(h.rows, h.cols);
  const std::size_t w = width(h.dtype);
  for (std::size_t k = 0; k < m.data().size(); ++k) {
    m.data()[k] = h.dtype == DType::F32 ? static_cast<double>(get_le<float>(bytes.data() + k * w))
                                        : get_le<double>(bytes.data() + k * w);
  }
  return m;
}

void write_labels(const fs::path& path, std::span<const ClassIndex> labels) {
  std::vector<unsigned char> payload;
  payload.reserve(labels.size() * 4);
  for (ClassIndex y : labels) put_le(payload, y);
  write_array(path, {DType::U32, labels.size(), 1}, payload);
}

Labels read_labels(const fs::path& path) {
  ArrayHeader h;
  const auto bytes = read_payload(path, h);
  if (h.dtype != DType::U32 || h.cols != 1) throw ValidationError(path.string() + ": expected a u32 column");
  Labels out(h.rows);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = get_le<std::uint32_t>(bytes.data() + 4 * k);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_dataset(const fs::path& dir, const Dataset& d, const std::string& meta_json) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json meta = nlohmann::json::parse(meta_json);
  meta["format"] = "CAREDS v1";
  meta["num_samples"] = d.num_samples();
  meta["num_classes"] = d.num_classes;
  meta["feature_dim"] = d.feature_dim();
  meta["has_true_labels"] = d.has_truth();
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  write_matrix(dir / "features.f32", d.features, DType::F32);
  write_matrix(dir / "prototypes.f32", d.prototypes, DType::F32);
  write_labels(dir / "observed_labels.u32", d.observed_labels);
  if (d.true_labels) write_labels(dir / "true_labels.u32", *d.true_labels);
  else fs::remove(dir / "true_labels.u32", ec);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("meta.json: " + std::string(e.what()));
  }
  Dataset d;
  d.num_classes = meta.value("num_classes", std::size_t{0});
  d.features = read_matrix(dir / "features.f32");
  d.prototypes = read_matrix(dir / "prototypes.f32");
  d.observed_labels = read_labels(dir / "observed_labels.u32");
  if (fs::exists(dir / "true_labels.u32")) d.true_labels = read_labels(dir / "true_labels.u32");
  if (meta.contains("num_samples") && meta["num_samples"].get<std::size_t>() != d.num_samples()) {
    throw ValidationError("meta.json num_samples disagrees with features.f32");
  }
  require_valid(d);
  return d;
}

}  // namespace care
