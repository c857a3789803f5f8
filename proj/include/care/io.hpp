#pragma once
// On-disk dataset layout.
//
// Every array file starts with one ASCII line
//   CAREDS v1 dtype=<f32|f64|u32> rows=<r> cols=<c>\n
// followed by rows*cols little-endian values in row-major order.
//
// A dataset directory holds meta.json, features.f32, prototypes.f32,
// observed_labels.u32 and, for synthetic data, true_labels.u32.

#include <filesystem>
#include <string>
#include <vector>

#include "care/core.hpp"

namespace care {

enum class DType { F32, F64, U32 };

std::string to_string(DType t);

struct ArrayHeader {
  DType dtype = DType::F32;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

void write_matrix(const std::filesystem::path& path, const Matrix& m, DType dtype);
Matrix read_matrix(const std::filesystem::path& path);

void write_labels(const std::filesystem::path& path, std::span<const ClassIndex> labels);
Labels read_labels(const std::filesystem::path& path);

ArrayHeader read_array_header(const std::filesystem::path& path);

void save_dataset(const std::filesystem::path& dir, const Dataset& d, const std::string& meta_json = "{}");
/// Loads and validates; throws ValidationError listing every violation.
Dataset load_dataset(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace care
