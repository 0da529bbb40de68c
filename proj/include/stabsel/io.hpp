#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "stabsel/types.hpp"

namespace stabsel::io {

struct CsvShape {
  Eigen::Index rows = 0;
  int cols = 0;
};

/// Sidecar for external designs: {"n_samples": N, "n_inputs": d}.
CsvShape read_shape_sidecar(const std::filesystem::path& path);

/// Headerless comma-separated doubles, one row per line. Ragged rows or
/// non-numeric fields raise DataError with the line number. Pass -1 to skip
/// a dimension check.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path, Eigen::Index expected_rows = -1,
                                Eigen::Index expected_cols = -1);

/// Shortest round-trip form, so a load reproduces the matrix bit for bit.
void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Writes to <path>.tmp in the same directory, then renames. No partial
/// files survive a crash.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

nlohmann::json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Dataset directory: X.csv, Y.csv, meta.json (shape, groups, truth,
/// provenance; group members and truth pairs are 1-based on disk).
void save_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);
DatasetBundle load_bundle(const std::filesystem::path& dir);

/// FNV-1a over the bytes; stable across platforms, used for cell identity.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace stabsel::io
