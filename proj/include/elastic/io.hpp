#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "elastic/metric.hpp"

namespace elastic {

/// Full symmetric matrix, one row per line, 17 significant digits. When
/// labels are present each row starts with its label.
void write_distance_csv(const LabeledDistanceMatrix& matrix, const std::filesystem::path& path);

/// Reads a distance CSV (with or without the leading label column) and
/// validates squareness, symmetry (1e-9 relative) and the zero diagonal.
LabeledDistanceMatrix read_distance_csv(const std::filesystem::path& path);

/// labels.csv: a header line naming the columns (first column = mesh name),
/// then one row per mesh.
struct LabelTable {
  std::vector<std::string> columns;             // e.g. {"mesh", "shape", "pose"}
  std::vector<std::vector<std::string>> rows;   // aligned with columns

  int column_index(const std::string& name) const;  // -1 when absent
  std::vector<std::string> column(const std::string& name) const;
};

LabelTable read_label_table(const std::filesystem::path& path);
void write_label_table(const LabelTable& table, const std::filesystem::path& path);

/// Lexicographically sorted .obj/.ply paths directly under `directory`.
std::vector<std::filesystem::path> list_mesh_files(const std::filesystem::path& directory);

/// Loads every mesh in the directory against one shared topology (taken
/// from the lexicographically first file).
std::vector<RegisteredMesh> load_mesh_directory(const std::filesystem::path& directory,
                                                std::vector<std::string>* names = nullptr);

}  // namespace elastic
