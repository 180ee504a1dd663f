#include "elastic/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace elastic {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

void write_distance_csv(const LabeledDistanceMatrix& matrix, const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.string().c_str(), "wb");
  if (!out) throw InputError("cannot write distance matrix: " + path.string());
  const bool labeled = !matrix.labels.empty();
  for (std::int64_t i = 0; i < matrix.size(); ++i) {
    if (labeled) std::fprintf(out, "%s,", matrix.labels[static_cast<std::size_t>(i)].c_str());
    for (std::int64_t j = 0; j < matrix.size(); ++j)
      std::fprintf(out, j + 1 < matrix.size() ? "%.17g," : "%.17g\n", matrix.distances(i, j));
  }
  if (std::fclose(out) != 0) throw InputError("write failed: " + path.string());
}

LabeledDistanceMatrix read_distance_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open distance matrix: " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<double> row;
    double v;
    std::size_t start = 0;
    if (!fields.empty() && !parse_double(fields[0], v)) {
      labels.push_back(fields[0]);
      start = 1;
    }
    for (std::size_t i = start; i < fields.size(); ++i) {
      if (!parse_double(fields[i], v))
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": malformed number '" + fields[i] + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path.string() + ": empty distance matrix");
  const std::size_t n = rows.size();
  if (!labels.empty() && labels.size() != n)
    throw InputError(path.string() + ": label column present only on some rows");

  LabeledDistanceMatrix matrix;
  matrix.distances.resize(static_cast<std::int64_t>(n), static_cast<std::int64_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw InputError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
    for (std::size_t j = 0; j < n; ++j)
      matrix.distances(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
  }
  matrix.labels = std::move(labels);

  const double scale = std::max(matrix.distances.cwiseAbs().maxCoeff(), 1e-300);
  if ((matrix.distances - matrix.distances.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InputError(path.string() + ": matrix is not symmetric");
  for (std::int64_t i = 0; i < matrix.size(); ++i) {
    if (std::abs(matrix.distances(i, i)) > 1e-12 * scale)
      throw InputError(path.string() + ": nonzero diagonal at row " + std::to_string(i));
    for (std::int64_t j = 0; j < matrix.size(); ++j)
      if (matrix.distances(i, j) < 0)
        throw InputError(path.string() + ": negative distance at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
  }
  return matrix;
}

int LabelTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> LabelTable::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw InputError("labels file has no column '" + name + "'");
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (static_cast<std::size_t>(idx) >= row.size())
      throw InputError("labels row is missing column '" + name + "'");
    out.push_back(row[static_cast<std::size_t>(idx)]);
  }
  return out;
}

LabelTable read_label_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labels file: " + path.string());
  LabelTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (header) {
      table.columns = std::move(fields);
      header = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.columns.empty()) throw InputError(path.string() + ": empty labels file");
  return table;
}

void write_label_table(const LabelTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write labels file: " + path.string());
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<std::filesystem::path> list_mesh_files(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory))
    throw InputError("not a directory: " + directory.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj" || ext == ".ply") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .obj/.ply files in " + directory.string());
  return files;
}

std::vector<RegisteredMesh> load_mesh_directory(const std::filesystem::path& directory,
                                                std::vector<std::string>* names) {
  const auto files = list_mesh_files(directory);
  std::vector<RegisteredMesh> meshes;
  meshes.reserve(files.size());
  meshes.push_back(load_mesh(files.front()));
  for (std::size_t i = 1; i < files.size(); ++i)
    meshes.push_back(load_mesh(files[i], meshes.front().topology));
  if (names) {
    names->clear();
    for (const auto& f : files) names->push_back(f.filename().string());
  }
  return meshes;
}

}  // namespace elastic
