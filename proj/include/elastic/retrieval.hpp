#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "elastic/mesh.hpp"
#include "elastic/metric.hpp"

namespace elastic {

/// Nearest-neighbor / first-tier / second-tier scores, as percentages.
struct RetrievalScores {
  double nn = 0;
  double ft = 0;
  double st = 0;
  int queries = 0;
  int skipped_ft_st = 0;  // singleton-class queries excluded from FT/ST
  std::vector<std::string> warnings;
};

/// Rank-based retrieval scores over a labeled distance matrix. For a query
/// of class size C, FT looks at the top C-1 neighbors and ST at the top
/// 2(C-1); ties break by ascending index. Queries whose class has a single
/// member are skipped for FT/ST (with a warning) but still count for NN.
RetrievalScores evaluate_retrieval(const LabeledDistanceMatrix& matrix);

struct RetrievalRow {
  MetricParams params;
  std::string label_set;
  RetrievalScores scores;
};

/// One labeled grouping of the corpus (e.g. "shape" or "pose").
struct LabelSet {
  std::string name;
  std::vector<std::string> labels;  // one per mesh
};

/// For each parameter triple, computes the distance matrix once and scores
/// it against every label set.
std::vector<RetrievalRow> run_retrieval_experiment(const std::vector<RegisteredMesh>& meshes,
                                                   const std::vector<LabelSet>& label_sets,
                                                   const std::vector<MetricParams>& params_list,
                                                   int threads = 0);

std::string format_retrieval_table(const std::vector<RetrievalRow>& rows);
void write_retrieval_report(const std::vector<RetrievalRow>& rows,
                            const std::filesystem::path& path);

}  // namespace elastic
