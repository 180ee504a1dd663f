#include "elastic/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

namespace elastic {

RetrievalScores evaluate_retrieval(const LabeledDistanceMatrix& matrix) {
  const Eigen::MatrixXd& D = matrix.distances;
  const std::int64_t n = D.rows();
  if (n != D.cols()) throw InputError("distance matrix is not square");
  if (n < 2) throw InputError("retrieval needs at least two items");
  if (static_cast<std::int64_t>(matrix.labels.size()) != n)
    throw InputError("distance matrix has no labels");
  const double scale = std::max(D.cwiseAbs().maxCoeff(), 1e-300);
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InputError("distance matrix is not symmetric");
  for (std::int64_t i = 0; i < n; ++i)
    if (std::abs(D(i, i)) > 1e-12 * scale) throw InputError("distance matrix diagonal is not zero");

  std::map<std::string, int> class_size;
  for (const std::string& l : matrix.labels) ++class_size[l];

  RetrievalScores scores;
  scores.queries = static_cast<int>(n);
  int nn_hits = 0;
  double ft_sum = 0, st_sum = 0;
  int eligible = 0;

  std::vector<std::int64_t> order(static_cast<std::size_t>(n) - 1);
  for (std::int64_t i = 0; i < n; ++i) {
    order.clear();
    for (std::int64_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    // ascending distance, ties by ascending index
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int64_t a, std::int64_t b) { return D(i, a) < D(i, b); });

    const std::string& label = matrix.labels[static_cast<std::size_t>(i)];
    if (matrix.labels[static_cast<std::size_t>(order.front())] == label) ++nn_hits;

    const int c = class_size[label];
    if (c < 2) {
      ++scores.skipped_ft_st;
      scores.warnings.push_back("query " + std::to_string(i) + " (label '" + label +
                                "') has a singleton class; skipped for FT/ST");
      continue;
    }
    const int relevant = c - 1;
    auto hits_in_top = [&](std::int64_t k) {
      k = std::min<std::int64_t>(k, static_cast<std::int64_t>(order.size()));
      int h = 0;
      for (std::int64_t r = 0; r < k; ++r)
        if (matrix.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] == label)
          ++h;
      return h;
    };
    ft_sum += static_cast<double>(hits_in_top(relevant)) / relevant;
    st_sum += static_cast<double>(hits_in_top(2 * relevant)) / relevant;
    ++eligible;
  }

  scores.nn = 100.0 * nn_hits / static_cast<double>(n);
  scores.ft = eligible > 0 ? 100.0 * ft_sum / eligible : 0.0;
  scores.st = eligible > 0 ? 100.0 * st_sum / eligible : 0.0;
  if (eligible == 0)
    scores.warnings.push_back("no query has a class with >= 2 members; FT/ST undefined");
  return scores;
}

std::vector<RetrievalRow> run_retrieval_experiment(const std::vector<RegisteredMesh>& meshes,
                                                   const std::vector<LabelSet>& label_sets,
                                                   const std::vector<MetricParams>& params_list,
                                                   int threads) {
  if (label_sets.empty()) throw InputError("no label sets given");
  for (const LabelSet& set : label_sets)
    if (set.labels.size() != meshes.size())
      throw InputError("label set '" + set.name + "' has " + std::to_string(set.labels.size()) +
                       " labels for " + std::to_string(meshes.size()) + " meshes");
  std::vector<RetrievalRow> rows;
  for (const MetricParams& params : params_list) {
    LabeledDistanceMatrix matrix = distance_matrix(meshes, params, threads);
    for (const LabelSet& set : label_sets) {
      matrix.labels = set.labels;
      rows.push_back({params, set.name, evaluate_retrieval(matrix)});
    }
  }
  return rows;
}

std::string format_retrieval_table(const std::vector<RetrievalRow>& rows) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-28s %-10s %8s %8s %8s\n", "metric (a, lambda, c)", "labels",
                "NN", "FT", "ST");
  out += line;
  out += std::string(66, '-') + "\n";
  for (const RetrievalRow& r : rows) {
    char params[64];
    std::snprintf(params, sizeof(params), "(%g, %g, %g)", r.params.a, r.params.lambda, r.params.c);
    std::snprintf(line, sizeof(line), "%-28s %-10s %8.1f %8.1f %8.1f\n", params,
                  r.label_set.c_str(), r.scores.nn, r.scores.ft, r.scores.st);
    out += line;
  }
  return out;
}

void write_retrieval_report(const std::vector<RetrievalRow>& rows,
                            const std::filesystem::path& path) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const RetrievalRow& r : rows) {
    nlohmann::json row;
    row["a"] = r.params.a;
    row["lambda"] = r.params.lambda;
    row["c"] = r.params.c;
    row["label_set"] = r.label_set;
    row["nn"] = r.scores.nn;
    row["ft"] = r.scores.ft;
    row["st"] = r.scores.st;
    row["queries"] = r.scores.queries;
    row["skipped_ft_st"] = r.scores.skipped_ft_st;
    row["warnings"] = r.scores.warnings;
    j["rows"].push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace elastic
