// Command-line front end: distances, distance matrices, deformation bases,
// geodesic paths, Karcher means, retrieval scoring and synthetic corpora.
// Exit codes: 0 success, 1 bad input/config, 2 numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elastic/geodesic.hpp"
#include "elastic/io.hpp"
#include "elastic/karcher.hpp"
#include "elastic/mesh.hpp"
#include "elastic/metric.hpp"
#include "elastic/optim.hpp"
#include "elastic/parallel.hpp"
#include "elastic/retrieval.hpp"
#include "elastic/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  double a = 1.0;
  double lambda = 1.0;
  double c = 1.0;
  int steps = 10;        // geodesic time steps T
  int n_basis = 100;     // basis size N_D
  int tau = 10;          // frame lag for basis building
  int max_iter = 500;
  double grad_tol = 1e-6;
  int memory = 10;
  int threads = 0;       // 0: ELASTIC_THREADS env, then hardware
  int init_index = 0;    // Karcher initialization shape

  elastic::MetricParams params() const { return {a, lambda, c}; }
  elastic::OptimConfig optim() const { return {max_iter, grad_tol, memory}; }

  int resolved_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("ELASTIC_THREADS")) {
      const int t = std::atoi(env);
      if (t > 0) return t;
    }
    return 0;  // library default: hardware concurrency
  }

  json to_json() const {
    return json{{"a", a},           {"lambda", lambda},     {"c", c},
                {"steps", steps},   {"n_basis", n_basis},   {"tau", tau},
                {"max_iter", max_iter}, {"grad_tol", grad_tol}, {"memory", memory},
                {"threads", threads},   {"init_index", init_index}};
  }

  void load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw elastic::InputError("cannot open config file: " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw elastic::InputError("malformed config JSON: " + std::string(e.what()));
    }
    try {
      a = j.value("a", a);
      lambda = j.value("lambda", lambda);
      c = j.value("c", c);
      steps = j.value("steps", steps);
      n_basis = j.value("n_basis", n_basis);
      tau = j.value("tau", tau);
      max_iter = j.value("max_iter", max_iter);
      grad_tol = j.value("grad_tol", grad_tol);
      memory = j.value("memory", memory);
      threads = j.value("threads", threads);
      init_index = j.value("init_index", init_index);
    } catch (const json::exception& e) {
      throw elastic::InputError("malformed config JSON: " + std::string(e.what()));
    }
  }
};

void require_exists(const fs::path& path) {
  if (!fs::exists(path)) throw elastic::InputError("no such path: " + path.string());
}

elastic::MetricParams parse_params_triple(const std::string& text) {
  double a, lambda, c;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &a, &lambda, &c) != 3)
    throw elastic::InputError("expected a,lambda,c triple, got '" + text + "'");
  elastic::MetricParams params{a, lambda, c};
  params.validate();
  return params;
}

// ---------------------------------------------------------------------------

int cmd_distance(const RunConfig& cfg, const fs::path& mesh_a, const fs::path& mesh_b) {
  require_exists(mesh_a);
  require_exists(mesh_b);
  const auto params = cfg.params();
  params.validate();
  const auto a = elastic::load_mesh(mesh_a);
  const auto b = elastic::load_mesh(mesh_b, a.topology);
  const auto breakdown = elastic::body_distance_sq(a, b, params);
  std::printf("distance      %.17g\n", std::sqrt(std::max(breakdown.total, 0.0)));
  std::printf("distance_sq   %.17g\n", breakdown.total);
  std::printf("metric_part   %.17g\n", breakdown.metric_part);
  std::printf("normal_part   %.17g\n", breakdown.normal_part);
  return 0;
}

int cmd_distmat(const RunConfig& cfg, const fs::path& dir, const fs::path& out,
                const fs::path& labels_path, const std::string& label_column) {
  require_exists(dir);
  const auto params = cfg.params();
  params.validate();
  std::vector<std::string> names;
  const auto meshes = elastic::load_mesh_directory(dir, &names);
  auto matrix = elastic::distance_matrix(meshes, params, cfg.resolved_threads());
  if (!labels_path.empty()) {
    require_exists(labels_path);
    const auto table = elastic::read_label_table(labels_path);
    matrix.labels = table.column(label_column);
    if (matrix.labels.size() != static_cast<std::size_t>(matrix.size()))
      throw elastic::InputError("labels file row count does not match the mesh directory");
  }
  elastic::write_distance_csv(matrix, out);
  std::printf("wrote %s (%lld x %lld)\n", out.string().c_str(),
              static_cast<long long>(matrix.size()), static_cast<long long>(matrix.size()));
  return 0;
}

int cmd_basis(const RunConfig& cfg, const std::vector<fs::path>& seq_dirs, const fs::path& out,
              bool remove_mean) {
  std::vector<std::vector<elastic::RegisteredMesh>> sequences;
  std::shared_ptr<const elastic::TemplateTopology> topo;
  for (const fs::path& dir : seq_dirs) {
    require_exists(dir);
    // a sequence directory holds frames; a directory of directories holds sequences
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) subdirs.push_back(dir);
    for (const fs::path& sub : subdirs) {
      auto files = elastic::list_mesh_files(sub);
      std::vector<elastic::RegisteredMesh> seq;
      for (const auto& f : files) {
        seq.push_back(topo ? elastic::load_mesh(f, topo) : elastic::load_mesh(f));
        if (!topo) topo = seq.front().topology;
      }
      sequences.push_back(std::move(seq));
    }
  }
  const auto basis = elastic::build_basis(sequences, cfg.tau, cfg.n_basis, remove_mean);
  elastic::save_basis(basis, out);
  std::printf("wrote %s (%d fields, %lld vertices)\n", out.string().c_str(), basis.size(),
              static_cast<long long>(basis.vertex_count()));
  return 0;
}

int cmd_geodesic(const RunConfig& cfg, const fs::path& f0_path, const fs::path& f1_path,
                 const fs::path& basis_path, const fs::path& out_dir) {
  require_exists(f0_path);
  require_exists(f1_path);
  require_exists(basis_path);
  const auto params = cfg.params();
  params.validate();
  const auto f0 = elastic::load_mesh(f0_path);
  const auto f1 = elastic::load_mesh(f1_path, f0.topology);
  auto basis = elastic::load_basis(basis_path);
  if (cfg.n_basis < basis.size()) {
    basis.fields.resize(static_cast<std::size_t>(cfg.n_basis));
    basis.singular_values = basis.singular_values.head(cfg.n_basis).eval();
  }
  const auto result =
      elastic::compute_geodesic(f0, f1, basis, params, cfg.steps, cfg.optim());
  elastic::export_path(result.path, &result.report, out_dir);
  std::printf("linear path energy    %.17g\n", result.report.value_history.front());
  std::printf("optimized energy      %.17g\n", result.report.final_value);
  std::printf("iterations            %d\n", result.report.iterations);
  std::printf("converged             %s\n", result.report.converged ? "yes" : "no");
  std::printf("wrote %zu frames to %s\n", result.path.frames.size(), out_dir.string().c_str());
  return 0;
}

int cmd_mean(const RunConfig& cfg, const fs::path& dir, const fs::path& basis_path,
             const fs::path& out_obj) {
  require_exists(dir);
  require_exists(basis_path);
  elastic::KarcherProblem problem;
  problem.params = cfg.params();
  problem.params.validate();
  problem.shapes = elastic::load_mesh_directory(dir);
  const auto basis = elastic::load_basis(basis_path);
  problem.basis = &basis;
  problem.init_index = cfg.init_index;
  const auto result = elastic::compute_karcher_mean(problem, cfg.optim());
  elastic::save_obj(result.mean, out_obj);
  fs::path report_path = out_obj;
  report_path.replace_filename("karcher_report.json");
  elastic::write_karcher_report(result, problem, report_path);
  std::printf("final objective  %.17g\n", result.report.final_value);
  std::printf("iterations       %d\n", result.report.iterations);
  std::printf("wrote %s and %s\n", out_obj.string().c_str(), report_path.string().c_str());
  return 0;
}

int cmd_retrieval(const RunConfig& cfg, const fs::path& distmat_path, const fs::path& dir,
                  const fs::path& labels_path, std::vector<std::string> label_columns,
                  const std::vector<std::string>& params_list, const fs::path& report_path) {
  require_exists(labels_path);
  const auto table = elastic::read_label_table(labels_path);
  if (label_columns.empty()) {
    // every column except the mesh-name one
    for (const auto& col : table.columns)
      if (col != "mesh") label_columns.push_back(col);
  }
  if (label_columns.empty()) throw elastic::InputError("labels file has no label columns");

  std::vector<elastic::RetrievalRow> rows;
  if (!distmat_path.empty()) {
    if (!params_list.empty())
      throw elastic::InputError(
          "--params applies to --dir mode; a precomputed matrix fixes the metric");
    require_exists(distmat_path);
    auto matrix = elastic::read_distance_csv(distmat_path);
    for (const auto& col : label_columns) {
      matrix.labels = table.column(col);
      if (matrix.labels.size() != static_cast<std::size_t>(matrix.size()))
        throw elastic::InputError("labels row count does not match the distance matrix");
      elastic::RetrievalRow row{cfg.params(), col, elastic::evaluate_retrieval(matrix)};
      rows.push_back(std::move(row));
    }
  } else {
    require_exists(dir);
    const auto meshes = elastic::load_mesh_directory(dir);
    std::vector<elastic::LabelSet> sets;
    for (const auto& col : label_columns) {
      elastic::LabelSet set{col, table.column(col)};
      if (set.labels.size() != meshes.size())
        throw elastic::InputError("labels row count does not match the mesh directory");
      sets.push_back(std::move(set));
    }
    std::vector<elastic::MetricParams> params;
    if (params_list.empty())
      params.push_back(cfg.params());
    else
      for (const auto& text : params_list) params.push_back(parse_params_triple(text));
    rows = elastic::run_retrieval_experiment(meshes, sets, params, cfg.resolved_threads());
  }

  for (const auto& row : rows)
    for (const auto& warning : row.scores.warnings) std::cerr << "warning: " << warning << "\n";
  std::cout << elastic::format_retrieval_table(rows);
  elastic::write_retrieval_report(rows, report_path);
  std::printf("wrote %s\n", report_path.string().c_str());
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, bool sequence, int identity,
              double pose_start, double pose_end, int frames) {
  require_exists(spec_path);
  const auto spec = elastic::SynthSpec::from_json_file(spec_path);
  if (sequence) {
    const auto frames_list =
        elastic::generate_sequence(spec, identity, pose_start, pose_end, frames);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw elastic::InputError("cannot create directory: " + out_dir.string());
    char name[32];
    for (std::size_t i = 0; i < frames_list.size(); ++i) {
      std::snprintf(name, sizeof(name), "frame_%03zu.obj", i);
      elastic::save_obj(frames_list[i], out_dir / name);
    }
    std::printf("wrote %zu frames to %s\n", frames_list.size(), out_dir.string().c_str());
  } else {
    const auto corpus = elastic::generate_corpus(spec);
    elastic::write_corpus(corpus, out_dir);
    std::printf("wrote %zu meshes + labels.csv to %s\n", corpus.meshes.size(),
                out_dir.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic shape analysis of registered triangle meshes"};
  app.require_subcommand(1);

  RunConfig cfg;
  // config file values load first; explicit flags override them below
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        cfg.load_json(argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  std::string config_file;
  app.add_option("--config", config_file, "JSON config file; flags override its values");
  app.add_option("--threads", cfg.threads, "worker threads (0: ELASTIC_THREADS env, then cores)");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "print the merged configuration and exit");

  auto add_params = [&cfg](CLI::App* cmd) {
    cmd->add_option("-a,--a", cfg.a, "metric-tensor term weight");
    cmd->add_option("--lambda", cfg.lambda, "metric-tensor distance parameter");
    cmd->add_option("-c,--c", cfg.c, "normal term weight");
  };
  auto add_optim = [&cfg](CLI::App* cmd) {
    cmd->add_option("--max-iter", cfg.max_iter, "optimizer iteration budget");
    cmd->add_option("--grad-tol", cfg.grad_tol, "optimizer gradient tolerance");
    cmd->add_option("--memory", cfg.memory, "L-BFGS memory");
  };

  fs::path arg_a, arg_b, arg_out, arg_dir, arg_labels, arg_basis, arg_spec, arg_distmat;
  std::vector<fs::path> arg_seq_dirs;
  std::string arg_label_column = "shape";
  std::vector<std::string> arg_label_columns, arg_params_list;
  bool arg_remove_mean = false, arg_sequence = false;
  int arg_identity = 0, arg_frames = 11;
  double arg_pose_start = 0, arg_pose_end = 0;
  fs::path arg_report = "retrieval_report.json";

  CLI::App* distance = app.add_subcommand("distance", "distance between two meshes");
  distance->add_option("mesh_a", arg_a, "first mesh (defines the template)")->required();
  distance->add_option("mesh_b", arg_b, "second mesh (same topology)")->required();
  add_params(distance);

  CLI::App* distmat = app.add_subcommand("distmat", "pairwise distance matrix of a directory");
  distmat->add_option("--dir", arg_dir, "directory of registered meshes")->required();
  distmat->add_option("--out", arg_out, "output CSV")->required();
  distmat->add_option("--labels", arg_labels, "labels.csv to embed as a label column");
  distmat->add_option("--label-column", arg_label_column, "which label column to embed");
  add_params(distmat);

  CLI::App* basis = app.add_subcommand("basis", "deformation basis from motion sequences");
  basis->add_option("--seq-dir", arg_seq_dirs,
                    "sequence directory (or a directory of sequence directories); repeatable")
      ->required();
  basis->add_option("--tau", cfg.tau, "frame lag for displacement samples");
  basis->add_option("--n-basis", cfg.n_basis, "number of basis fields");
  basis->add_flag("--remove-mean", arg_remove_mean, "center the samples before the PCA");
  basis->add_option("--out", arg_out, "output basis file")->required();

  CLI::App* geodesic = app.add_subcommand("geodesic", "geodesic path between two meshes");
  geodesic->add_option("--f0", arg_a, "start mesh")->required();
  geodesic->add_option("--f1", arg_b, "end mesh")->required();
  geodesic->add_option("--basis", arg_basis, "deformation basis file")->required();
  geodesic->add_option("--steps,-T", cfg.steps, "time steps T");
  geodesic->add_option("--n-basis", cfg.n_basis, "use only the leading n basis fields");
  geodesic->add_option("--out-dir", arg_out, "output directory for frames + energy.csv")
      ->required();
  add_params(geodesic);
  add_optim(geodesic);

  CLI::App* mean = app.add_subcommand("mean", "Karcher mean of a mesh directory");
  mean->add_option("--dir", arg_dir, "directory of registered meshes")->required();
  mean->add_option("--basis", arg_basis, "deformation basis file")->required();
  mean->add_option("--out", arg_out, "output OBJ (report written next to it)")->required();
  mean->add_option("--init-index", cfg.init_index,
                   "which shape seeds the mean (the result may depend on it)");
  add_params(mean);
  add_optim(mean);

  CLI::App* retrieval = app.add_subcommand("retrieval", "NN/FT/ST retrieval scores");
  retrieval->add_option("--distmat", arg_distmat, "precomputed distance CSV");
  retrieval->add_option("--dir", arg_dir, "directory of registered meshes");
  retrieval->add_option("--labels", arg_labels, "labels.csv")->required();
  retrieval->add_option("--label-column", arg_label_columns,
                        "label column(s) to score; default: all non-mesh columns");
  retrieval->add_option("--params", arg_params_list,
                        "a,lambda,c triple; repeatable (mesh-directory mode)");
  retrieval->add_option("--report", arg_report, "output report JSON");
  add_params(retrieval);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic registered corpus");
  synth->add_option("--spec", arg_spec, "corpus spec JSON")->required();
  synth->add_option("--out-dir", arg_out, "output directory")->required();
  synth->add_flag("--sequence", arg_sequence, "write one articulation sequence instead");
  synth->add_option("--identity", arg_identity, "sequence: shape factor index");
  synth->add_option("--pose-start", arg_pose_start, "sequence: start bend angle (radians)");
  synth->add_option("--pose-end", arg_pose_end, "sequence: end bend angle (radians)");
  synth->add_option("--frames", arg_frames, "sequence: number of snapshots");

  // global flags (--threads, --config, --dump-config) may follow a subcommand
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (dump_config) {
    std::cout << cfg.to_json().dump(2) << "\n";
    return 0;
  }

  try {
    if (distance->parsed()) return cmd_distance(cfg, arg_a, arg_b);
    if (distmat->parsed())
      return cmd_distmat(cfg, arg_dir, arg_out, arg_labels, arg_label_column);
    if (basis->parsed()) return cmd_basis(cfg, arg_seq_dirs, arg_out, arg_remove_mean);
    if (geodesic->parsed()) return cmd_geodesic(cfg, arg_a, arg_b, arg_basis, arg_out);
    if (mean->parsed()) return cmd_mean(cfg, arg_dir, arg_basis, arg_out);
    if (retrieval->parsed()) {
      if (arg_distmat.empty() == arg_dir.empty())
        throw elastic::InputError("retrieval needs exactly one of --distmat or --dir");
      return cmd_retrieval(cfg, arg_distmat, arg_dir, arg_labels, arg_label_columns,
                           arg_params_list, arg_report);
    }
    if (synth->parsed())
      return cmd_synth(arg_spec, arg_out, arg_sequence, arg_identity, arg_pose_start,
                       arg_pose_end, arg_frames);
  } catch (const elastic::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const elastic::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
