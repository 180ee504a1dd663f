#include "elastic/geodesic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <Eigen/SVD>

#include <nlohmann/json.hpp>

namespace elastic {

namespace {

// Basis fields and samples are flattened vertex-major: (x, y, z) per vertex.
Eigen::VectorXd flatten(const Positions& p) {
  Eigen::VectorXd v(p.rows() * 3);
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (int k = 0; k < 3; ++k) v[3 * r + k] = p(r, k);
  return v;
}

Positions unflatten(const Eigen::VectorXd& v) {
  Positions p(v.size() / 3, 3);
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (int k = 0; k < 3; ++k) p(r, k) = v[3 * r + k];
  return p;
}

double flat_dot(const Positions& a, const Positions& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace

DeformationBasis build_basis(const std::vector<std::vector<RegisteredMesh>>& sequences, int tau,
                             int n_basis, bool remove_mean) {
  if (tau < 1) throw InputError("frame lag tau must be >= 1");
  if (n_basis < 1) throw InputError("basis size must be >= 1");
  if (sequences.empty()) throw InputError("no sequences given");

  const auto& topo = sequences.front().front().topology;
  std::vector<Eigen::VectorXd> samples;
  for (const auto& seq : sequences) {
    if (static_cast<int>(seq.size()) <= tau)
      throw InputError("sequence of length " + std::to_string(seq.size()) +
                       " is too short for lag " + std::to_string(tau));
    for (const RegisteredMesh& m : seq)
      if (!m.topology->same_connectivity(*topo))
        throw InputError("topology mismatch across sequences");
    for (std::size_t n = 0; n * tau + tau < seq.size(); ++n)
      samples.push_back(flatten(seq[n * tau + tau].positions - seq[n * tau].positions));
  }
  if (static_cast<int>(samples.size()) < n_basis)
    throw InputError("only " + std::to_string(samples.size()) + " displacement samples for " +
                     std::to_string(n_basis) + " basis fields");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), samples.front().size());
  for (std::size_t i = 0; i < samples.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = samples[i];
  if (remove_mean) X.rowwise() -= X.colwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  if (svd.singularValues()[0] <= 1e-12)
    throw InputError("displacement samples have rank zero (constant sequences?)");

  DeformationBasis basis;
  basis.mean_removed = remove_mean;
  const int kept = std::min<int>(n_basis, static_cast<int>(svd.matrixV().cols()));
  if (kept < n_basis)
    throw InputError("sample matrix supports only " + std::to_string(kept) + " basis fields");
  basis.singular_values = svd.singularValues().head(kept);
  basis.fields.reserve(static_cast<std::size_t>(kept));
  for (int j = 0; j < kept; ++j) basis.fields.push_back(unflatten(svd.matrixV().col(j)));
  return basis;
}

void save_basis(const DeformationBasis& basis, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "elastic-basis";
  header["version"] = 1;
  header["n_basis"] = basis.size();
  header["vertex_count"] = basis.vertex_count();
  header["mean_removed"] = basis.mean_removed;
  header["singular_values"] = std::vector<double>(
      basis.singular_values.data(), basis.singular_values.data() + basis.singular_values.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write basis file: " + path.string());
  out << header.dump() << "\n";
  for (const Positions& field : basis.fields)
    for (Eigen::Index r = 0; r < field.rows(); ++r) {
      double row[3] = {field(r, 0), field(r, 1), field(r, 2)};
      out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  if (!out) throw InputError("write failed: " + path.string());
}

DeformationBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open basis file: " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed basis header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "elastic-basis")
    throw InputError(path.string() + " is not a basis file");
  DeformationBasis basis;
  const int n_basis = header.at("n_basis").get<int>();
  const std::int64_t vc = header.at("vertex_count").get<std::int64_t>();
  basis.mean_removed = header.value("mean_removed", false);
  const auto sv = header.at("singular_values").get<std::vector<double>>();
  basis.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  basis.fields.reserve(static_cast<std::size_t>(n_basis));
  for (int j = 0; j < n_basis; ++j) {
    Positions field(vc, 3);
    for (std::int64_t r = 0; r < vc; ++r) {
      double row[3];
      in.read(reinterpret_cast<char*>(row), sizeof(row));
      if (!in) throw InputError("truncated basis file: " + path.string());
      field(r, 0) = row[0];
      field(r, 1) = row[1];
      field(r, 2) = row[2];
    }
    basis.fields.push_back(std::move(field));
  }
  return basis;
}

GeodesicPath make_linear_path(const RegisteredMesh& f0, const RegisteredMesh& f1, int steps,
                              int n_basis) {
  validate_mesh(f0);
  validate_mesh(f1);
  if (!f0.topology->same_connectivity(*f1.topology))
    throw InputError("geodesic endpoints are not registered to the same template");
  if (steps < 2) throw InputError("a geodesic path needs at least 2 time steps");
  if (n_basis < 1) throw InputError("basis size must be >= 1");
  GeodesicPath path;
  path.f0 = f0;
  path.f1 = f1;
  path.steps = steps;
  path.alpha = Eigen::MatrixXd::Zero(steps - 1, n_basis);
  path.frames.resize(static_cast<std::size_t>(steps) + 1);
  path.frames.front() = f0;
  path.frames.back() = f1;
  for (int i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    path.frames[static_cast<std::size_t>(i)].topology = f0.topology;
    path.frames[static_cast<std::size_t>(i)].positions =
        (1.0 - t) * f0.positions + t * f1.positions;
  }
  return path;
}

void rebuild_frames(GeodesicPath& path, const DeformationBasis& basis) {
  if (path.alpha.cols() != basis.size())
    throw InputError("alpha has " + std::to_string(path.alpha.cols()) + " columns for " +
                     std::to_string(basis.size()) + " basis fields");
  if (basis.vertex_count() != path.f0.positions.rows())
    throw InputError("basis vertex count does not match the template");
  path.frames.front().positions = path.f0.positions;
  path.frames.back().positions = path.f1.positions;
  for (int i = 1; i < path.steps; ++i) {
    const double t = static_cast<double>(i) / path.steps;
    Positions p = (1.0 - t) * path.f0.positions + t * path.f1.positions;
    for (int j = 0; j < basis.size(); ++j)
      p += path.alpha(i - 1, j) * basis.fields[static_cast<std::size_t>(j)];
    path.frames[static_cast<std::size_t>(i)].positions = std::move(p);
  }
}

std::pair<double, Eigen::MatrixXd> path_energy(GeodesicPath& path, const DeformationBasis& basis,
                                               const MetricParams& params) {
  params.validate();
  rebuild_frames(path, basis);
  const TemplateTopology& topo = *path.f0.topology;
  const int T = path.steps;

  std::vector<std::vector<FaceKinematics>> kin(static_cast<std::size_t>(T) + 1);
  for (int i = 0; i <= T; ++i) {
    kin[static_cast<std::size_t>(i)] = face_kinematics(path.frames[static_cast<std::size_t>(i)]);
    for (std::size_t f = 0; f < kin[static_cast<std::size_t>(i)].size(); ++f)
      if (kin[static_cast<std::size_t>(i)][f].degenerate)
        throw NumericalError("degenerate face " + std::to_string(f) + " at step " +
                             std::to_string(i));
  }

  std::vector<Positions> frame_grad(static_cast<std::size_t>(T) + 1);
  for (int i = 1; i < T; ++i)
    frame_grad[static_cast<std::size_t>(i)] = Positions::Zero(topo.vertex_count, 3);

  double energy = 0;
  for (int i = 0; i < T; ++i) {
    Positions* ga = i >= 1 ? &frame_grad[static_cast<std::size_t>(i)] : nullptr;
    Positions* gb = i + 1 <= T - 1 ? &frame_grad[static_cast<std::size_t>(i) + 1] : nullptr;
    const auto seg = body_distance_sq_with_gradient(topo, kin[static_cast<std::size_t>(i)],
                                                    kin[static_cast<std::size_t>(i) + 1], params,
                                                    ga, gb);
    energy += seg.total;
  }
  energy *= T;

  Eigen::MatrixXd grad(T - 1, basis.size());
  for (int i = 1; i < T; ++i)
    for (int j = 0; j < basis.size(); ++j)
      grad(i - 1, j) =
          T * flat_dot(frame_grad[static_cast<std::size_t>(i)], basis.fields[static_cast<std::size_t>(j)]);
  return {energy, std::move(grad)};
}

GeodesicResult compute_geodesic(const RegisteredMesh& f0, const RegisteredMesh& f1,
                                const DeformationBasis& basis, const MetricParams& params,
                                int steps, const OptimConfig& config) {
  GeodesicResult result;
  result.path = make_linear_path(f0, f1, steps, basis.size());

  // the linear path must itself be evaluable; failures here are real errors.
  path_energy(result.path, basis, params);

  GeodesicPath& path = result.path;
  const int n_basis = basis.size();
  ObjectiveFunction obj;
  obj.dimension = (steps - 1) * n_basis;
  obj.evaluate = [&path, &basis, &params, steps, n_basis](const Eigen::VectorXd& x,
                                                          Eigen::VectorXd* grad) -> double {
    for (int i = 0; i < steps - 1; ++i)
      for (int j = 0; j < n_basis; ++j) path.alpha(i, j) = x[i * n_basis + j];
    try {
      auto [energy, g] = path_energy(path, basis, params);
      if (grad)
        for (int i = 0; i < steps - 1; ++i)
          for (int j = 0; j < n_basis; ++j) (*grad)[i * n_basis + j] = g(i, j);
      return energy;
    } catch (const NumericalError&) {
      // collapsed intermediate frame: reject the trial step
      if (grad) grad->setZero();
      return std::numeric_limits<double>::infinity();
    }
  };

  result.report = minimize(obj, Eigen::VectorXd::Zero(obj.dimension), config);
  for (int i = 0; i < steps - 1; ++i)
    for (int j = 0; j < n_basis; ++j) path.alpha(i, j) = result.report.final_point[i * n_basis + j];
  rebuild_frames(path, basis);
  return result;
}

void export_path(const GeodesicPath& path, const OptimReport* report,
                 const std::filesystem::path& directory) {
  if (directory.empty()) throw InputError("empty export directory");
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw InputError("cannot create directory: " + directory.string());
  char name[32];
  for (std::size_t i = 0; i < path.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%03zu.obj", i);
    save_obj(path.frames[i], directory / name);
  }
  if (report) {
    std::FILE* out = std::fopen((directory / "energy.csv").string().c_str(), "wb");
    if (!out) throw InputError("cannot write energy.csv");
    std::fprintf(out, "iteration,energy\n");
    for (std::size_t i = 0; i < report->value_history.size(); ++i)
      std::fprintf(out, "%zu,%.17g\n", i, report->value_history[i]);
    std::fclose(out);
  }
}

}  // namespace elastic
