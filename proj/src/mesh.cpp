#include "elastic/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace elastic {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// ---------------------------------------------------------------------------
// OBJ

void parse_obj(std::istream& in, const std::string& name, std::vector<Vec3>& vertices,
               FaceList& faces) {
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() >= 1 && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw InputError(name + ":" + std::to_string(line_no) + ": malformed vertex line");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::int64_t> idx;
      std::string token;
      while (ls >> token) {
        // "i", "i/t", "i//n", "i/t/n" all start with the vertex index
        std::int64_t v = 0;
        try {
          v = std::stoll(token.substr(0, token.find('/')));
        } catch (const std::exception&) {
          throw InputError(name + ":" + std::to_string(line_no) + ": malformed face index '" +
                           token + "'");
        }
        if (v <= 0)
          throw InputError(name + ":" + std::to_string(line_no) +
                           ": non-positive face indices are unsupported");
        idx.push_back(v - 1);
      }
      if (idx.size() != 3)
        throw InputError(name + ":" + std::to_string(line_no) + ": non-triangular face (" +
                         std::to_string(idx.size()) + " vertices)");
      faces.push_back({static_cast<std::int32_t>(idx[0]), static_cast<std::int32_t>(idx[1]),
                       static_cast<std::int32_t>(idx[2])});
    }
    // anything else (vt, vn, g, s, usemtl, ...) is ignored
  }
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { kChar, kUChar, kShort, kUShort, kInt, kUInt, kFloat, kDouble };

PlyType ply_type(const std::string& s, const std::string& name) {
  if (s == "char" || s == "int8") return PlyType::kChar;
  if (s == "uchar" || s == "uint8") return PlyType::kUChar;
  if (s == "short" || s == "int16") return PlyType::kShort;
  if (s == "ushort" || s == "uint16") return PlyType::kUShort;
  if (s == "int" || s == "int32") return PlyType::kInt;
  if (s == "uint" || s == "uint32") return PlyType::kUInt;
  if (s == "float" || s == "float32") return PlyType::kFloat;
  if (s == "double" || s == "float64") return PlyType::kDouble;
  throw InputError(name + ": unknown PLY property type '" + s + "'");
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kChar:
    case PlyType::kUChar: return 1;
    case PlyType::kShort:
    case PlyType::kUShort: return 2;
    case PlyType::kInt:
    case PlyType::kUInt:
    case PlyType::kFloat: return 4;
    case PlyType::kDouble: return 8;
  }
  return 0;
}

double read_binary_scalar(std::istream& in, PlyType t, const std::string& name) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(t)));
  if (!in) throw InputError(name + ": truncated PLY body");
  switch (t) {
    case PlyType::kChar: return static_cast<double>(static_cast<signed char>(buf[0]));
    case PlyType::kUChar: return static_cast<double>(buf[0]);
    case PlyType::kShort: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
    case PlyType::kUShort: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
    case PlyType::kInt: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::kUInt: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::kFloat: { float v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::kDouble: { double v; std::memcpy(&v, buf, 8); return v; }
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::kUChar;
  PlyType value_type = PlyType::kFloat;
};

struct PlyElement {
  std::string name;
  std::int64_t count = 0;
  std::vector<PlyProperty> properties;
};

void parse_ply(std::istream& in, const std::string& name, std::vector<Vec3>& vertices,
               FaceList& faces) {
  std::string line;
  std::getline(in, line);  // "ply" magic already checked by caller
  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw InputError(name + ": unsupported PLY format '" + fmt + "'");
    } else if (tag == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) throw InputError(name + ": PLY property before any element");
      std::string t;
      ls >> t;
      PlyProperty p;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        p.count_type = ply_type(ct, name);
        p.value_type = ply_type(vt, name);
      } else {
        p.value_type = ply_type(t, name);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else if (tag == "end_header") {
      break;
    } else {
      throw InputError(name + ": unexpected PLY header line '" + line + "'");
    }
  }

  auto next_ascii = [&in, &name]() -> double {
    double v;
    if (!(in >> v)) throw InputError(name + ": truncated PLY body");
    return v;
  };

  for (const PlyElement& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        if (el.properties[i].is_list)
          throw InputError(name + ": list property in PLY vertex element");
        if (el.properties[i].name == "x") ix = static_cast<int>(i);
        if (el.properties[i].name == "y") iy = static_cast<int>(i);
        if (el.properties[i].name == "z") iz = static_cast<int>(i);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw InputError(name + ": PLY vertex element lacks x/y/z properties");
      vertices.reserve(static_cast<std::size_t>(el.count));
      for (std::int64_t v = 0; v < el.count; ++v) {
        Vec3 p = Vec3::Zero();
        for (std::size_t i = 0; i < el.properties.size(); ++i) {
          double value = binary ? read_binary_scalar(in, el.properties[i].value_type, name)
                                : next_ascii();
          if (static_cast<int>(i) == ix) p.x() = value;
          if (static_cast<int>(i) == iy) p.y() = value;
          if (static_cast<int>(i) == iz) p.z() = value;
        }
        vertices.push_back(p);
      }
    } else if (el.name == "face") {
      faces.reserve(static_cast<std::size_t>(el.count));
      for (std::int64_t f = 0; f < el.count; ++f) {
        for (const PlyProperty& p : el.properties) {
          if (p.is_list) {
            std::int64_t n = static_cast<std::int64_t>(
                binary ? read_binary_scalar(in, p.count_type, name) : next_ascii());
            if (p.name == "vertex_indices" || p.name == "vertex_index") {
              if (n != 3)
                throw InputError(name + ": non-triangular face (" + std::to_string(n) +
                                 " vertices)");
              std::array<std::int32_t, 3> tri{};
              for (int k = 0; k < 3; ++k)
                tri[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(
                    binary ? read_binary_scalar(in, p.value_type, name) : next_ascii());
              faces.push_back(tri);
            } else {
              for (std::int64_t k = 0; k < n; ++k)
                (void)(binary ? read_binary_scalar(in, p.value_type, name) : next_ascii());
            }
          } else {
            (void)(binary ? read_binary_scalar(in, p.value_type, name) : next_ascii());
          }
        }
      }
    } else {
      // skip an unknown element; only possible when its size is knowable
      for (const PlyProperty& p : el.properties)
        if (p.is_list && binary)
          throw InputError(name + ": cannot skip binary PLY element '" + el.name +
                           "' with list properties");
      if (binary) {
        std::size_t row = 0;
        for (const PlyProperty& p : el.properties) row += ply_type_size(p.value_type);
        in.seekg(static_cast<std::streamoff>(row * static_cast<std::size_t>(el.count)),
                 std::ios::cur);
      } else {
        for (std::int64_t i = 0; i < el.count; ++i)
          for (const PlyProperty& p : el.properties) {
            if (p.is_list) {
              std::int64_t n = static_cast<std::int64_t>(next_ascii());
              for (std::int64_t k = 0; k < n; ++k) (void)next_ascii();
            } else {
              (void)next_ascii();
            }
          }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<FaceFrame> face_frames(const Positions& template_positions, const FaceList& faces) {
  std::vector<FaceFrame> frames;
  frames.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3 p1 = template_positions.row(faces[f][0]);
    const Vec3 p2 = template_positions.row(faces[f][1]);
    const Vec3 p3 = template_positions.row(faces[f][2]);
    const Vec3 e1 = p2 - p1;
    const Vec3 e2 = p3 - p1;
    FaceFrame frame;
    frame.l1 = e1.norm();
    if (frame.l1 <= kDegenerateLength)
      throw NumericalError("degenerate face " + std::to_string(f) + ": base edge has zero length");
    const Vec3 u_axis = e1 / frame.l1;
    frame.u3 = e2.dot(u_axis);
    frame.height = (e2 - frame.u3 * u_axis).norm();
    if (frame.height <= kDegenerateLength)
      throw NumericalError("degenerate face " + std::to_string(f) + ": corners are collinear");
    frame.theta = std::atan2(frame.height, frame.u3);
    frames.push_back(frame);
  }
  return frames;
}

std::shared_ptr<const TemplateTopology> build_topology(const Positions& template_positions,
                                                       const FaceList& faces) {
  if (faces.empty()) throw InputError("template has no faces");
  if (template_positions.rows() == 0) throw InputError("template has no vertices");
  auto topo = std::make_shared<TemplateTopology>();
  topo->faces = faces;
  topo->vertex_count = template_positions.rows();
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k)
      if (faces[f][static_cast<std::size_t>(k)] < 0 ||
          faces[f][static_cast<std::size_t>(k)] >= topo->vertex_count)
        throw InputError("face " + std::to_string(f) + " references vertex out of range");
  topo->frames = face_frames(template_positions, faces);
  topo->face_area.reserve(faces.size());
  for (const FaceFrame& fr : topo->frames) topo->face_area.push_back(0.5 * fr.l1 * fr.height);
  topo->total_area = 0;
  for (double a : topo->face_area) topo->total_area += a;
  return topo;
}

RegisteredMesh load_mesh(const std::filesystem::path& path,
                         std::shared_ptr<const TemplateTopology> topology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open mesh file: " + path.string());
  const std::string name = path.filename().string();

  std::vector<Vec3> vertices;
  FaceList faces;
  const std::string ext = lower(path.extension().string());
  // sniff the magic so a mislabeled PLY still loads
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 3);
  in.seekg(0);
  if (ext == ".ply" || std::string(magic, 3) == "ply")
    parse_ply(in, name, vertices, faces);
  else if (ext == ".obj" || ext.empty())
    parse_obj(in, name, vertices, faces);
  else
    throw InputError(name + ": unsupported mesh format '" + ext + "'");

  if (vertices.empty()) throw InputError(name + ": no vertices");
  if (faces.empty()) throw InputError(name + ": no faces");

  RegisteredMesh mesh;
  mesh.positions.resize(static_cast<std::int64_t>(vertices.size()), 3);
  for (std::size_t i = 0; i < vertices.size(); ++i) mesh.positions.row(static_cast<std::int64_t>(i)) = vertices[i];

  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k)
      if (faces[f][static_cast<std::size_t>(k)] < 0 ||
          faces[f][static_cast<std::size_t>(k)] >= static_cast<std::int64_t>(vertices.size()))
        throw InputError(name + ": face " + std::to_string(f) + " references vertex out of range");

  if (topology) {
    if (topology->vertex_count != mesh.positions.rows())
      throw InputError(name + ": topology mismatch: expected " +
                       std::to_string(topology->vertex_count) + " vertices, file has " +
                       std::to_string(mesh.positions.rows()));
    if (topology->faces != faces)
      throw InputError(name + ": topology mismatch: face list differs from the template");
    mesh.topology = std::move(topology);
  } else {
    mesh.topology = build_topology(mesh.positions, faces);
  }
  return mesh;
}

void save_obj(const RegisteredMesh& mesh, const std::filesystem::path& path) {
  validate_mesh(mesh);
  std::FILE* out = std::fopen(path.string().c_str(), "wb");
  if (!out) throw InputError("cannot write mesh file: " + path.string());
  for (std::int64_t v = 0; v < mesh.positions.rows(); ++v)
    std::fprintf(out, "v %.9g %.9g %.9g\n", mesh.positions(v, 0), mesh.positions(v, 1),
                 mesh.positions(v, 2));
  for (const auto& f : mesh.topology->faces)
    std::fprintf(out, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
  if (std::fclose(out) != 0) throw InputError("write failed: " + path.string());
}

void validate_mesh(const RegisteredMesh& mesh) {
  if (!mesh.topology) throw InputError("mesh has no topology");
  if (mesh.positions.rows() != mesh.topology->vertex_count)
    throw InputError("mesh has " + std::to_string(mesh.positions.rows()) +
                     " vertices, topology expects " + std::to_string(mesh.topology->vertex_count));
}

std::vector<FaceKinematics> face_kinematics(const RegisteredMesh& mesh,
                                            bool require_nondegenerate) {
  validate_mesh(mesh);
  const TemplateTopology& topo = *mesh.topology;
  std::vector<FaceKinematics> out(topo.faces.size());
  for (std::size_t f = 0; f < topo.faces.size(); ++f) {
    const Vec3 q1 = mesh.positions.row(topo.faces[f][0]);
    const Vec3 q2 = mesh.positions.row(topo.faces[f][1]);
    const Vec3 q3 = mesh.positions.row(topo.faces[f][2]);
    const FaceFrame& fr = topo.frames[f];
    FaceKinematics& k = out[f];
    k.f_u = (q2 - q1) / fr.l1;
    // d f / dv in the template frame; u3/height is cot(theta)
    k.f_v = (fr.u3 / (fr.height * fr.l1)) * (q1 - q2) + (q3 - q1) / fr.height;
    k.g(0, 0) = k.f_u.dot(k.f_u);
    k.g(0, 1) = k.g(1, 0) = k.f_u.dot(k.f_v);
    k.g(1, 1) = k.f_v.dot(k.f_v);
    k.det_g = k.g(0, 0) * k.g(1, 1) - k.g(0, 1) * k.g(0, 1);
    const double tr = k.g(0, 0) + k.g(1, 1);
    k.degenerate = !(k.det_g > kDegenerateDet * tr * tr);
    if (k.degenerate && require_nondegenerate)
      throw NumericalError("degenerate face " + std::to_string(f) +
                           ": induced metric is not positive definite");
    if (!k.degenerate) {
      const double inv_det = 1.0 / k.det_g;
      k.g_inv(0, 0) = k.g(1, 1) * inv_det;
      k.g_inv(1, 1) = k.g(0, 0) * inv_det;
      k.g_inv(0, 1) = k.g_inv(1, 0) = -k.g(0, 1) * inv_det;
    }
    k.n_raw = (q2 - q1).cross(q3 - q1);
    k.n_norm = k.n_raw.norm();
    if (k.n_norm <= kDegenerateLength * (q2 - q1).norm() * (q3 - q1).norm() ||
        k.n_norm == 0.0) {
      if (require_nondegenerate)
        throw NumericalError("degenerate face " + std::to_string(f) + ": zero embedded area");
      k.degenerate = true;
      k.zero_area = true;
    } else {
      k.n = k.n_raw / k.n_norm;
    }
  }
  return out;
}

std::vector<Mat2> first_fundamental_form(const RegisteredMesh& mesh) {
  auto kin = face_kinematics(mesh);
  std::vector<Mat2> g(kin.size());
  for (std::size_t f = 0; f < kin.size(); ++f) {
    if (kin[f].degenerate)
      throw NumericalError("degenerate face " + std::to_string(f) +
                           ": induced metric is not positive definite");
    g[f] = kin[f].g;
  }
  return g;
}

std::vector<Vec3> face_normals(const RegisteredMesh& mesh) {
  validate_mesh(mesh);
  const TemplateTopology& topo = *mesh.topology;
  std::vector<Vec3> normals(topo.faces.size());
  for (std::size_t f = 0; f < topo.faces.size(); ++f) {
    const Vec3 q1 = mesh.positions.row(topo.faces[f][0]);
    const Vec3 q2 = mesh.positions.row(topo.faces[f][1]);
    const Vec3 q3 = mesh.positions.row(topo.faces[f][2]);
    const Vec3 n = (q2 - q1).cross(q3 - q1);
    const double len = n.norm();
    if (len <= kDegenerateLength * (q2 - q1).norm() * (q3 - q1).norm() || len == 0.0)
      throw NumericalError("degenerate face " + std::to_string(f) + ": zero embedded area");
    normals[f] = n / len;
  }
  return normals;
}

std::vector<FaceGeometry> extract_geometry(const RegisteredMesh& mesh) {
  auto kin = face_kinematics(mesh, /*require_nondegenerate=*/true);
  const TemplateTopology& topo = *mesh.topology;
  std::vector<FaceGeometry> out(kin.size());
  for (std::size_t f = 0; f < kin.size(); ++f) {
    out[f].g = kin[f].g;
    out[f].n = kin[f].n;
    out[f].area_weight = topo.face_area[f];
  }
  return out;
}

}  // namespace elastic
