#include "elastic/metric.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

#include "elastic/parallel.hpp"

namespace elastic {

namespace {

constexpr double kPi = std::numbers::pi;

// Dot products of unit normals land within a few ulps of 1 for equal or
// near-equal normals; angles below sqrt(2 * this) (~1.4e-6 rad) are treated
// as exactly zero.
constexpr double kNormalAngleSnap = 1e-12;

enum class ConeClass { kPositive, kDegenerate };

// Classifies a symmetric 2x2 tensor relative to the closed SPD cone.
// Indefinite or negative tensors are rejected outright; near-boundary ones
// take the degenerate (K = 0) branch of the distance.
ConeClass classify(const Mat2& g) {
  const double tr = g(0, 0) + g(1, 1);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  if (tr < 0) throw NumericalError("metric tensor is not positive semi-definite (negative trace)");
  if (det > kDegenerateDet * tr * tr) return ConeClass::kPositive;
  if (det >= -kDegenerateDet * tr * tr) return ConeClass::kDegenerate;
  throw NumericalError("metric tensor is indefinite: matrix log undefined");
}

void check_symmetric(const Mat2& g, const char* which) {
  const double scale = g.cwiseAbs().maxCoeff();
  if (std::abs(g(0, 1) - g(1, 0)) > 1e-12 * std::max(scale, 1e-300))
    throw InputError(std::string(which) + " is not symmetric");
}

double det2(const Mat2& g) { return g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0); }

// Scalar invariants of a PD pair, from the entries of M = g1^-1 g2. The
// eigenvalue gap uses disc = (M11 - M22)^2 + 4 M12 M21 rather than
// tr(M)^2 - 4 det(M): the former keeps its accuracy as the pair approaches
// coincidence (error quadratic in the perturbation, not linear), which is
// what makes d(f, f) vanish exactly and translated meshes score ~0.
struct PairInvariants {
  double s1, s2;     // det^(1/4)
  double r, q, w;    // tr(M), det(M), eigenvalue ratio of M (>= 1)
  double tau;        // tr(L0^2) = ln(w)^2 / 2
  double theta;      // min(pi, sqrt(tau/lambda)/4)
  bool saturated;
};

PairInvariants pair_invariants(const Mat2& g1, const Mat2& g2, double lambda) {
  PairInvariants inv{};
  const double d1 = det2(g1);
  const double d2 = det2(g2);
  inv.s1 = std::pow(d1, 0.25);
  inv.s2 = std::pow(d2, 0.25);
  const double m00 = (g1(1, 1) * g2(0, 0) - g1(0, 1) * g2(1, 0)) / d1;
  const double m01 = (g1(1, 1) * g2(0, 1) - g1(0, 1) * g2(1, 1)) / d1;
  const double m10 = (g1(0, 0) * g2(1, 0) - g1(0, 1) * g2(0, 0)) / d1;
  const double m11 = (g1(0, 0) * g2(1, 1) - g1(0, 1) * g2(0, 1)) / d1;
  inv.r = m00 + m11;
  inv.q = d2 / d1;
  if (inv.r <= 0 || inv.q <= 0)
    throw NumericalError("g1^-1 g2 has non-positive eigenvalues: matrix log undefined");
  const double disc = std::max((m00 - m11) * (m00 - m11) + 4.0 * m01 * m10, 0.0);
  const double mu_max = 0.5 * (inv.r + std::sqrt(disc));
  const double mu_min = inv.q / mu_max;
  if (!(mu_max > 0) || !(mu_min > 0))
    throw NumericalError("g1^-1 g2 has non-positive eigenvalues: matrix log undefined");
  inv.w = mu_max / mu_min;
  const double lw = std::log(inv.w);
  inv.tau = 0.5 * lw * lw;
  const double theta_raw = std::sqrt(inv.tau / lambda) / 4.0;
  inv.saturated = theta_raw >= kPi;
  inv.theta = inv.saturated ? kPi : theta_raw;
  return inv;
}

// s1^2 - 2 s1 s2 cos(theta) + s2^2, written as a sum of two nonnegative
// terms so nearly-coincident tensors do not cancel to O(eps).
double cone_distance_sq(double lambda, double s1, double s2, double theta) {
  const double sin_half = std::sin(0.5 * theta);
  const double ds = s1 - s2;
  return 16.0 * lambda * (ds * ds + 4.0 * s1 * s2 * sin_half * sin_half);
}

}  // namespace

void MetricParams::validate() const {
  if (!(a >= 0)) throw InputError("metric parameter a must be >= 0");
  if (!(c >= 0)) throw InputError("metric parameter c must be >= 0");
  if (!(lambda > 0)) throw InputError("metric parameter lambda must be > 0");
  if (a == 0 && c == 0) throw InputError("metric parameters a and c cannot both be zero");
}

double pointwise_metric_distance_sq(const Mat2& g1, const Mat2& g2, double lambda) {
  if (!(lambda > 0)) throw InputError("lambda must be > 0");
  check_symmetric(g1, "g1");
  check_symmetric(g2, "g2");
  const ConeClass c1 = classify(g1);
  const ConeClass c2 = classify(g2);
  if (c1 == ConeClass::kDegenerate || c2 == ConeClass::kDegenerate) {
    // K = 0 branch: theta = 0, only the volume terms survive
    const double s1 = std::pow(std::max(det2(g1), 0.0), 0.25);
    const double s2 = std::pow(std::max(det2(g2), 0.0), 0.25);
    return cone_distance_sq(lambda, s1, s2, 0.0);
  }
  const PairInvariants inv = pair_invariants(g1, g2, lambda);
  return cone_distance_sq(lambda, inv.s1, inv.s2, inv.theta);
}

double normal_distance_sq(const Vec3& n1, const Vec3& n2) {
  const double l1 = n1.norm();
  const double l2 = n2.norm();
  if (l1 <= kDegenerateLength || l2 <= kDegenerateLength)
    throw NumericalError("zero-length normal vector");
  const double x = std::clamp(n1.dot(n2) / (l1 * l2), -1.0, 1.0);
  // acos has a sqrt(eps) cliff at 1: rounding alone pushes the dot product a
  // few ulps under 1, which would give identical normals a ~1e-8 angle.
  // Angles below the noise floor count as zero.
  if (x >= 1.0 - kNormalAngleSnap) return 0.0;
  const double angle = std::acos(x);
  return angle * angle;
}

PointwiseDistanceBreakdown body_distance_sq(std::span<const FaceGeometry> a,
                                            std::span<const FaceGeometry> b,
                                            const MetricParams& params) {
  params.validate();
  if (a.size() != b.size())
    throw InputError("topology mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " faces");
  PointwiseDistanceBreakdown out;
  out.face_metric.resize(a.size());
  out.face_normal.resize(a.size());
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (a[f].area_weight != b[f].area_weight)
      throw InputError("topology mismatch: face " + std::to_string(f) +
                       " has different template areas");
    out.face_metric[f] = pointwise_metric_distance_sq(a[f].g, b[f].g, params.lambda);
    out.face_normal[f] = normal_distance_sq(a[f].n, b[f].n);
    out.metric_part += a[f].area_weight * out.face_metric[f];
    out.normal_part += a[f].area_weight * out.face_normal[f];
  }
  out.total = params.a * out.metric_part + params.c * out.normal_part;
  return out;
}

PointwiseDistanceBreakdown body_distance_sq(const RegisteredMesh& a, const RegisteredMesh& b,
                                            const MetricParams& params) {
  if (!a.topology || !b.topology ||
      (a.topology != b.topology && !a.topology->same_connectivity(*b.topology)))
    throw InputError("topology mismatch: meshes are not registered to the same template");
  return body_distance_sq(std::span<const FaceGeometry>(extract_geometry(a)),
                          std::span<const FaceGeometry>(extract_geometry(b)), params);
}

PointwiseDistanceBreakdown body_distance_sq_with_gradient(const TemplateTopology& topology,
                                                          const std::vector<FaceKinematics>& a,
                                                          const std::vector<FaceKinematics>& b,
                                                          const MetricParams& params,
                                                          Positions* grad_a, Positions* grad_b) {
  params.validate();
  if (a.size() != b.size() || a.size() != topology.faces.size())
    throw InputError("topology mismatch in distance gradient");
  const bool want_grad = grad_a != nullptr || grad_b != nullptr;

  PointwiseDistanceBreakdown out;
  out.face_metric.resize(a.size());
  out.face_normal.resize(a.size());

  for (std::size_t f = 0; f < a.size(); ++f) {
    const FaceKinematics& ka = a[f];
    const FaceKinematics& kb = b[f];
    if (want_grad && (ka.degenerate || kb.degenerate))
      throw NumericalError("degenerate face " + std::to_string(f) +
                           ": distance gradient undefined at the cone boundary");
    if (ka.zero_area || kb.zero_area)
      throw NumericalError("degenerate face " + std::to_string(f) +
                           ": normal undefined on a collapsed face");
    const double area = topology.face_area[f];

    // ----- metric term -----
    double dm;
    Mat2 B1 = Mat2::Zero(), B2 = Mat2::Zero();
    if (ka.degenerate || kb.degenerate) {
      const double s1 = std::pow(std::max(ka.det_g, 0.0), 0.25);
      const double s2 = std::pow(std::max(kb.det_g, 0.0), 0.25);
      dm = cone_distance_sq(params.lambda, s1, s2, 0.0);
    } else {
      const PairInvariants inv = pair_invariants(ka.g, kb.g, params.lambda);
      const double cos_t = std::cos(inv.theta);
      dm = cone_distance_sq(params.lambda, inv.s1, inv.s2, inv.theta);
      if (want_grad) {
        // d(d^2)/dtau = s1 s2 sin(theta)/theta; dtau/dy = w ln w / (w^2 - 1);
        // both limits at theta -> 0 / w -> 1 are finite.
        double c_tau = 0;
        if (!inv.saturated) {
          const double sinc =
              inv.theta > 1e-8 ? std::sin(inv.theta) / inv.theta : 1.0 - inv.theta * inv.theta / 6.0;
          const double dtau_dy = (inv.w - 1.0) < 1e-9
                                     ? 0.5
                                     : inv.w * std::log(inv.w) / (inv.w * inv.w - 1.0);
          c_tau = inv.s1 * inv.s2 * sinc * dtau_dy;
        }
        const Mat2 g1i = ka.g_inv;
        const Mat2 g2i = kb.g_inv;
        const double rq = inv.r / inv.q;
        B1 = 8.0 * params.lambda * inv.s1 * (inv.s1 - inv.s2 * cos_t) * g1i +
             c_tau * (inv.r * rq * g1i - 2.0 * rq * (g1i * kb.g * g1i));
        B2 = 8.0 * params.lambda * inv.s2 * (inv.s2 - inv.s1 * cos_t) * g2i +
             c_tau * (2.0 * rq * g1i - inv.r * rq * g2i);
      }
    }
    out.face_metric[f] = dm;
    out.metric_part += area * dm;

    // ----- normal term (same angular noise floor as normal_distance_sq) -----
    const double x = std::clamp(ka.n.dot(kb.n), -1.0, 1.0);
    const bool snapped = x >= 1.0 - kNormalAngleSnap;
    const double angle = snapped ? 0.0 : std::acos(x);
    out.face_normal[f] = angle * angle;
    out.normal_part += area * out.face_normal[f];

    if (!want_grad) continue;

    const auto& tri = topology.faces[f];
    const FaceFrame& fr = topology.frames[f];
    const double wm = params.a * area;  // weight of the metric term in the total
    const double wn = params.c * area;

    // chain d(d^2)/dg through g = [[fu.fu, fu.fv], [fu.fv, fv.fv]] to the corners
    auto add_metric_grad = [&](Positions& grad, const FaceKinematics& k, const Mat2& B) {
      const Vec3 grad_fu = 2.0 * (B(0, 0) * k.f_u + B(0, 1) * k.f_v);
      const Vec3 grad_fv = 2.0 * (B(0, 1) * k.f_u + B(1, 1) * k.f_v);
      const double cv = fr.u3 / (fr.height * fr.l1);
      grad.row(tri[0]) += wm * (-grad_fu / fr.l1 + (cv - 1.0 / fr.height) * grad_fv).transpose();
      grad.row(tri[1]) += wm * (grad_fu / fr.l1 - cv * grad_fv).transpose();
      grad.row(tri[2]) += wm * (grad_fv / fr.height).transpose();
    };

    // d(arccos^2 x)/dx, with the antipodal singularity guarded
    const double xg = std::clamp(x, -1.0 + 1e-12, 1.0 - 1e-12);
    const double hx = xg > 1.0 - 1e-8 ? -2.0 : -2.0 * std::acos(xg) / std::sqrt(1.0 - xg * xg);

    auto add_normal_grad = [&](Positions& grad, const FaceKinematics& k, const Vec3& other_n) {
      if (snapped) return;  // flat inside the snap zone, matching the value
      const Vec3 v = hx * (other_n - x * k.n) / k.n_norm;  // d psi / d (unnormalized normal)
      const Vec3 e1 = fr.l1 * k.f_u;                       // q2 - q1
      const Vec3 e2 = fr.height * k.f_v + fr.u3 * k.f_u;   // q3 - q1
      const Vec3 g2v = e2.cross(v);
      const Vec3 g3v = v.cross(e1);
      grad.row(tri[0]) += wn * (-(g2v + g3v)).transpose();
      grad.row(tri[1]) += wn * g2v.transpose();
      grad.row(tri[2]) += wn * g3v.transpose();
    };

    if (grad_a) {
      add_metric_grad(*grad_a, ka, B1);
      add_normal_grad(*grad_a, ka, kb.n);
    }
    if (grad_b) {
      add_metric_grad(*grad_b, kb, B2);
      add_normal_grad(*grad_b, kb, ka.n);
    }
  }
  out.total = params.a * out.metric_part + params.c * out.normal_part;
  return out;
}

LabeledDistanceMatrix distance_matrix(const std::vector<RegisteredMesh>& meshes,
                                      const MetricParams& params, int threads) {
  params.validate();
  const std::int64_t n = static_cast<std::int64_t>(meshes.size());
  if (n == 0) throw InputError("distance matrix needs at least one mesh");
  for (const RegisteredMesh& m : meshes)
    if (!m.topology->same_connectivity(*meshes.front().topology))
      throw InputError("topology mismatch: meshes are not registered to one template");

  std::vector<std::vector<FaceGeometry>> geometry(meshes.size());
  parallel_for(n, threads, [&](std::int64_t i) {
    geometry[static_cast<std::size_t>(i)] = extract_geometry(meshes[static_cast<std::size_t>(i)]);
  });

  LabeledDistanceMatrix out;
  out.distances = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(static_cast<std::int64_t>(pairs.size()), threads, [&](std::int64_t k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const auto breakdown = body_distance_sq(
        std::span<const FaceGeometry>(geometry[static_cast<std::size_t>(i)]),
        std::span<const FaceGeometry>(geometry[static_cast<std::size_t>(j)]), params);
    const double d = std::sqrt(std::max(breakdown.total, 0.0));
    out.distances(i, j) = d;
    out.distances(j, i) = d;
  });
  return out;
}

}  // namespace elastic
