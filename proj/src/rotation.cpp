#include "orient/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace orient {

namespace {

// Below this angle exp/log switch to Taylor forms.
constexpr double kSmallAngle = 1e-8;
// Distance of |pitch| to pi/2 treated as gimbal lock.
constexpr double kGimbalTol = 1e-6;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double wrap_half_open(double a) {
  // atan2 returns [-pi, pi]; fold -pi onto pi.
  return a <= -kPi ? kPi : a;
}

bool finite(const UnitQuaternion& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) &&
         std::isfinite(q.z);
}

bool orthonormal(const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho =
      (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

}  // namespace

std::string_view to_string(Repr repr) {
  switch (repr) {
    case Repr::kLieAlgebra: return "lie-algebra";
    case Repr::kMatrix: return "so3-matrix";
    case Repr::kSixD: return "so3-sixd";
    case Repr::kQuatCanonical: return "quaternion-canonical";
    case Repr::kQuat: return "quaternion";
    case Repr::kEuler: return "euler";
  }
  return "unknown";
}

Repr parse_repr(std::string_view tag) {
  for (Repr r : kAllReprs) {
    if (tag == to_string(r)) return r;
  }
  if (tag == "matrix") return Repr::kMatrix;
  if (tag == "sixd") return Repr::kSixD;
  throw std::invalid_argument("unknown representation tag: " +
                              std::string(tag));
}

double UnitQuaternion::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Rotation Rotation::identity(Repr repr) {
  switch (repr) {
    case Repr::kLieAlgebra: return TangentVector{};
    case Repr::kMatrix: return RotationMatrix{};
    case Repr::kSixD: return SixDMatrix{};
    case Repr::kQuatCanonical: return CanonicalQuaternion{};
    case Repr::kQuat: return UnitQuaternion{};
    case Repr::kEuler: return EulerAngles{};
  }
  return UnitQuaternion{};
}

bool is_valid(const Rotation& x, double tol) {
  return std::visit(
      Overloaded{
          [&](const TangentVector& t) {
            return t.v.allFinite() && t.v.norm() <= kPi + tol;
          },
          [&](const RotationMatrix& r) { return orthonormal(r.m, tol); },
          [&](const SixDMatrix& s) {
            if (!s.m.allFinite()) return false;
            return std::abs(s.m.col(0).norm() - 1.0) <= tol &&
                   std::abs(s.m.col(1).norm() - 1.0) <= tol &&
                   std::abs(s.m.col(0).dot(s.m.col(1))) <= tol;
          },
          [&](const CanonicalQuaternion& c) {
            return finite(c.q) && std::abs(c.q.norm() - 1.0) <= tol &&
                   c.q.w >= 0.0;
          },
          [&](const UnitQuaternion& q) {
            return finite(q) && std::abs(q.norm() - 1.0) <= tol;
          },
          [&](const EulerAngles& e) {
            return std::isfinite(e.roll) && std::isfinite(e.pitch) &&
                   std::isfinite(e.yaw) && e.roll > -kPi - tol &&
                   e.roll <= kPi + tol && e.yaw > -kPi - tol &&
                   e.yaw <= kPi + tol && std::abs(e.pitch) <= kPi / 2 + tol;
          }},
      x.payload());
}

void check_valid(const Rotation& x, double tol) {
  if (!is_valid(x, tol)) {
    throw RotationError("rotation violates " + std::string(to_string(x.repr())) +
                        " invariants");
  }
}

UnitQuaternion exp(const TangentVector& tau) {
  const double theta2 = tau.v.squaredNorm();
  const double theta = std::sqrt(theta2);
  double w;
  double s;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    w = 1.0 - theta2 / 8.0;
    s = 0.5 - theta2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    s = std::sin(0.5 * theta) / theta;
  }
  return {w, s * tau.v.x(), s * tau.v.y(), s * tau.v.z()};
}

TangentVector log(const UnitQuaternion& q) {
  check_valid(q);
  // Fold the double cover onto w >= 0.
  const UnitQuaternion p = q.w < 0.0 ? -q : q;
  const Eigen::Vector3d v = p.vec();
  const double n = v.norm();
  if (n < 0.5 * kSmallAngle) {
    // atan(n/w) ~ n/w - (n/w)^3 / 3
    const double r2 = n * n / (p.w * p.w);
    return TangentVector((2.0 / p.w) * (1.0 - r2 / 3.0) * v);
  }
  const double theta = 2.0 * std::atan2(n, p.w);
  return TangentVector((theta / n) * v);
}

TangentVector log(const Rotation& x) {
  if (x.repr() == Repr::kLieAlgebra) {
    check_valid(x);
    return x.get<TangentVector>();
  }
  check_valid(x);
  return log(to_quaternion(x));
}

Eigen::Matrix3d to_matrix(const UnitQuaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

UnitQuaternion from_matrix(const Eigen::Matrix3d& m) {
  // Shepperd: pivot on the largest of trace and diagonal entries.
  const double tr = m.trace();
  UnitQuaternion q;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s,
         (m(1, 0) - m(0, 1)) / s};
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s,
         (m(0, 2) + m(2, 0)) / s};
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s,
         (m(1, 2) + m(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s,
         (m(1, 2) + m(2, 1)) / s, 0.25 * s};
  }
  return q.normalized();
}

UnitQuaternion from_euler(const EulerAngles& e) {
  const double cr = std::cos(0.5 * e.roll), sr = std::sin(0.5 * e.roll);
  const double cp = std::cos(0.5 * e.pitch), sp = std::sin(0.5 * e.pitch);
  const double cy = std::cos(0.5 * e.yaw), sy = std::sin(0.5 * e.yaw);
  return {cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy,
          cr * sp * cy + sr * cp * sy, cr * cp * sy - sr * sp * cy};
}

EulerAngles to_euler(const UnitQuaternion& q) {
  const Eigen::Matrix3d r = to_matrix(q);
  const double sin_pitch = std::clamp(-r(2, 0), -1.0, 1.0);
  // atan2 keeps full precision near +-pi/2 where asin does not.
  double pitch = std::atan2(sin_pitch, std::hypot(r(2, 1), r(2, 2)));
  EulerAngles e;
  if (kPi / 2 - std::abs(pitch) < kGimbalTol) {
    // Roll and yaw are coupled; put everything into yaw.
    pitch = std::copysign(kPi / 2, pitch);
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  }
  e.pitch = pitch;
  e.roll = wrap_half_open(e.roll);
  e.yaw = wrap_half_open(e.yaw);
  return e;
}

CanonicalQuaternion canonicalize(const UnitQuaternion& q) {
  bool negate = q.w < 0.0;
  if (q.w == 0.0) {
    for (double c : {q.x, q.y, q.z}) {
      if (c != 0.0) {
        negate = c < 0.0;
        break;
      }
    }
  }
  return {negate ? -q : q};
}

UnitQuaternion to_quaternion(const Rotation& x) {
  return std::visit(
      Overloaded{
          [](const TangentVector& t) { return exp(t); },
          [](const RotationMatrix& r) { return from_matrix(r.m); },
          [](const SixDMatrix& s) {
            return from_matrix(reconstruct_third_column(s).m);
          },
          [](const CanonicalQuaternion& c) { return c.q; },
          [](const UnitQuaternion& q) { return q; },
          [](const EulerAngles& e) { return from_euler(e); }},
      x.payload());
}

namespace {

Rotation from_quaternion(const UnitQuaternion& q, Repr target) {
  switch (target) {
    case Repr::kLieAlgebra: return log(q);
    case Repr::kMatrix: return RotationMatrix{to_matrix(q)};
    case Repr::kSixD: {
      SixDMatrix s;
      s.m = to_matrix(q).leftCols<2>();
      return s;
    }
    case Repr::kQuatCanonical: return canonicalize(q.normalized());
    case Repr::kQuat: return q.normalized();
    case Repr::kEuler: return to_euler(q);
  }
  return q;
}

void require_same_repr(const Rotation& x, const Rotation& y) {
  if (x.repr() != y.repr()) {
    throw RotationError("representation mismatch: " +
                        std::string(to_string(x.repr())) + " vs " +
                        std::string(to_string(y.repr())));
  }
}

}  // namespace

Rotation convert(const Rotation& x, Repr target) {
  if (x.repr() == target) return x;
  if (x.repr() == Repr::kMatrix && target == Repr::kSixD) {
    SixDMatrix s;
    s.m = x.get<RotationMatrix>().m.leftCols<2>();
    return s;
  }
  if (x.repr() == Repr::kSixD && target == Repr::kMatrix) {
    return reconstruct_third_column(x.get<SixDMatrix>());
  }
  return from_quaternion(to_quaternion(x), target);
}

Rotation compose(const Rotation& x, const Rotation& y) {
  require_same_repr(x, y);
  switch (x.repr()) {
    case Repr::kMatrix:
      return RotationMatrix{x.get<RotationMatrix>().m * y.get<RotationMatrix>().m};
    case Repr::kQuat:
      return x.get<UnitQuaternion>() * y.get<UnitQuaternion>();
    case Repr::kQuatCanonical:
      return canonicalize(x.get<CanonicalQuaternion>().q *
                          y.get<CanonicalQuaternion>().q);
    default:
      return from_quaternion(to_quaternion(x) * to_quaternion(y), x.repr());
  }
}

Rotation inverse(const Rotation& x) {
  return std::visit(
      Overloaded{
          [](const TangentVector& t) -> Rotation { return TangentVector(-t.v); },
          [](const RotationMatrix& r) -> Rotation {
            return RotationMatrix{r.m.transpose()};
          },
          [](const SixDMatrix& s) -> Rotation {
            SixDMatrix out;
            out.m = reconstruct_third_column(s).m.transpose().leftCols<2>();
            return out;
          },
          [](const CanonicalQuaternion& c) -> Rotation {
            return canonicalize(c.q.conjugate());
          },
          [](const UnitQuaternion& q) -> Rotation { return q.conjugate(); },
          [](const EulerAngles& e) -> Rotation {
            return to_euler(from_euler(e).conjugate());
          }},
      x.payload());
}

Rotation boxplus(const Rotation& x, const TangentVector& tau) {
  const UnitQuaternion step = exp(tau);
  switch (x.repr()) {
    case Repr::kMatrix:
      return RotationMatrix{x.get<RotationMatrix>().m * to_matrix(step)};
    case Repr::kQuat:
      return x.get<UnitQuaternion>() * step;
    default:
      return from_quaternion(to_quaternion(x) * step, x.repr());
  }
}

TangentVector boxminus(const Rotation& y, const Rotation& x) {
  require_same_repr(x, y);
  return log(to_quaternion(x).conjugate() * to_quaternion(y));
}

double geodesic_distance(const Rotation& x, const Rotation& y) {
  const UnitQuaternion rel = to_quaternion(x).conjugate() * to_quaternion(y);
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w));
}

RotationMatrix reconstruct_third_column(const SixDMatrix& s) {
  const Eigen::Vector3d c1 = s.m.col(0);
  const Eigen::Vector3d c2 = s.m.col(1);
  const Eigen::Vector3d c3 = c1.cross(c2);
  if (!(c3.norm() >= 1e-6)) {
    throw RotationError("six-d columns are (near) parallel");
  }
  RotationMatrix r;
  r.m << c1, c2, c3;
  return r;
}

Projection project_to_so3(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) return {RotationMatrix{}, true};
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < 1e-9) return {RotationMatrix{}, true};
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0);
  return {RotationMatrix{u * d.asDiagonal() * v.transpose()}, false};
}

UnitQuaternion sample_uniform(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    UnitQuaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
    const double n = q.norm();
    if (n > 0.0) return {q.w / n, q.x / n, q.y / n, q.z / n};
  }
}

TangentVector clamp_angle(const TangentVector& tau, double max_angle) {
  if (!(max_angle > 0.0)) throw std::invalid_argument("max_angle must be positive");
  const double angle = tau.angle();
  if (angle <= max_angle) return tau;
  return TangentVector(tau.v * (max_angle / angle));
}

}  // namespace orient
