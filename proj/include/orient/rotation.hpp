#pragma once

// Rotation mathematics over six orientation representations.
//
// Every representation converts losslessly through the unit quaternion, which
// is the internal hub for composition, distances and the exponential map.
// Euler angles use the intrinsic Z-Y'-X'' (yaw, pitch, roll) convention:
//   R = Rz(yaw) * Ry(pitch) * Rx(roll)

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <variant>

#include <Eigen/Core>

namespace orient {

using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

// Order matches the alternatives of RotationPayload.
enum class Repr : std::uint8_t {
  kLieAlgebra = 0,
  kMatrix = 1,
  kSixD = 2,
  kQuatCanonical = 3,
  kQuat = 4,
  kEuler = 5,
};

inline constexpr std::array<Repr, 6> kAllReprs = {
    Repr::kLieAlgebra, Repr::kMatrix, Repr::kSixD,
    Repr::kQuatCanonical, Repr::kQuat, Repr::kEuler};

std::string_view to_string(Repr repr);
// Accepts the canonical tags plus the short aliases "matrix" and "sixd".
Repr parse_repr(std::string_view tag);

class RotationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-angle vector theta * u. Element of the Lie algebra so(3) ~ R^3.
struct TangentVector {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  TangentVector() = default;
  explicit TangentVector(const Eigen::Vector3d& vec) : v(vec) {}
  TangentVector(double x, double y, double z) : v(x, y, z) {}

  double angle() const { return v.norm(); }
};

struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static UnitQuaternion identity() { return {}; }

  Eigen::Vector3d vec() const { return {x, y, z}; }
  double norm() const;
  UnitQuaternion conjugate() const { return {w, -x, -y, -z}; }
  UnitQuaternion operator-() const { return {-w, -x, -y, -z}; }
  UnitQuaternion normalized() const;
};

// Hamilton product.
UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);

/// Unit quaternion restricted to the half-space w >= 0 (single cover).
struct CanonicalQuaternion {
  UnitQuaternion q;
};

struct RotationMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
};

/// First two columns of a rotation matrix.
struct SixDMatrix {
  Eigen::Matrix<double, 3, 2> m = Eigen::Matrix<double, 3, 2>::Identity();
};

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

using RotationPayload =
    std::variant<TangentVector, RotationMatrix, SixDMatrix,
                 CanonicalQuaternion, UnitQuaternion, EulerAngles>;

/// A rotation held in one of the six representations.
class Rotation {
 public:
  Rotation() : payload_(UnitQuaternion{}) {}
  Rotation(const TangentVector& v) : payload_(v) {}            // NOLINT
  Rotation(const RotationMatrix& m) : payload_(m) {}           // NOLINT
  Rotation(const SixDMatrix& m) : payload_(m) {}               // NOLINT
  Rotation(const CanonicalQuaternion& q) : payload_(q) {}      // NOLINT
  Rotation(const UnitQuaternion& q) : payload_(q) {}           // NOLINT
  Rotation(const EulerAngles& e) : payload_(e) {}              // NOLINT

  static Rotation identity(Repr repr);

  Repr repr() const { return static_cast<Repr>(payload_.index()); }
  const RotationPayload& payload() const { return payload_; }

  template <typename T>
  const T& get() const {
    return std::get<T>(payload_);
  }

 private:
  RotationPayload payload_;
};

// Invariant checks. `tol` bounds the allowed violation (unit norm,
// orthonormality, determinant, angle ranges).
bool is_valid(const Rotation& x, double tol = 1e-9);
void check_valid(const Rotation& x, double tol = 1e-6);

UnitQuaternion exp(const TangentVector& tau);
// Minimal axis-angle, norm <= pi. Rejects un-normalized input.
TangentVector log(const UnitQuaternion& q);
TangentVector log(const Rotation& x);

Rotation compose(const Rotation& x, const Rotation& y);
Rotation inverse(const Rotation& x);
// x * Exp(tau), in x's representation.
Rotation boxplus(const Rotation& x, const TangentVector& tau);
// Log(x^-1 * y).
TangentVector boxminus(const Rotation& y, const Rotation& x);
// Rotation angle between x and y, in [0, pi]. Representations may differ.
double geodesic_distance(const Rotation& x, const Rotation& y);

Rotation convert(const Rotation& x, Repr target);
UnitQuaternion to_quaternion(const Rotation& x);
Eigen::Matrix3d to_matrix(const UnitQuaternion& q);
UnitQuaternion from_matrix(const Eigen::Matrix3d& m);
EulerAngles to_euler(const UnitQuaternion& q);
UnitQuaternion from_euler(const EulerAngles& e);

CanonicalQuaternion canonicalize(const UnitQuaternion& q);

// Throws RotationError for near-parallel columns.
RotationMatrix reconstruct_third_column(const SixDMatrix& m);

struct Projection {
  RotationMatrix rotation;
  bool degenerate = false;
};

// Nearest rotation in Frobenius norm. Rank-deficient or non-finite input
// yields the identity with `degenerate` set.
Projection project_to_so3(const Eigen::Matrix3d& m);

// Haar-uniform rotation.
UnitQuaternion sample_uniform(Rng& rng);

TangentVector clamp_angle(const TangentVector& tau, double max_angle);

}  // namespace orient
