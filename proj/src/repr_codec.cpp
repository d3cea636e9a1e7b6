#include "orient/repr_codec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace orient {

namespace {

constexpr double kDegenerateNorm = 1e-6;

// Returns `action` unchanged when its angle is within bounds, otherwise the
// rotation about the same axis by exactly max_angle, in `repr`.
Rotation clamp_rotation(const Rotation& action, const UnitQuaternion& q,
                        Repr repr, double max_angle) {
  const TangentVector tau = log(q);
  if (tau.angle() <= max_angle) return action;
  return convert(Rotation(exp(clamp_angle(tau, max_angle))), repr);
}

}  // namespace

std::size_t obs_dim(Repr repr) {
  switch (repr) {
    case Repr::kLieAlgebra: return 3;
    case Repr::kMatrix: return 9;
    case Repr::kSixD: return 6;
    case Repr::kQuatCanonical: return 4;
    case Repr::kQuat: return 4;
    case Repr::kEuler: return 3;
  }
  return 0;
}

std::size_t action_dim(Repr repr) { return obs_dim(repr); }

double ActionSpec::component_scale() const {
  switch (repr) {
    case Repr::kLieAlgebra: return max_angle / std::sqrt(3.0);
    case Repr::kEuler: return max_angle;
    default: return 1.0;
  }
}

void flatten(const Rotation& x, Repr repr, std::span<double> out) {
  if (out.size() != obs_dim(repr)) {
    throw std::invalid_argument("flatten: output span has wrong length");
  }
  const Rotation y = convert(x, repr);
  switch (repr) {
    case Repr::kLieAlgebra: {
      const auto& v = y.get<TangentVector>().v;
      for (int i = 0; i < 3; ++i) out[i] = v(i);
      break;
    }
    case Repr::kMatrix: {
      const auto& m = y.get<RotationMatrix>().m;
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) out[3 * c + r] = m(r, c);
      break;
    }
    case Repr::kSixD: {
      const auto& m = y.get<SixDMatrix>().m;
      for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 3; ++r) out[3 * c + r] = m(r, c);
      break;
    }
    case Repr::kQuatCanonical:
    case Repr::kQuat: {
      const UnitQuaternion& q = repr == Repr::kQuat
                                    ? y.get<UnitQuaternion>()
                                    : y.get<CanonicalQuaternion>().q;
      out[0] = q.w;
      out[1] = q.x;
      out[2] = q.y;
      out[3] = q.z;
      break;
    }
    case Repr::kEuler: {
      const auto& e = y.get<EulerAngles>();
      out[0] = e.roll;
      out[1] = e.pitch;
      out[2] = e.yaw;
      break;
    }
  }
}

Rotation unflatten(std::span<const double> v, Repr repr) {
  if (v.size() != obs_dim(repr)) {
    throw std::invalid_argument("unflatten: input span has wrong length");
  }
  switch (repr) {
    case Repr::kLieAlgebra: return TangentVector(v[0], v[1], v[2]);
    case Repr::kMatrix: {
      RotationMatrix r;
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) r.m(k, c) = v[3 * c + k];
      return r;
    }
    case Repr::kSixD: {
      SixDMatrix s;
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 3; ++k) s.m(k, c) = v[3 * c + k];
      return s;
    }
    case Repr::kQuatCanonical:
      return CanonicalQuaternion{UnitQuaternion{v[0], v[1], v[2], v[3]}.normalized()};
    case Repr::kQuat: return UnitQuaternion{v[0], v[1], v[2], v[3]}.normalized();
    case Repr::kEuler: return EulerAngles{v[0], v[1], v[2]};
  }
  return UnitQuaternion{};
}

void encode_observation(const Rotation& state, const Rotation& goal, Repr repr,
                        std::span<double> out) {
  const std::size_t n = obs_dim(repr);
  if (out.size() != 2 * n) {
    throw std::invalid_argument("encode_observation: output span has wrong length");
  }
  flatten(state, repr, out.first(n));
  flatten(goal, repr, out.subspan(n, n));
}

std::vector<double> encode_observation(const Rotation& state, const Rotation& goal,
                                       Repr repr) {
  std::vector<double> out(2 * obs_dim(repr));
  encode_observation(state, goal, repr, out);
  return out;
}

DecodedAction decode_action(std::span<const double> raw, const ActionSpec& spec) {
  if (raw.size() != spec.raw_dim()) {
    throw std::invalid_argument("decode_action: expected " +
                                std::to_string(spec.raw_dim()) +
                                " components, got " + std::to_string(raw.size()));
  }
  const double scale = spec.component_scale();
  const Rotation identity = Rotation::identity(spec.repr);

  switch (spec.repr) {
    case Repr::kLieAlgebra:
      // Box bound: each component within max_angle / sqrt(3).
      return {TangentVector(scale * raw[0], scale * raw[1], scale * raw[2]), false};

    case Repr::kMatrix: {
      Eigen::Matrix3d m;
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = raw[3 * c + r];
      const Projection p = project_to_so3(m);
      if (p.degenerate) return {identity, true};
      return {clamp_rotation(p.rotation, from_matrix(p.rotation.m), spec.repr,
                             spec.max_angle),
              false};
    }

    case Repr::kSixD: {
      Eigen::Vector3d c1(raw[0], raw[1], raw[2]);
      Eigen::Vector3d c2(raw[3], raw[4], raw[5]);
      const double n1 = c1.norm();
      if (!(n1 >= kDegenerateNorm)) return {identity, true};
      c1 /= n1;
      c2 -= c1.dot(c2) * c1;
      const double n2 = c2.norm();
      if (!(n2 >= kDegenerateNorm)) return {identity, true};
      c2 /= n2;
      SixDMatrix s;
      s.m << c1, c2;
      return {clamp_rotation(s, from_matrix(reconstruct_third_column(s).m),
                             spec.repr, spec.max_angle),
              false};
    }

    case Repr::kQuatCanonical:
    case Repr::kQuat: {
      const UnitQuaternion v{raw[0], raw[1], raw[2], raw[3]};
      const double n = v.norm();
      if (!(n >= kDegenerateNorm)) return {identity, true};
      const UnitQuaternion q{v.w / n, v.x / n, v.y / n, v.z / n};
      if (spec.repr == Repr::kQuat) {
        return {clamp_rotation(q, q, spec.repr, spec.max_angle), false};
      }
      const CanonicalQuaternion c = canonicalize(q);
      return {clamp_rotation(c, c.q, spec.repr, spec.max_angle), false};
    }

    case Repr::kEuler: {
      const EulerAngles e{scale * raw[0], scale * raw[1], scale * raw[2]};
      return {clamp_rotation(e, from_euler(e), spec.repr, spec.max_angle), false};
    }
  }
  return {identity, true};
}

}  // namespace orient
