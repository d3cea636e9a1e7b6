#pragma once

// Network boundary: rotations in, flat vectors out (observations), and raw
// network vectors in, bounded relative rotations out (actions).

#include <cstddef>
#include <span>
#include <vector>

#include "orient/rotation.hpp"

namespace orient {

inline constexpr double kDefaultMaxAngle = 0.1 * kPi;

// Flattened size of one rotation in `repr`.
std::size_t obs_dim(Repr repr);
std::size_t action_dim(Repr repr);

// Flattens `x` (converted to `repr`) into `out`, which must hold obs_dim(repr)
// values. Matrices are flattened column by column.
void flatten(const Rotation& x, Repr repr, std::span<double> out);

// Inverse of flatten: reads obs_dim(repr) values as a rotation in `repr`.
// Quaternions are renormalized; other payloads are taken as is.
Rotation unflatten(std::span<const double> values, Repr repr);

// state || goal, each converted and flattened in `repr`.
std::vector<double> encode_observation(const Rotation& state, const Rotation& goal,
                                       Repr repr);
void encode_observation(const Rotation& state, const Rotation& goal, Repr repr,
                        std::span<double> out);

struct ActionSpec {
  Repr repr = Repr::kLieAlgebra;
  double max_angle = kDefaultMaxAngle;

  std::size_t raw_dim() const { return action_dim(repr); }
  // Per-component scale applied to the [-1, 1] raw output before decoding.
  double component_scale() const;
};

struct DecodedAction {
  Rotation action;
  bool degenerate = false;
};

// Maps a raw tanh output to a relative rotation in spec.repr whose angle is
// at most spec.max_angle. Degenerate outputs decode to the identity.
DecodedAction decode_action(std::span<const double> raw, const ActionSpec& spec);

/// Stateful wrapper that tallies degenerate decodes.
class ActionDecoder {
 public:
  explicit ActionDecoder(ActionSpec spec) : spec_(spec) {}

  Rotation decode(std::span<const double> raw) {
    DecodedAction d = decode_action(raw, spec_);
    if (d.degenerate) ++degenerate_count_;
    return d.action;
  }

  const ActionSpec& spec() const { return spec_; }
  std::size_t degenerate_count() const { return degenerate_count_; }

 private:
  ActionSpec spec_;
  std::size_t degenerate_count_ = 0;
};

}  // namespace orient
