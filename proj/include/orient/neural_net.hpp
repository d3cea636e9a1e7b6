#pragma once

// Dense feed-forward networks with an exact reverse pass and Adam.
//
// Batches are column-major: each column of an input matrix is one sample.
// Hidden layers use ReLU; the output head is identity or tanh.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orient/rotation.hpp"

namespace orient {

enum class Head { kIdentity, kTanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Parameter gradient plus the gradient with respect to the network input.
struct Gradient {
  std::vector<DenseLayer> layers;
  Eigen::MatrixXd input;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DenseNet {
 public:
  // Post-activation values of every layer, input included.
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };

  DenseNet() = default;
  // Zero-initialized network with layer widths `sizes` (input first).
  DenseNet(const std::vector<int>& sizes, Head head);

  // Uniform(+-1/sqrt(fan_in)) weights and biases; the final layer is further
  // multiplied by `final_scale`.
  static DenseNet random(const std::vector<int>& sizes, Head head, Rng& rng,
                         double final_scale = 1.0);

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, Tape& tape) const;

  // Reverse pass for a recorded forward. Parameter gradients are summed over
  // the batch columns.
  Gradient backward(const Tape& tape, const Eigen::MatrixXd& output_grad) const;
  Gradient backward(const Eigen::MatrixXd& input,
                    const Eigen::MatrixXd& output_grad) const;

  int input_dim() const;
  int output_dim() const;
  Head head() const { return head_; }
  std::vector<int> sizes() const;
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  bool all_finite() const;
  bool operator==(const DenseNet& other) const;

  // Text checkpoint; see README for the layout. Values are written as
  // hexadecimal floats so a save/load cycle is bit-exact.
  void save(std::ostream& out) const;
  static DenseNet load(std::istream& in);

 private:
  std::vector<DenseLayer> layers_;
  Head head_ = Head::kIdentity;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  long step = 0;

  static AdamState for_net(const DenseNet& net, AdamConfig config = {});
};

// One bias-corrected Adam update. Throws DivergenceError on non-finite
// gradients, leaving `net` and `state` untouched.
void adam_step(DenseNet& net, const Gradient& grad, AdamState& state);

// target <- (1 - rate) * target + rate * online
void soft_update(DenseNet& target, const DenseNet& online, double rate);

}  // namespace orient
