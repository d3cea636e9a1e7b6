#include "orient/neural_net.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace orient {

namespace {

constexpr const char* kMagic = "orient-densenet";
constexpr int kVersion = 1;

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

std::string read_token(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("checkpoint: unexpected end of input");
  return tok;
}

double read_double(std::istream& in) {
  const std::string tok = read_token(in);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) {
    throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  }
  return v;
}

long read_int(std::istream& in) {
  const std::string tok = read_token(in);
  std::size_t pos = 0;
  const long v = std::stol(tok, &pos);
  if (pos != tok.size()) throw std::runtime_error("checkpoint: bad integer '" + tok + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  const std::string tok = read_token(in);
  if (tok != word) {
    throw std::runtime_error("checkpoint: expected '" + word + "', got '" + tok + "'");
  }
}

}  // namespace

DenseNet::DenseNet(const std::vector<int>& sizes, Head head) : head_(head) {
  require(sizes.size() >= 2, "network needs at least an input and an output size");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    require(sizes[i] > 0 && sizes[i + 1] > 0, "layer sizes must be positive");
    layers_.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]),
                       Eigen::VectorXd::Zero(sizes[i + 1])});
  }
}

DenseNet DenseNet::random(const std::vector<int>& sizes, Head head, Rng& rng,
                          double final_scale) {
  DenseNet net(sizes, head);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    DenseLayer& layer = net.layers_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const double scale = l + 1 == net.layers_.size() ? final_scale : 1.0;
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        layer.weight(i, j) = scale * dist(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = scale * dist(rng);
  }
  return net;
}

int DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::vector<int> DenseNet::sizes() const {
  std::vector<int> s;
  if (layers_.empty()) return s;
  s.push_back(input_dim());
  for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) const {
  Eigen::MatrixXd batch = input;
  return forward(batch).col(0);
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& batch) const {
  require(batch.rows() == input_dim(),
          "forward: input has " + std::to_string(batch.rows()) + " rows, expected " +
              std::to_string(input_dim()));
  Eigen::MatrixXd a = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = head_ == Head::kTanh ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
  }
  return a;
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& batch, Tape& tape) const {
  require(batch.rows() == input_dim(),
          "forward: input has " + std::to_string(batch.rows()) + " rows, expected " +
              std::to_string(input_dim()));
  tape.activations.resize(layers_.size() + 1);
  tape.activations[0] = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * tape.activations[l];
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      tape.activations[l + 1] = z.cwiseMax(0.0);
    } else {
      tape.activations[l + 1] =
          head_ == Head::kTanh ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
  }
  return tape.activations.back();
}

Gradient DenseNet::backward(const Tape& tape, const Eigen::MatrixXd& output_grad) const {
  require(tape.activations.size() == layers_.size() + 1, "backward: tape does not match net");
  const Eigen::MatrixXd& out = tape.activations.back();
  require(output_grad.rows() == out.rows() && output_grad.cols() == out.cols(),
          "backward: output gradient shape mismatch");

  Gradient g;
  g.layers.resize(layers_.size());
  // dL/dz for the current layer.
  Eigen::MatrixXd delta = output_grad;
  if (head_ == Head::kTanh) {
    delta.array() *= 1.0 - out.array().square();
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd& a_in = tape.activations[l];
    g.layers[l].weight.noalias() = delta * a_in.transpose();
    g.layers[l].bias = delta.rowwise().sum();
    Eigen::MatrixXd upstream = layers_[l].weight.transpose() * delta;
    if (l > 0) {
      // ReLU: pass gradient where the activation was positive.
      upstream.array() *= (a_in.array() > 0.0).cast<double>();
      delta = std::move(upstream);
    } else {
      g.input = std::move(upstream);
    }
  }
  return g;
}

Gradient DenseNet::backward(const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd& output_grad) const {
  Tape tape;
  forward(input, tape);
  return backward(tape, output_grad);
}

bool DenseNet::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool DenseNet::operator==(const DenseNet& other) const {
  if (head_ != other.head_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

void DenseNet::save(std::ostream& out) const {
  std::ostringstream s;
  s << std::hexfloat;
  s << kMagic << ' ' << kVersion << '\n';
  s << "head " << (head_ == Head::kTanh ? "tanh" : "identity") << '\n';
  s << "layers " << layers_.size() << '\n';
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    s << "layer " << l << ' ' << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        s << (j ? " " : "") << layer.weight(i, j);
      }
      s << '\n';
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      s << (i ? " " : "") << layer.bias(i);
    }
    s << '\n';
  }
  out << s.str();
}

DenseNet DenseNet::load(std::istream& in) {
  expect(in, kMagic);
  const long version = read_int(in);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  expect(in, "head");
  const std::string head = read_token(in);
  if (head != "tanh" && head != "identity") {
    throw std::runtime_error("checkpoint: unknown head '" + head + "'");
  }
  expect(in, "layers");
  const long count = read_int(in);
  if (count < 1) throw std::runtime_error("checkpoint: no layers");
  DenseNet net;
  net.head_ = head == "tanh" ? Head::kTanh : Head::kIdentity;
  for (long l = 0; l < count; ++l) {
    expect(in, "layer");
    if (read_int(in) != l) throw std::runtime_error("checkpoint: layers out of order");
    const long rows = read_int(in);
    const long cols = read_int(in);
    if (rows < 1 || cols < 1) throw std::runtime_error("checkpoint: bad layer shape");
    if (!net.layers_.empty() && net.layers_.back().weight.rows() != cols) {
      throw std::runtime_error("checkpoint: layer shapes do not chain");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) layer.weight(i, j) = read_double(in);
    for (long i = 0; i < rows; ++i) layer.bias(i) = read_double(in);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

AdamState AdamState::for_net(const DenseNet& net, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& l : net.layers()) {
    DenseLayer zero{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())};
    s.m.push_back(zero);
    s.v.push_back(zero);
  }
  return s;
}

void adam_step(DenseNet& net, const Gradient& grad, AdamState& state) {
  auto& layers = net.layers();
  require(grad.layers.size() == layers.size() && state.m.size() == layers.size(),
          "adam_step: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(grad.layers[l].weight.rows() == layers[l].weight.rows() &&
                grad.layers[l].weight.cols() == layers[l].weight.cols() &&
                grad.layers[l].bias.size() == layers[l].bias.size(),
            "adam_step: gradient shape mismatch");
    if (!grad.layers[l].weight.allFinite() || !grad.layers[l].bias.allFinite()) {
      throw DivergenceError("adam_step: non-finite gradient in layer " + std::to_string(l));
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, state.m[l].weight, state.v[l].weight, grad.layers[l].weight);
    update(layers[l].bias, state.m[l].bias, state.v[l].bias, grad.layers[l].bias);
  }
}

void soft_update(DenseNet& target, const DenseNet& online, double rate) {
  auto& t = target.layers();
  const auto& o = online.layers();
  require(t.size() == o.size(), "soft_update: layer count mismatch");
  for (std::size_t l = 0; l < t.size(); ++l) {
    require(t[l].weight.rows() == o[l].weight.rows() &&
                t[l].weight.cols() == o[l].weight.cols(),
            "soft_update: shape mismatch");
    t[l].weight = (1.0 - rate) * t[l].weight + rate * o[l].weight;
    t[l].bias = (1.0 - rate) * t[l].bias + rate * o[l].bias;
  }
}

}  // namespace orient
