#include "moeguide/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "moeguide/error.hpp"

namespace moeguide::nn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

const char* to_string(InitScheme s) { return s == InitScheme::Orthogonal ? "orthogonal" : "glorot_uniform"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw IoError("unknown activation tag '" + s + "'");
}

InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "orthogonal") return InitScheme::Orthogonal;
  if (s == "glorot_uniform") return InitScheme::UniformGlorot;
  throw IoError("unknown init scheme '" + s + "'");
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Identity:
      return z;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

DenseNet::DenseNet(std::vector<std::size_t> layer_dims, std::vector<Activation> activations)
    : dims_(std::move(layer_dims)) {
  build_layout(std::move(activations));
}

DenseNet::DenseNet(std::vector<std::size_t> layer_dims, std::vector<Activation> activations, InitScheme init, Rng& rng)
    : dims_(std::move(layer_dims)), init_(init) {
  build_layout(std::move(activations));
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& L = layers_[k];
    auto w = weights(k);
    if (init == InitScheme::Orthogonal) {
      orthogonal_fill(w, L.out, L.in, rng);
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(L.in + L.out));
      for (double& v : w) v = rng.uniform(-limit, limit);
    }
  }
}

void DenseNet::build_layout(std::vector<Activation> activations) {
  if (dims_.size() < 2) throw ShapeError("DenseNet needs at least input and output widths");
  if (activations.size() != dims_.size() - 1) {
    std::ostringstream msg;
    msg << "DenseNet: " << activations.size() << " activations for " << dims_.size() - 1 << " layers";
    throw ShapeError(msg.str());
  }
  std::size_t offset = 0;
  layers_.clear();
  for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
    if (dims_[k] == 0 || dims_[k + 1] == 0) throw ShapeError("DenseNet: zero layer width");
    LayerView L;
    L.in = dims_[k];
    L.out = dims_[k + 1];
    L.weight_offset = offset;
    offset += L.in * L.out;
    L.bias_offset = offset;
    offset += L.out;
    L.activation = activations[k];
    layers_.push_back(L);
  }
  params_.assign(offset, 0.0);
}

std::span<const double> DenseNet::weights(std::size_t k) const {
  const auto& L = layers_.at(k);
  return std::span<const double>(params_).subspan(L.weight_offset, L.in * L.out);
}
std::span<double> DenseNet::weights(std::size_t k) {
  const auto& L = layers_.at(k);
  return std::span<double>(params_).subspan(L.weight_offset, L.in * L.out);
}
std::span<const double> DenseNet::bias(std::size_t k) const {
  const auto& L = layers_.at(k);
  return std::span<const double>(params_).subspan(L.bias_offset, L.out);
}
std::span<double> DenseNet::bias(std::size_t k) {
  const auto& L = layers_.at(k);
  return std::span<double>(params_).subspan(L.bias_offset, L.out);
}

std::size_t DenseNet::layer_of(std::size_t param_index) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (param_index < layers_[k].bias_offset + layers_[k].out) return k;
  }
  return layers_.size();
}

Vector DenseNet::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    std::ostringstream msg;
    msg << "input-shape error: expected " << input_dim() << " values, got " << x.size();
    throw ShapeError(msg.str());
  }
  Vector cur(x.begin(), x.end());
  Vector next;
  for (const auto& L : layers_) {
    next.assign(L.out, 0.0);
    const double* W = params_.data() + L.weight_offset;
    const double* b = params_.data() + L.bias_offset;
    for (std::size_t r = 0; r < L.out; ++r) {
      double acc = b[r];
      const double* row = W + r * L.in;
      for (std::size_t c = 0; c < L.in; ++c) acc += row[c] * cur[c];
      next[r] = activate(L.activation, acc);
    }
    cur.swap(next);
  }
  return cur;
}

Vector DenseNet::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim()) {
    std::ostringstream msg;
    msg << "input-shape error: expected " << input_dim() << " values, got " << x.size();
    throw ShapeError(msg.str());
  }
  tape.inputs.resize(layers_.size());
  tape.pre.resize(layers_.size());
  Vector cur(x.begin(), x.end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& L = layers_[k];
    tape.inputs[k] = cur;
    auto& z = tape.pre[k];
    z.assign(L.out, 0.0);
    const double* W = params_.data() + L.weight_offset;
    const double* b = params_.data() + L.bias_offset;
    for (std::size_t r = 0; r < L.out; ++r) {
      double acc = b[r];
      const double* row = W + r * L.in;
      for (std::size_t c = 0; c < L.in; ++c) acc += row[c] * cur[c];
      z[r] = acc;
    }
    cur.resize(L.out);
    for (std::size_t r = 0; r < L.out; ++r) cur[r] = activate(L.activation, z[r]);
  }
  tape.output = cur;
  return cur;
}

Vector DenseNet::backward(const Tape& tape, std::span<const double> upstream, std::span<double> grads) const {
  if (upstream.size() != output_dim()) throw ShapeError("backward: upstream gradient size mismatch");
  if (grads.size() != params_.size()) throw ShapeError("backward: gradient buffer size mismatch");
  if (tape.pre.size() != layers_.size()) throw ShapeError("backward: tape does not match network");
  Vector delta(upstream.begin(), upstream.end());
  Vector prev;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& L = layers_[k];
    const auto& z = tape.pre[k];
    const auto& in = tape.inputs[k];
    for (std::size_t r = 0; r < L.out; ++r) delta[r] *= activate_grad(L.activation, z[r]);
    double* gW = grads.data() + L.weight_offset;
    double* gb = grads.data() + L.bias_offset;
    const double* W = params_.data() + L.weight_offset;
    prev.assign(L.in, 0.0);
    for (std::size_t r = 0; r < L.out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      double* grow = gW + r * L.in;
      const double* wrow = W + r * L.in;
      for (std::size_t c = 0; c < L.in; ++c) {
        grow[c] += d * in[c];
        prev[c] += d * wrow[c];
      }
    }
    delta.swap(prev);
  }
  return delta;
}

Vector backward(const DenseNet& net, std::span<const double> x, std::span<const double> upstream) {
  DenseNet::Tape tape;
  net.forward(x, tape);
  Vector grads(net.parameter_count(), 0.0);
  net.backward(tape, upstream, grads);
  return grads;
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("mse: length mismatch");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

Vector mse_grad(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("mse: length mismatch");
  Vector g(a.size());
  const double scale = 2.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = scale * (a[i] - b[i]);
  return g;
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

void orthogonal_fill(std::span<double> w, std::size_t rows, std::size_t cols, Rng& rng, double gain) {
  if (w.size() != rows * cols) throw ShapeError("orthogonal_fill: buffer size mismatch");
  // QR of a tall Gaussian matrix; sign-fix by diag(R) so the result is
  // uniformly distributed over the orthogonal group.
  const bool transpose = rows < cols;
  const Eigen::Index tall = static_cast<Eigen::Index>(transpose ? cols : rows);
  const Eigen::Index wide = static_cast<Eigen::Index>(transpose ? rows : cols);
  Eigen::MatrixXd g(tall, wide);
  for (Eigen::Index r = 0; r < tall; ++r)
    for (Eigen::Index c = 0; c < wide; ++c) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
  const Eigen::MatrixXd& rmat = qr.matrixQR();
  for (Eigen::Index c = 0; c < wide; ++c) {
    if (rmat(c, c) < 0.0) q.col(c) *= -1.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = transpose ? q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r))
                                 : q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      w[r * cols + c] = gain * v;
    }
  }
}

void adam_step(DenseNet& net, std::span<const double> grads, AdamState& state) {
  auto params = net.parameters();
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ for " + state.label);
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      const std::size_t k = net.layer_of(i);
      const auto& L = net.layers()[k];
      std::ostringstream msg;
      msg << "non-finite gradient in " << state.label << " layer " << k << " (" << L.in << "->" << L.out << ", "
          << (i >= L.bias_offset ? "bias" : "weight") << ")";
      throw NonFiniteError(msg.str());
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace moeguide::nn
