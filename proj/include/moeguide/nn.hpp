#pragma once

// Dense multilayer perceptrons with hand-written backward passes and Adam.
//
// Every trainable network in the project (autoencoder experts, the gate, the
// RND and ICM predictors) is a DenseNet. Parameters live in one flat buffer:
// for each layer, the weight matrix (rows = out, cols = in, row-major)
// followed by its bias vector. Gradients use the same layout.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "moeguide/rng.hpp"

namespace moeguide::nn {

enum class Activation { ReLU, Tanh, Identity };
enum class InitScheme { UniformGlorot, Orthogonal };

const char* to_string(Activation a);
const char* to_string(InitScheme s);
Activation activation_from_string(const std::string& s);
InitScheme init_scheme_from_string(const std::string& s);

using Vector = std::vector<double>;

class DenseNet {
 public:
  struct LayerView {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;  // into the flat parameter buffer
    std::size_t bias_offset = 0;
    Activation activation = Activation::Identity;
    bool operator==(const LayerView&) const = default;
  };

  // Per-sample activations recorded by forward() for use in backward().
  struct Tape {
    std::vector<Vector> inputs;  // input to layer k
    std::vector<Vector> pre;     // pre-activation of layer k
    Vector output;
  };

  DenseNet() = default;

  /// All-zero parameters. `activations` has one entry per layer
  /// (layer_dims.size() - 1).
  DenseNet(std::vector<std::size_t> layer_dims, std::vector<Activation> activations);

  /// Randomly initialized parameters; biases start at zero.
  DenseNet(std::vector<std::size_t> layer_dims, std::vector<Activation> activations, InitScheme init, Rng& rng);

  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  const std::vector<LayerView>& layers() const { return layers_; }
  InitScheme init_scheme() const { return init_; }
  void set_init_scheme(InitScheme s) { init_ = s; }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  std::span<const double> weights(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);

  /// Which layer a flat parameter index belongs to.
  std::size_t layer_of(std::size_t param_index) const;

  Vector forward(std::span<const double> x) const;
  Vector forward(std::span<const double> x, Tape& tape) const;

  /// Accumulates dLoss/dparams into `grads` (size parameter_count()) given
  /// dLoss/doutput, and returns dLoss/dinput.
  Vector backward(const Tape& tape, std::span<const double> upstream, std::span<double> grads) const;

  bool operator==(const DenseNet& other) const = default;

 private:
  void build_layout(std::vector<Activation> activations);

  std::vector<std::size_t> dims_;
  std::vector<LayerView> layers_;
  Vector params_;
  InitScheme init_ = InitScheme::UniformGlorot;
};

/// Gradient of the scalar loss whose derivative w.r.t. the output is
/// `upstream`, at input x. Convenience wrapper around forward + backward.
Vector backward(const DenseNet& net, std::span<const double> x, std::span<const double> upstream);

/// Mean over dimensions of squared differences.
double mse(std::span<const double> a, std::span<const double> b);

/// d mse(a, b) / d a.
Vector mse_grad(std::span<const double> a, std::span<const double> b);

/// Numerically stable softmax.
Vector softmax(std::span<const double> logits);

/// Fills `w` (rows x cols, row-major) with a (semi-)orthogonal matrix: rows
/// orthonormal when rows <= cols, columns orthonormal otherwise.
void orthogonal_fill(std::span<double> w, std::size_t rows, std::size_t cols, Rng& rng, double gain = 1.0);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step_count = 0;
  Vector first_moment;
  Vector second_moment;
  std::string label = "net";  // used in diagnostics

  AdamState() = default;
  AdamState(std::size_t n_params, double lr, std::string name = "net")
      : learning_rate(lr), first_moment(n_params, 0.0), second_moment(n_params, 0.0), label(std::move(name)) {}

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update of `net` in place. Throws NonFiniteError
/// naming the layer if any gradient entry is NaN or Inf; parameters and state
/// are left untouched in that case.
void adam_step(DenseNet& net, std::span<const double> grads, AdamState& state);

}  // namespace moeguide::nn
