#pragma once

// Mixture of autoencoder experts used as a similarity model over
// demonstration states.
//
// A state is z-normalized with statistics of the demonstration set, every
// expert reconstructs it, and a softmax gate mixes the reconstructions:
//
//   x_hat = sum_i weight_i(x) * expert_i(x)
//
// The per-state loss L is mse(x_hat, x) in normalized coordinates. States
// close to the demonstrations reconstruct well and get a small L.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moeguide/exec.hpp"
#include "moeguide/nn.hpp"
#include "moeguide/rng.hpp"

namespace moeguide::moe {

using nn::Vector;

inline constexpr double kStdFloor = 1e-8;

struct Normalizer {
  Vector mean;
  Vector stddev;  // population standard deviation, unfloored

  bool fitted() const { return !mean.empty(); }
  std::size_t dim() const { return mean.size(); }

  static Normalizer fit(std::span<const Vector> states);

  /// (s - mean) / max(std, 1e-8) per dimension.
  Vector normalize(std::span<const double> s) const;
  Vector denormalize(std::span<const double> z) const;

  bool operator==(const Normalizer&) const = default;
};

struct MoEArch {
  std::size_t num_experts = 2;
  std::size_t bottleneck = 1;
  std::size_t expert_hidden = 64;
  std::size_t gate_hidden = 32;
  // Keep only the k largest gate logits; 0 means dense gating.
  std::size_t top_k = 0;
  nn::InitScheme init = nn::InitScheme::UniformGlorot;

  bool operator==(const MoEArch&) const = default;
};

/// Expert autoencoder: [d, hidden, b] encoder, [b, hidden, d] decoder.
nn::DenseNet make_expert(std::size_t state_dim, const MoEArch& arch, Rng& rng);
nn::DenseNet make_gate(std::size_t state_dim, const MoEArch& arch, Rng& rng);

std::size_t parameter_count(std::size_t state_dim, const MoEArch& arch);

struct MoEGradients {
  std::vector<Vector> experts;
  Vector gate;

  void zero();
  MoEGradients& operator+=(const MoEGradients& other);
  MoEGradients& operator*=(double s);
};

class MoEModel {
 public:
  struct Reconstruction {
    Vector x_hat;
    Vector weights;
  };

  MoEModel() = default;
  MoEModel(std::size_t state_dim, const MoEArch& arch, Rng& rng);
  MoEModel(const MoEArch& arch, std::vector<nn::DenseNet> experts, nn::DenseNet gate, Normalizer normalizer);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t num_experts() const { return experts_.size(); }
  const MoEArch& arch() const { return arch_; }

  const std::vector<nn::DenseNet>& experts() const { return experts_; }
  std::vector<nn::DenseNet>& experts() { return experts_; }
  const nn::DenseNet& gate() const { return gate_; }
  nn::DenseNet& gate() { return gate_; }
  const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(Normalizer n);

  /// Throws if the normalizer has not been fitted.
  Vector normalize(std::span<const double> raw) const;

  /// Gate weights on the simplex for a normalized input.
  Vector gate_weights(std::span<const double> x) const;

  /// Convex combination of expert reconstructions of a normalized input.
  Reconstruction reconstruct(std::span<const double> x) const;

  /// L for a raw (unnormalized) state.
  double loss(std::span<const double> raw) const;
  double loss_normalized(std::span<const double> x) const;

  /// Adds dL/dparams for one normalized sample into `grads`; returns L.
  double accumulate_gradient(std::span<const double> x, MoEGradients& grads) const;

  MoEGradients zero_gradients() const;

  bool operator==(const MoEModel&) const = default;

 private:
  Vector gate_from_logits(std::span<const double> logits) const;
  void check_dim(std::size_t n) const;

  MoEArch arch_;
  std::size_t state_dim_ = 0;
  std::vector<nn::DenseNet> experts_;
  nn::DenseNet gate_;
  Normalizer normalizer_;
};

struct DemoRecord {
  std::int64_t episode_id = 0;
  std::int64_t step_index = 0;
  Vector state;

  bool operator==(const DemoRecord&) const = default;
};

struct DemoSet {
  std::vector<DemoRecord> records;
  std::size_t gap = 0;
  std::string source_tag;

  std::size_t state_dim() const { return records.empty() ? 0 : records.front().state.size(); }
  std::vector<Vector> states() const;
  /// Throws ShapeError if record dimensions disagree.
  void validate() const;

  bool operator==(const DemoSet&) const = default;
};

/// Keeps step indices 0, g+1, 2(g+1), ... of every episode, counted from the
/// first record of the episode. The input order of records is preserved.
DemoSet subsample_demos(const DemoSet& full, std::size_t gap);

struct TrainConfig {
  std::size_t epochs = 3000;
  double learning_rate = 1e-3;
  // nullopt: full batch up to 4096 states, minibatches of 256 above that.
  std::optional<std::size_t> batch_size;
  std::uint64_t seed = 0;
  Exec exec = Exec::Parallel;
};

struct TrainResult {
  MoEModel model;
  std::vector<double> history;  // mean train loss per epoch
};

/// Fits the normalizer on the demo states, initializes experts and gate from
/// `cfg.seed`, and trains them jointly with Adam on the mixture loss.
TrainResult train_moe(const DemoSet& demos, const MoEArch& arch, const TrainConfig& cfg);

/// Continues training an existing model on pre-normalized samples.
std::vector<double> train_normalized(MoEModel& model, std::span<const Vector> samples, const TrainConfig& cfg);

}  // namespace moeguide::moe
