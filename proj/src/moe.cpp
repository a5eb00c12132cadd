#include "moeguide/moe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "moeguide/error.hpp"
#include "moeguide/kernels.hpp"

namespace moeguide::moe {

Normalizer Normalizer::fit(std::span<const Vector> states) {
  if (states.empty()) throw ShapeError("cannot fit a normalizer on zero states");
  const std::size_t d = states.front().size();
  Normalizer n;
  n.mean.assign(d, 0.0);
  n.stddev.assign(d, 0.0);
  for (const auto& s : states) {
    if (s.size() != d) throw ShapeError("normalizer: inconsistent state dimensions");
    for (std::size_t j = 0; j < d; ++j) n.mean[j] += s[j];
  }
  const double count = static_cast<double>(states.size());
  for (double& m : n.mean) m /= count;
  for (const auto& s : states) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = s[j] - n.mean[j];
      n.stddev[j] += diff * diff;
    }
  }
  for (double& v : n.stddev) v = std::sqrt(v / count);
  return n;
}

Vector Normalizer::normalize(std::span<const double> s) const {
  if (!fitted()) throw std::logic_error("state normalizer has not been fitted");
  if (s.size() != mean.size()) throw ShapeError("normalize: state dimension mismatch");
  Vector z(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) z[j] = (s[j] - mean[j]) / std::max(stddev[j], kStdFloor);
  return z;
}

Vector Normalizer::denormalize(std::span<const double> z) const {
  if (!fitted()) throw std::logic_error("state normalizer has not been fitted");
  if (z.size() != mean.size()) throw ShapeError("denormalize: state dimension mismatch");
  Vector s(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) s[j] = z[j] * std::max(stddev[j], kStdFloor) + mean[j];
  return s;
}

nn::DenseNet make_expert(std::size_t state_dim, const MoEArch& arch, Rng& rng) {
  using nn::Activation;
  return nn::DenseNet({state_dim, arch.expert_hidden, arch.bottleneck, arch.expert_hidden, state_dim},
                      {Activation::ReLU, Activation::Identity, Activation::ReLU, Activation::Identity}, arch.init, rng);
}

nn::DenseNet make_gate(std::size_t state_dim, const MoEArch& arch, Rng& rng) {
  using nn::Activation;
  return nn::DenseNet({state_dim, arch.gate_hidden, arch.num_experts}, {Activation::ReLU, Activation::Identity},
                      arch.init, rng);
}

std::size_t parameter_count(std::size_t d, const MoEArch& a) {
  const std::size_t h = a.expert_hidden;
  const std::size_t b = a.bottleneck;
  const std::size_t expert = (d * h + h) + (h * b + b) + (b * h + h) + (h * d + d);
  const std::size_t gate = (d * a.gate_hidden + a.gate_hidden) + (a.gate_hidden * a.num_experts + a.num_experts);
  // A single expert needs no gate: its softmax weight is identically 1.
  return a.num_experts * expert + (a.num_experts > 1 ? gate : 0);
}

void MoEGradients::zero() {
  for (auto& e : experts) std::fill(e.begin(), e.end(), 0.0);
  std::fill(gate.begin(), gate.end(), 0.0);
}

MoEGradients& MoEGradients::operator+=(const MoEGradients& other) {
  for (std::size_t i = 0; i < experts.size(); ++i)
    for (std::size_t j = 0; j < experts[i].size(); ++j) experts[i][j] += other.experts[i][j];
  for (std::size_t j = 0; j < gate.size(); ++j) gate[j] += other.gate[j];
  return *this;
}

MoEGradients& MoEGradients::operator*=(double s) {
  for (auto& e : experts)
    for (double& v : e) v *= s;
  for (double& v : gate) v *= s;
  return *this;
}

MoEModel::MoEModel(std::size_t state_dim, const MoEArch& arch, Rng& rng) : arch_(arch), state_dim_(state_dim) {
  if (arch.num_experts < 1) throw ConfigError("moe.num_experts must be >= 1");
  if (arch.bottleneck < 1) throw ConfigError("moe.bottleneck must be >= 1");
  if (state_dim < 1) throw ShapeError("state_dim must be >= 1");
  experts_.reserve(arch.num_experts);
  for (std::size_t i = 0; i < arch.num_experts; ++i) experts_.push_back(make_expert(state_dim, arch, rng));
  gate_ = make_gate(state_dim, arch, rng);
}

MoEModel::MoEModel(const MoEArch& arch, std::vector<nn::DenseNet> experts, nn::DenseNet gate, Normalizer normalizer)
    : arch_(arch), experts_(std::move(experts)), gate_(std::move(gate)), normalizer_(std::move(normalizer)) {
  if (experts_.empty()) throw ConfigError("moe.num_experts must be >= 1");
  arch_.num_experts = experts_.size();
  state_dim_ = experts_.front().input_dim();
  for (const auto& e : experts_) {
    if (e.input_dim() != state_dim_ || e.output_dim() != state_dim_)
      throw ShapeError("every expert must map state_dim -> state_dim");
  }
  if (gate_.input_dim() != state_dim_ || gate_.output_dim() != experts_.size())
    throw ShapeError("gate must map state_dim -> num_experts");
  if (normalizer_.fitted() && normalizer_.dim() != state_dim_)
    throw ShapeError("normalizer dimension differs from state_dim");
}

void MoEModel::set_normalizer(Normalizer n) {
  if (n.dim() != state_dim_) throw ShapeError("normalizer dimension differs from state_dim");
  normalizer_ = std::move(n);
}

void MoEModel::check_dim(std::size_t n) const {
  if (n != state_dim_) {
    std::ostringstream msg;
    msg << "state dimension mismatch: model expects " << state_dim_ << ", got " << n;
    throw ShapeError(msg.str());
  }
}

Vector MoEModel::normalize(std::span<const double> raw) const {
  check_dim(raw.size());
  return normalizer_.normalize(raw);
}

Vector MoEModel::gate_from_logits(std::span<const double> logits) const {
  const std::size_t n = logits.size();
  if (arch_.top_k == 0 || arch_.top_k >= n) return nn::softmax(logits);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  Vector kept(arch_.top_k);
  for (std::size_t k = 0; k < arch_.top_k; ++k) kept[k] = logits[order[k]];
  const Vector w_kept = nn::softmax(kept);
  Vector w(n, 0.0);
  for (std::size_t k = 0; k < arch_.top_k; ++k) w[order[k]] = w_kept[k];
  return w;
}

Vector MoEModel::gate_weights(std::span<const double> x) const {
  check_dim(x.size());
  if (experts_.size() == 1) return Vector{1.0};
  return gate_from_logits(gate_.forward(x));
}

MoEModel::Reconstruction MoEModel::reconstruct(std::span<const double> x) const {
  check_dim(x.size());
  Reconstruction r;
  r.weights = gate_weights(x);
  r.x_hat.assign(state_dim_, 0.0);
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    if (r.weights[i] == 0.0) continue;
    const Vector e = experts_[i].forward(x);
    for (std::size_t j = 0; j < state_dim_; ++j) r.x_hat[j] += r.weights[i] * e[j];
  }
  return r;
}

double MoEModel::loss_normalized(std::span<const double> x) const { return nn::mse(reconstruct(x).x_hat, x); }

double MoEModel::loss(std::span<const double> raw) const { return loss_normalized(normalize(raw)); }

MoEGradients MoEModel::zero_gradients() const {
  MoEGradients g;
  for (const auto& e : experts_) g.experts.emplace_back(e.parameter_count(), 0.0);
  g.gate.assign(gate_.parameter_count(), 0.0);
  return g;
}

double MoEModel::accumulate_gradient(std::span<const double> x, MoEGradients& grads) const {
  check_dim(x.size());
  const std::size_t n = experts_.size();
  nn::DenseNet::Tape gate_tape;
  Vector w{1.0};
  if (n > 1) w = gate_from_logits(gate_.forward(x, gate_tape));

  std::vector<nn::DenseNet::Tape> tapes(n);
  std::vector<Vector> outputs(n);
  Vector x_hat(state_dim_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    outputs[i] = experts_[i].forward(x, tapes[i]);
    for (std::size_t j = 0; j < state_dim_; ++j) x_hat[j] += w[i] * outputs[i][j];
  }
  const double loss = nn::mse(x_hat, x);
  const Vector d_xhat = nn::mse_grad(x_hat, x);

  Vector d_weight(n, 0.0);
  Vector upstream(state_dim_);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t j = 0; j < state_dim_; ++j) {
      upstream[j] = w[i] * d_xhat[j];
      d_weight[i] += d_xhat[j] * outputs[i][j];
    }
    experts_[i].backward(tapes[i], upstream, grads.experts[i]);
  }
  if (n > 1) {
    // Softmax Jacobian restricted to the active experts.
    double mean_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_g += w[i] * d_weight[i];
    Vector d_logits(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d_logits[i] = w[i] * (d_weight[i] - mean_g);
    gate_.backward(gate_tape, d_logits, grads.gate);
  }
  return loss;
}

std::vector<Vector> DemoSet::states() const {
  std::vector<Vector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.state);
  return out;
}

void DemoSet::validate() const {
  const std::size_t d = state_dim();
  for (const auto& r : records) {
    if (r.state.size() != d) throw ShapeError("demo set: inconsistent state dimensions");
  }
}

DemoSet subsample_demos(const DemoSet& full, std::size_t gap) {
  DemoSet out;
  out.gap = gap;
  out.source_tag = full.source_tag;
  std::map<std::int64_t, std::size_t> position;
  const std::size_t stride = gap + 1;
  for (const auto& r : full.records) {
    const std::size_t pos = position[r.episode_id]++;
    if (pos % stride == 0) out.records.push_back(r);
  }
  return out;
}

namespace {

struct Optimizer {
  std::vector<nn::AdamState> experts;
  nn::AdamState gate;
};

Optimizer make_optimizer(const MoEModel& m, double lr) {
  Optimizer opt;
  for (std::size_t i = 0; i < m.num_experts(); ++i)
    opt.experts.emplace_back(m.experts()[i].parameter_count(), lr, "expert " + std::to_string(i));
  opt.gate = nn::AdamState(m.gate().parameter_count(), lr, "gate");
  return opt;
}

}  // namespace

std::vector<double> train_normalized(MoEModel& model, std::span<const Vector> samples, const TrainConfig& cfg) {
  if (samples.empty()) throw ShapeError("cannot train on an empty demo set");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("moe.lr must be > 0");
  for (const auto& s : samples) {
    if (s.size() != model.state_dim()) throw ShapeError("training sample dimension mismatch");
  }
  const std::size_t n = samples.size();
  std::size_t batch = cfg.batch_size.value_or(n <= 4096 ? n : 256);
  if (batch == 0 || batch > n) batch = n;

  Rng shuffle_rng(mix_seed(cfg.seed, 0x5eed));
  Optimizer opt = make_optimizer(model, cfg.learning_rate);
  kernels::GradientWorkspace workspace(model);
  MoEGradients grads = model.zero_gradients();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      epoch_loss += kernels::accumulate_gradients(model, samples, idx, grads, workspace, cfg.exec);
      grads *= 1.0 / static_cast<double>(idx.size());
      for (std::size_t i = 0; i < model.num_experts(); ++i)
        nn::adam_step(model.experts()[i], grads.experts[i], opt.experts[i]);
      if (model.num_experts() > 1) nn::adam_step(model.gate(), grads.gate, opt.gate);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw NonFiniteError("non-finite training loss at epoch " + std::to_string(epoch + 1));
    }
    history.push_back(epoch_loss);
  }
  return history;
}

TrainResult train_moe(const DemoSet& demos, const MoEArch& arch, const TrainConfig& cfg) {
  if (demos.records.empty()) throw ShapeError("cannot train on an empty demo set");
  demos.validate();
  const auto raw = demos.states();
  Rng init_rng(cfg.seed);
  TrainResult result;
  result.model = MoEModel(demos.state_dim(), arch, init_rng);
  result.model.set_normalizer(Normalizer::fit(raw));
  if (cfg.epochs == 0) return result;
  std::vector<Vector> samples;
  samples.reserve(raw.size());
  for (const auto& s : raw) samples.push_back(result.model.normalize(s));
  result.history = train_normalized(result.model, samples, cfg);
  return result;
}

}  // namespace moeguide::moe
