#include "moeguide/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "moeguide/error.hpp"

namespace moeguide::baselines {

RunningMeanStd::RunningMeanStd(std::size_t dim) : mean_(dim, 0.0), var_(dim, 1.0) {}

void RunningMeanStd::update(std::span<const double> x) {
  if (x.size() != mean_.size()) throw ShapeError("running statistics dimension mismatch");
  const double total = count_ + 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    const double m2 = var_[i] * count_ + delta * delta * count_ / total;
    mean_[i] += delta / total;
    var_[i] = m2 / total;
  }
  count_ = total;
}

const char* to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Random:
      return "random";
    case BaselineKind::CountBased:
      return "count";
    case BaselineKind::RND:
      return "rnd";
    case BaselineKind::ICMForward:
      return "icm";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "random") return BaselineKind::Random;
  if (s == "count") return BaselineKind::CountBased;
  if (s == "rnd") return BaselineKind::RND;
  if (s == "icm") return BaselineKind::ICMForward;
  throw ConfigError("agent.kind: unknown baseline '" + s + "'");
}

BaselineBonus::BaselineBonus(BaselineKind kind, std::size_t state_dim, std::size_t n_actions, std::uint64_t seed,
                             BaselineConfig cfg)
    : kind_(kind),
      state_dim_(state_dim),
      n_actions_(n_actions),
      cfg_(cfg),
      rng_(seed),
      obs_rms_(state_dim),
      reward_rms_(1) {
  using nn::Activation;
  using nn::InitScheme;
  const std::size_t f = cfg_.feature_dim;
  const std::size_t h = cfg_.hidden_dim;
  Rng init(mix_seed(seed, 1));
  if (kind == BaselineKind::RND) {
    target_ = nn::DenseNet({state_dim, h, f}, {Activation::ReLU, Activation::Identity}, InitScheme::Orthogonal, init);
    predictor_ =
        nn::DenseNet({state_dim, h, f}, {Activation::ReLU, Activation::Identity}, InitScheme::Orthogonal, init);
  } else if (kind == BaselineKind::ICMForward) {
    target_ = nn::DenseNet({state_dim, h, f}, {Activation::ReLU, Activation::Identity}, InitScheme::Orthogonal, init);
    predictor_ =
        nn::DenseNet({f + n_actions, h, f}, {Activation::ReLU, Activation::Identity}, InitScheme::Orthogonal, init);
  }
  if (predictor_.layer_dims().size() > 0) {
    adam_ = nn::AdamState(predictor_.parameter_count(), cfg_.learning_rate, to_string(kind));
  }
}

std::vector<std::int64_t> BaselineBonus::key(std::span<const double> s) const {
  std::vector<std::int64_t> k(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) k[i] = std::llround(s[i] / cfg_.count_pitch);
  return k;
}

std::size_t BaselineBonus::count(std::span<const double> state) const {
  const auto it = counts_.find(key(state));
  return it == counts_.end() ? 0 : it->second;
}

void BaselineBonus::visit(std::span<const double> state) {
  if (kind_ == BaselineKind::CountBased) ++counts_[key(state)];
}

Vector BaselineBonus::normalize_obs(std::span<const double> s) const {
  if (s.size() != state_dim_) throw ShapeError("baseline: state dimension mismatch");
  Vector z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    z[i] = std::clamp((s[i] - obs_rms_.mean()[i]) / std::sqrt(obs_rms_.var()[i] + 1e-8), -5.0, 5.0);
  }
  return z;
}

Vector BaselineBonus::forward_input(const BaselineTransition& tr) const {
  Vector in = target_.forward(normalize_obs(tr.state));
  in.resize(cfg_.feature_dim + n_actions_, 0.0);
  if (tr.action >= n_actions_) throw std::out_of_range("baseline: action index out of range");
  in[cfg_.feature_dim + tr.action] = 1.0;
  return in;
}

double BaselineBonus::raw_error(const BaselineTransition& tr) const {
  if (kind_ == BaselineKind::RND) {
    const Vector z = normalize_obs(tr.next_state);
    return nn::mse(predictor_.forward(z), target_.forward(z));
  }
  if (kind_ == BaselineKind::ICMForward) {
    const Vector target_features = target_.forward(normalize_obs(tr.next_state));
    return nn::mse(predictor_.forward(forward_input(tr)), target_features);
  }
  return 0.0;
}

double BaselineBonus::peek(const BaselineTransition& tr) {
  switch (kind_) {
    case BaselineKind::Random:
      return rng_.uniform();
    case BaselineKind::CountBased:
      return 1.0 / std::sqrt(1.0 + static_cast<double>(count(tr.next_state)));
    case BaselineKind::RND:
    case BaselineKind::ICMForward:
      return raw_error(tr) / std::sqrt(reward_rms_.var()[0] + 1e-8);
  }
  return 0.0;
}

double BaselineBonus::observe(const BaselineTransition& tr) {
  switch (kind_) {
    case BaselineKind::Random:
      return rng_.uniform();
    case BaselineKind::CountBased: {
      std::size_t& n = counts_[key(tr.next_state)];
      const double b = 1.0 / std::sqrt(1.0 + static_cast<double>(n));
      ++n;
      return b;
    }
    case BaselineKind::RND:
    case BaselineKind::ICMForward:
      break;
  }
  obs_rms_.update(tr.next_state);
  Vector input;
  Vector target_features;
  if (kind_ == BaselineKind::RND) {
    input = normalize_obs(tr.next_state);
    target_features = target_.forward(input);
  } else {
    input = forward_input(tr);
    target_features = target_.forward(normalize_obs(tr.next_state));
  }
  nn::DenseNet::Tape tape;
  const Vector pred = predictor_.forward(input, tape);
  const double raw = nn::mse(pred, target_features);
  const double r[1] = {raw};
  reward_rms_.update(r);
  const double bonus = raw / std::sqrt(reward_rms_.var()[0] + 1e-8);
  Vector grads(predictor_.parameter_count(), 0.0);
  predictor_.backward(tape, nn::mse_grad(pred, target_features), grads);
  nn::adam_step(predictor_, grads, adam_);
  return bonus;
}

BaselineExplorerBonus::BaselineExplorerBonus(const env::GridWorld& world, BaselineKind kind, std::uint64_t seed,
                                             BaselineConfig cfg)
    : world_(&world), bonus_(kind, world.rank(), static_cast<std::size_t>(world.num_actions()), seed, [&] {
        cfg.count_pitch = 1e-6;
        return cfg;
      }()) {}

double BaselineExplorerBonus::peek(const env::Cell& from, int action, const env::Cell& to) {
  const auto s = world_->encode(from);
  const auto n = world_->encode(to);
  return bonus_.peek({s, static_cast<std::size_t>(action), n});
}

double BaselineExplorerBonus::observe(const env::Cell& from, int action, const env::Cell& to) {
  const auto s = world_->encode(from);
  const auto n = world_->encode(to);
  return bonus_.observe({s, static_cast<std::size_t>(action), n});
}

void BaselineExplorerBonus::begin_episode(const env::Cell& start) { bonus_.visit(world_->encode(start)); }

}  // namespace moeguide::baselines
