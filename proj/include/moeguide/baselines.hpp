#pragma once

// Exploration baselines: uniform random, count-based, random network
// distillation and an ICM-style forward model.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moeguide/agents.hpp"
#include "moeguide/nn.hpp"

namespace moeguide::baselines {

using nn::Vector;

/// Running mean and variance with the parallel-update rule; starts at
/// mean 0, variance 1 and a pseudo-count of 1e-4.
class RunningMeanStd {
 public:
  explicit RunningMeanStd(std::size_t dim = 1);

  void update(std::span<const double> x);
  const Vector& mean() const { return mean_; }
  const Vector& var() const { return var_; }
  double count() const { return count_; }

 private:
  Vector mean_;
  Vector var_;
  double count_ = 1e-4;
};

enum class BaselineKind { Random, CountBased, RND, ICMForward };

const char* to_string(BaselineKind k);
BaselineKind baseline_kind_from_string(const std::string& s);

struct BaselineConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden_dim = 32;
  double learning_rate = 3e-4;
  double count_pitch = 1.0;  // discretization pitch for visit counts
};

struct BaselineTransition {
  std::span<const double> state;
  std::size_t action = 0;
  std::span<const double> next_state;
};

class BaselineBonus {
 public:
  BaselineBonus(BaselineKind kind, std::size_t state_dim, std::size_t n_actions, std::uint64_t seed,
                BaselineConfig cfg = {});

  BaselineKind kind() const { return kind_; }

  /// Bonus for the transition; updates counts, running statistics and the
  /// trainable predictor.
  double observe(const BaselineTransition& tr);

  /// Bonus under the current statistics without changing anything (the
  /// Random kind still draws from its stream).
  double peek(const BaselineTransition& tr);

  /// Records a state without a transition (counts only).
  void visit(std::span<const double> state);

  std::size_t count(std::span<const double> state) const;

  /// Unnormalized prediction error (RND, ICMForward).
  double raw_error(const BaselineTransition& tr) const;

  const nn::DenseNet& target() const { return target_; }

 private:
  std::vector<std::int64_t> key(std::span<const double> s) const;
  Vector normalize_obs(std::span<const double> s) const;
  Vector forward_input(const BaselineTransition& tr) const;

  BaselineKind kind_;
  std::size_t state_dim_;
  std::size_t n_actions_;
  BaselineConfig cfg_;
  Rng rng_;
  std::map<std::vector<std::int64_t>, std::size_t> counts_;
  nn::DenseNet target_;     // RND target or ICM feature encoder (frozen)
  nn::DenseNet predictor_;  // RND predictor or ICM forward model
  nn::AdamState adam_;
  RunningMeanStd obs_rms_;
  RunningMeanStd reward_rms_;
};

/// Adapts a baseline to the gridworld explorer.
class BaselineExplorerBonus final : public agents::BonusSource {
 public:
  BaselineExplorerBonus(const env::GridWorld& world, BaselineKind kind, std::uint64_t seed, BaselineConfig cfg = {});

  std::string name() const override { return to_string(bonus_.kind()); }
  double peek(const env::Cell& from, int action, const env::Cell& to) override;
  double observe(const env::Cell& from, int action, const env::Cell& to) override;
  void begin_episode(const env::Cell& start) override;

  BaselineBonus& bonus() { return bonus_; }

 private:
  const env::GridWorld* world_;
  BaselineBonus bonus_;
};

}  // namespace moeguide::baselines
