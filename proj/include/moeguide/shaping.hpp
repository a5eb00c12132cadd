#pragma once

// Turning similarity loss into an intrinsic reward.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "moeguide/moe.hpp"

namespace moeguide::shaping {

enum class Falloff { Exponential, Linear };

const char* to_string(Falloff f);
Falloff falloff_from_string(const std::string& s);

struct MappingConfig {
  double l_min = 0.01;
  double l_max = 0.1;
  double steepness = 20.0;
  double scale = 1.0;
  Falloff falloff = Falloff::Exponential;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  bool operator==(const MappingConfig&) const = default;
};

/// scale * clip(f((L - l_min) / (l_max - l_min)), 0, 1) with
/// f(x) = exp(-steepness * x) or f(x) = 1 - x. Returns exactly `scale` for
/// L <= l_min and exactly 0 for L >= l_max.
double map_loss(double loss, const MappingConfig& cfg);

struct DecaySchedule {
  enum class Mode { PerStepMultiplicative, ExponentialRate };

  double beta0 = 1.0;
  Mode mode = Mode::PerStepMultiplicative;
  double factor = 1.0;  // d in (0, 1] for PerStepMultiplicative
  double rate = 0.0;    // lambda >= 0 for ExponentialRate

  static DecaySchedule multiplicative(double beta0, double d);
  static DecaySchedule exponential(double beta0, double lambda);

  void validate() const;

  bool operator==(const DecaySchedule&) const = default;
};

/// beta0 * d^t or beta0 * exp(-lambda t).
double beta_at(const DecaySchedule& schedule, std::uint64_t t);

/// Episodic once-per-state gate on intrinsic reward. Keys come from
/// discretizing the state on a fixed pitch; grid coordinates use pitch 1.
class NoveltyMask {
 public:
  explicit NoveltyMask(double pitch = 0.1) : pitch_(pitch) {}

  std::vector<std::int64_t> key(std::span<const double> state) const;
  bool visited(std::span<const double> state) const;
  /// Returns true if the state was new.
  bool mark(std::span<const double> state);
  void reset() { visited_.clear(); }
  std::size_t size() const { return visited_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const;
  };
  double pitch_;
  std::unordered_set<std::vector<std::int64_t>, KeyHash> visited_;
};

/// beta_t * map_loss(moe_loss(s)). With a mask: 0 if s was already rewarded
/// this episode, otherwise s is marked visited and the bonus returned.
double shaped_bonus(const moe::MoEModel& model, const MappingConfig& cfg, const DecaySchedule& schedule,
                    NoveltyMask* mask, std::span<const double> state, std::uint64_t t);

enum class IntegrationMode { RewardSum, TDAdditive };

const char* to_string(IntegrationMode m);
IntegrationMode integration_mode_from_string(const std::string& s);

struct RewardRecord {
  double td_reward = 0.0;       // reward that enters the TD target
  double additive_bonus = 0.0;  // added to Q outside the TD error
  IntegrationMode mode = IntegrationMode::RewardSum;
};

RewardRecord combine_reward(double r_env, double bonus, IntegrationMode mode);

/// Q + alpha (r + gamma max_next - Q) + additive_bonus.
double q_update(double q, double alpha, double gamma, double max_next_q, const RewardRecord& reward);

}  // namespace moeguide::shaping
