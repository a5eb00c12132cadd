#include "moeguide/shaping.hpp"

#include <algorithm>
#include <cmath>

#include "moeguide/error.hpp"

namespace moeguide::shaping {

const char* to_string(Falloff f) { return f == Falloff::Linear ? "linear" : "exponential"; }

Falloff falloff_from_string(const std::string& s) {
  if (s == "exponential" || s == "exp") return Falloff::Exponential;
  if (s == "linear") return Falloff::Linear;
  throw ConfigError("mapping.falloff: unknown falloff '" + s + "'");
}

void MappingConfig::validate() const {
  if (!(l_min >= 0.0)) throw ConfigError("mapping.l_min must be >= 0");
  if (!(l_max > l_min)) throw ConfigError("mapping.l_max must be > mapping.l_min");
  if (!(steepness > 0.0)) throw ConfigError("mapping.steepness must be > 0");
  if (!(scale > 0.0)) throw ConfigError("mapping.scale must be > 0");
}

double map_loss(double loss, const MappingConfig& cfg) {
  cfg.validate();
  if (loss <= cfg.l_min) return cfg.scale;
  if (loss >= cfg.l_max || std::isnan(loss)) return 0.0;
  const double x = (loss - cfg.l_min) / (cfg.l_max - cfg.l_min);
  const double f = cfg.falloff == Falloff::Exponential ? std::exp(-cfg.steepness * x) : 1.0 - x;
  return cfg.scale * std::clamp(f, 0.0, 1.0);
}

DecaySchedule DecaySchedule::multiplicative(double beta0, double d) {
  DecaySchedule s;
  s.beta0 = beta0;
  s.mode = Mode::PerStepMultiplicative;
  s.factor = d;
  s.validate();
  return s;
}

DecaySchedule DecaySchedule::exponential(double beta0, double lambda) {
  DecaySchedule s;
  s.beta0 = beta0;
  s.mode = Mode::ExponentialRate;
  s.rate = lambda;
  s.validate();
  return s;
}

void DecaySchedule::validate() const {
  if (!(beta0 >= 0.0)) throw ConfigError("decay.beta0 must be >= 0");
  if (mode == Mode::PerStepMultiplicative && !(factor > 0.0 && factor <= 1.0))
    throw ConfigError("decay.decay must lie in (0, 1]");
  if (mode == Mode::ExponentialRate && !(rate >= 0.0)) throw ConfigError("decay.rate must be >= 0");
}

double beta_at(const DecaySchedule& s, std::uint64_t t) {
  if (t == 0) return s.beta0;
  const double td = static_cast<double>(t);
  if (s.mode == DecaySchedule::Mode::PerStepMultiplicative) return s.beta0 * std::pow(s.factor, td);
  return s.beta0 * std::exp(-s.rate * td);
}

std::size_t NoveltyMask::KeyHash::operator()(const std::vector<std::int64_t>& k) const {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::vector<std::int64_t> NoveltyMask::key(std::span<const double> state) const {
  std::vector<std::int64_t> k(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) k[i] = static_cast<std::int64_t>(std::llround(state[i] / pitch_));
  return k;
}

bool NoveltyMask::visited(std::span<const double> state) const { return visited_.contains(key(state)); }

bool NoveltyMask::mark(std::span<const double> state) { return visited_.insert(key(state)).second; }

double shaped_bonus(const moe::MoEModel& model, const MappingConfig& cfg, const DecaySchedule& schedule,
                    NoveltyMask* mask, std::span<const double> state, std::uint64_t t) {
  if (mask != nullptr && !mask->mark(state)) return 0.0;
  const double beta = beta_at(schedule, t);
  if (beta == 0.0) return 0.0;
  return beta * map_loss(model.loss(state), cfg);
}

const char* to_string(IntegrationMode m) { return m == IntegrationMode::TDAdditive ? "td_additive" : "reward_sum"; }

IntegrationMode integration_mode_from_string(const std::string& s) {
  if (s == "reward_sum") return IntegrationMode::RewardSum;
  if (s == "td_additive") return IntegrationMode::TDAdditive;
  throw ConfigError("decay.mode: unknown integration mode '" + s + "'");
}

RewardRecord combine_reward(double r_env, double bonus, IntegrationMode mode) {
  RewardRecord r;
  r.mode = mode;
  if (mode == IntegrationMode::RewardSum) {
    r.td_reward = r_env + bonus;
  } else {
    r.td_reward = r_env;
    r.additive_bonus = bonus;
  }
  return r;
}

double q_update(double q, double alpha, double gamma, double max_next_q, const RewardRecord& reward) {
  return q + alpha * (reward.td_reward + gamma * max_next_q - q) + reward.additive_bonus;
}

}  // namespace moeguide::shaping
