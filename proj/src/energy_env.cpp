#include "rsmalab/energy_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace rsmalab {
namespace {

constexpr double kClipTolerance = 1e-9;
constexpr double kFeasibilityTolerance = 1e-6;

enum Stream : std::uint64_t { kChannels = 1, kErrors = 2, kEnergy = 3 };

}  // namespace

void EnergyModel::validate() const {
  if (!(harvest_prob >= 0.0 && harvest_prob <= 1.0)) {
    throw std::invalid_argument("energy: harvest probability outside [0, 1]");
  }
  if (!(max_energy > 0.0) || !std::isfinite(max_energy)) {
    throw std::invalid_argument("energy: max energy must be > 0");
  }
}

double sample_energy(const EnergyModel& model, const RandomStream& rng) {
  RandomStream local = rng;
  if (!local.bernoulli(model.harvest_prob)) return 0.0;
  switch (model.law) {
    case ArrivalLaw::uniform: return local.uniform(0.0, model.max_energy);
    case ArrivalLaw::point_mass: return model.max_energy;
  }
  return 0.0;
}

double battery_update(double battery, double power, double slot_time, double energy,
                      double battery_max) {
  if (!(battery >= 0.0) || !(power >= 0.0) || !(energy >= 0.0) || !(slot_time > 0.0)) {
    throw std::invalid_argument("battery: inputs must be nonnegative");
  }
  const double spent = power * slot_time;
  if (spent > battery + kClipTolerance) {
    throw std::invalid_argument("battery: consumption exceeds stored energy");
  }
  return std::min(std::max(0.0, battery - spent) + energy, battery_max);
}

void EnvConfig::validate() const {
  channel.validate();
  energy.validate();
  if (!(sigma_e2 >= 0.0 && sigma_e2 < channel.scatter_power())) {
    throw std::invalid_argument("env: sigma_e2 must lie in [0, 2 sigma_h^2)");
  }
  if (!(noise_var > 0.0)) throw std::invalid_argument("env: noise variance must be > 0");
  if (!(slot_time > 0.0)) throw std::invalid_argument("env: slot time must be > 0");
  if (!(battery_max > 0.0)) throw std::invalid_argument("env: battery capacity must be > 0");
  if (!(initial_battery >= 0.0 && initial_battery <= battery_max)) {
    throw std::invalid_argument("env: initial battery outside [0, b_max]");
  }
  if (truncation_steps < 1) throw std::invalid_argument("env: truncation must be >= 1");
  if (precoder == PrecoderRule::noma && channel.n_users != 2) {
    throw std::invalid_argument("env: NOMA needs exactly two users");
  }
}

Vector encode_state(const EnvState& state, const EnvConfig& config) {
  const int n_tx = config.channel.n_tx;
  const int k_users = config.channel.n_users;
  Vector f(config.state_dimension());
  f[0] = state.harvested / config.energy.max_energy;
  f[1] = state.battery / config.battery_max;
  Eigen::Index i = 2;
  for (int k = 0; k < k_users; ++k) {
    const CVector& h = state.channels.estimated_channels[static_cast<size_t>(k)];
    for (int n = 0; n < n_tx; ++n) {
      f[i++] = h[n].real();
      f[i++] = h[n].imag();
    }
  }
  return f;
}

double max_feasible_power(const EnvState& state, const EnvConfig& config) {
  return state.battery / config.slot_time;
}

FeasibilityCounts& FeasibilityCounts::operator+=(const FeasibilityCounts& other) {
  battery += other.battery;
  power += other.power;
  simplex += other.simplex;
  unit_norm += other.unit_norm;
  return *this;
}

FeasibilityCounts check_transition(const Transition& t, const EnvConfig& config) {
  FeasibilityCounts c;
  const double tol = kFeasibilityTolerance;
  for (double b : {t.state.battery, t.next_state.battery}) {
    if (b < -tol || b > config.battery_max + tol) ++c.battery;
  }
  if (t.action < -tol || t.action * config.slot_time > t.state.battery + tol) ++c.power;
  const PrecoderSet& p = t.decision.precoders;
  if (p.total_power > 0.0 && p.radiated_power() > t.action + tol) ++c.power;
  const double ratio_sum =
      p.common_ratio + std::accumulate(p.private_ratios.begin(), p.private_ratios.end(), 0.0);
  bool negative = p.common_ratio < -tol;
  for (double r : p.private_ratios) negative = negative || r < -tol;
  if (std::abs(ratio_sum - 1.0) > tol || negative) ++c.simplex;
  bool bad_norm = std::abs(p.common_direction.norm() - 1.0) > tol;
  for (const auto& w : p.private_directions) bad_norm = bad_norm || std::abs(w.norm() - 1.0) > tol;
  if (bad_norm) ++c.unit_norm;
  return c;
}

EnergyEnv::EnergyEnv(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), root_(seed) {
  config_.validate();
  reset();
}

EnvState EnergyEnv::draw_state(std::int64_t slot, double battery) const {
  const auto s = static_cast<std::uint64_t>(slot);
  EnvState st;
  st.slot = slot;
  st.battery = battery;
  st.harvested = sample_energy(config_.energy, root_.split(s, kEnergy));
  const auto h = sample_channels(config_.channel, root_.split(s, kChannels));
  st.channels = corrupt_channels(h, config_.sigma_e2, config_.channel, root_.split(s, kErrors));
  return st;
}

const EnvState& EnergyEnv::reset() {
  state_ = draw_state(0, config_.initial_battery);
  return state_;
}

Transition EnergyEnv::step(double power) {
  Transition t;
  const double limit = max_feasible_power(state_, config_);
  if (power < -kClipTolerance || power > limit + kClipTolerance || !std::isfinite(power)) {
    throw std::invalid_argument("env: action outside [0, b / T]");
  }
  const double clipped = std::clamp(power, 0.0, limit);
  t.action_clipped = clipped != power;
  t.action = clipped;
  t.decision = design_precoder(config_.precoder, state_.channels, clipped, config_.noise_var,
                               config_.precoder_options);
  t.reward = t.decision.sum_rate();
  const double next_battery = battery_update(state_.battery, clipped, config_.slot_time,
                                             state_.harvested, config_.battery_max);
  t.state = std::move(state_);
  state_ = draw_state(t.state.slot + 1, next_battery);
  t.next_state = state_;
  t.truncated = state_.slot % config_.truncation_steps == 0;
  if (log_) {
    nlohmann::json rec;
    rec["slot"] = t.state.slot;
    rec["E"] = t.state.harvested;
    rec["b"] = t.state.battery;
    rec["P_t"] = t.action;
    rec["R_sum"] = t.reward;
    rec["solver_status"] =
        t.decision.solver_called ? std::string(to_string(t.decision.solver_status)) : "not_called";
    *log_ << rec.dump() << '\n';
  }
  return t;
}

}  // namespace rsmalab
