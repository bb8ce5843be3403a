#pragma once

#include <cstdint>
#include <ostream>

#include "rsmalab/baselines.hpp"
#include "rsmalab/channel.hpp"
#include "rsmalab/linalg.hpp"
#include "rsmalab/precoder.hpp"
#include "rsmalab/random.hpp"

namespace rsmalab {

enum class ArrivalLaw { uniform, point_mass };

/// Bernoulli harvest events with magnitude drawn from `law` on [0, max_energy]
/// (point mass sits at max_energy).
struct EnergyModel {
  double harvest_prob = 0.5;
  double max_energy = 20.0;
  ArrivalLaw law = ArrivalLaw::uniform;

  void validate() const;
};

double sample_energy(const EnergyModel& model, const RandomStream& rng);

/// min(b - p T + e, b_max). Rejects p T > b (beyond rounding) and negative inputs.
double battery_update(double battery, double power, double slot_time, double energy,
                      double battery_max);

struct EnvConfig {
  RicianParams channel{};
  double sigma_e2 = 0.1;
  double noise_var = 1.0;
  double slot_time = 1.0;
  double battery_max = 20.0;
  double initial_battery = 0.0;
  EnergyModel energy{};
  int truncation_steps = 1000;
  PrecoderRule precoder = PrecoderRule::rsma;
  PrecoderOptions precoder_options{};

  void validate() const;
  /// Length of encode_state output.
  [[nodiscard]] int state_dimension() const { return 2 + 2 * channel.n_tx * channel.n_users; }
};

struct EnvState {
  double harvested = 0.0;
  ChannelSet channels;
  double battery = 0.0;
  std::int64_t slot = 0;
};

struct Transition {
  EnvState state;
  double action = 0.0;
  double reward = 0.0;
  EnvState next_state;
  bool done = false;
  /// Set every truncation_steps slots; the task itself never terminates.
  bool truncated = false;
  /// True when a marginally infeasible action had to be clipped.
  bool action_clipped = false;
  PrecoderDecision decision;
};

/// [E / E_max, b / b_max, Re h_11, Im h_11, Re h_12, ...] with users outer and
/// antennas inner.
Vector encode_state(const EnvState& state, const EnvConfig& config);

/// Upper end of the feasible power interval, b / T.
double max_feasible_power(const EnvState& state, const EnvConfig& config);

/// Violation counts at tolerance 1e-6 for one transition.
struct FeasibilityCounts {
  std::int64_t battery = 0;
  std::int64_t power = 0;
  std::int64_t simplex = 0;
  std::int64_t unit_norm = 0;

  [[nodiscard]] std::int64_t total() const { return battery + power + simplex + unit_norm; }
  FeasibilityCounts& operator+=(const FeasibilityCounts& other);
};

FeasibilityCounts check_transition(const Transition& t, const EnvConfig& config);

class EnergyEnv {
 public:
  EnergyEnv(EnvConfig config, std::uint64_t seed);

  const EnvState& reset();
  Transition step(double power);

  [[nodiscard]] const EnvState& state() const { return state_; }
  [[nodiscard]] const EnvConfig& config() const { return config_; }

  /// One JSON line per step (slot, E, b, P_t, R_sum, solver_status).
  void set_log(std::ostream* out) { log_ = out; }

 private:
  EnvState draw_state(std::int64_t slot, double battery) const;

  EnvConfig config_;
  RandomStream root_;
  EnvState state_;
  std::ostream* log_ = nullptr;
};

}  // namespace rsmalab
