#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "rsmalab/energy_env.hpp"
#include "rsmalab/linalg.hpp"
#include "rsmalab/nn.hpp"
#include "rsmalab/random.hpp"

namespace rsmalab {

struct SacConfig {
  double gamma = 0.95;
  double alpha = 0.5;
  std::int64_t buffer_capacity = 1000000;
  int batch_size = 1024;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double tau = 0.005;
  int update_every = 1;
  int warmup_steps = 1000;
  std::vector<int> hidden{64, 64};

  void validate() const;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyOutput {
  double mean = 0.0;
  double log_std = 0.0;  // clamped to [kLogStdMin, kLogStdMax]
};

/// lo + (hi - lo) (tanh u + 1) / 2
double squash(double u, double lo, double hi);

/// Log-density on (lo, hi) of the squashed Gaussian. Actions within 1e-6 of a
/// bound (relative to the interval width) are moved inside first.
double log_prob(const PolicyOutput& head, double action, double lo, double hi);

/// log(1 - tanh(u)^2), stable for large |u|.
double log1m_tanh2(double u);

struct Batch {
  Matrix states;       // state_dim x B
  Vector actions;      // battery fractions in (0, 1)
  Vector rewards;
  Matrix next_states;  // state_dim x B
  std::vector<bool> truncated;

  [[nodiscard]] Eigen::Index size() const { return actions.size(); }
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::int64_t capacity, int state_dim);

  void push(const Vector& state, double action, double reward, const Vector& next_state,
            bool truncated);
  /// Uniform over stored transitions, without replacement within the batch.
  Batch sample(int batch_size, RandomStream& rng) const;

  [[nodiscard]] std::int64_t size() const { return size_; }
  [[nodiscard]] std::int64_t capacity() const { return capacity_; }

 private:
  std::int64_t capacity_;
  int dim_;
  std::int64_t size_ = 0;
  std::int64_t next_ = 0;
  std::vector<double> states_;
  std::vector<double> next_states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<char> truncated_;
};

struct UpdateLosses {
  double critic = 0.0;  // mean of the two critic losses
  double actor = 0.0;
};

/// Replaces sampling from the policy when forming critic targets; receives the
/// next state and returns (action fraction, log-probability).
using NextActionFn = std::function<std::pair<double, double>(const Vector&)>;

/// Soft actor-critic over the battery fraction a in (0, 1); the transmit power
/// is a b / T. Critics see (state, a).
class SacAgent {
 public:
  SacAgent(int state_dim, SacConfig config, std::uint64_t seed);

  [[nodiscard]] PolicyOutput policy(const Vector& state) const;
  /// Battery fraction: tanh-squashed mean, or a sample when `deterministic` is false.
  double select_fraction(const Vector& state, bool deterministic);
  /// Power in [0, b / T].
  double select_action(const Vector& state, double battery, double slot_time, bool deterministic);

  [[nodiscard]] double q_value(int critic, const Vector& state, double fraction) const;

  /// y = r + gamma (min_i Q_targ_i(s', a') - alpha log pi(a' | s')).
  Vector critic_targets(const Batch& batch, const NextActionFn& next_action = {});
  /// Mean of alpha log pi(a | s) - min_i Q_i(s, a) with a reparameterized by
  /// the standard normal draws in `noise`; optionally the actor gradient.
  double actor_objective(const Batch& batch, const Vector& noise, Vector* grad = nullptr) const;

  double update_critics(const Batch& batch, const NextActionFn& next_action = {});
  double update_actor(const Batch& batch);
  void update_targets();
  UpdateLosses update(const Batch& batch);

  [[nodiscard]] const SacConfig& config() const { return config_; }
  [[nodiscard]] int state_dim() const { return state_dim_; }
  RandomStream& rng() { return rng_; }

  DenseNet& actor() { return actor_; }
  DenseNet& critic(int i) { return critics_[static_cast<size_t>(i)]; }
  DenseNet& target(int i) { return targets_[static_cast<size_t>(i)]; }
  [[nodiscard]] const DenseNet& actor() const { return actor_; }

  void save(std::ostream& out) const;
  /// Restores networks written by save(); optimizer moments start fresh.
  void load(std::istream& in);

 private:
  Matrix critic_inputs(const Matrix& states, const Vector& fractions) const;

  int state_dim_;
  SacConfig config_;
  RandomStream rng_;
  DenseNet actor_;
  std::vector<DenseNet> critics_;
  std::vector<DenseNet> targets_;
  Adam actor_opt_;
  std::vector<Adam> critic_opts_;
};

struct TrainRecord {
  std::int64_t step = 0;
  double reward = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double battery = 0.0;  // before the step
  double power = 0.0;
  bool updated = false;
};

struct TrainSummary {
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  std::int64_t solver_failures = 0;  // line-search failures and iteration caps
  std::int64_t clipped_actions = 0;
  FeasibilityCounts feasibility;
};

using TrainCallback = std::function<void(const TrainRecord&, const Transition&)>;

/// Uniform random fractions for the first warmup_steps, then the stochastic
/// policy with one update every update_every steps once the buffer holds a
/// full batch.
TrainSummary train(EnergyEnv& env, SacAgent& agent, std::int64_t total_steps,
                   const TrainCallback& on_step = {});

}  // namespace rsmalab
