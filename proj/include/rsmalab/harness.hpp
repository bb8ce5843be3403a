#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsmalab/baselines.hpp"
#include "rsmalab/energy_env.hpp"
#include "rsmalab/sac.hpp"

namespace rsmalab {

/// Raised for invalid or unreadable configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  SchemeId scheme = SchemeId::drl_rsma;
  EnvConfig env{};
  SacConfig sac{};
  std::vector<std::uint64_t> seeds{1};
  std::int64_t total_steps = 20000;
  int eval_steps = 1000;
  /// Worker threads for independent seeds.
  int jobs = 1;
  std::filesystem::path output_dir = "runs/default";

  /// Checks every module invariant; throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON of everything except the
/// seed list, worker count and output directory.
std::string config_hash(const ExperimentConfig& config);

/// Maps an environment state to a transmit power.
using PowerPolicyFn = std::function<double(const EnvState& state, const Vector& features)>;

PowerPolicyFn greedy_policy(const EnvConfig& env);
/// Deterministic squashed mean of the agent's actor.
PowerPolicyFn learned_policy(const SacAgent& agent, const EnvConfig& env);

/// Mean reward over `steps` slots of a fresh environment seeded with `seed`.
double evaluate_policy(const EnvConfig& env, std::uint64_t seed, int steps, const PowerPolicyFn& policy);

/// Seed of the held-out evaluation environment for a training seed.
std::uint64_t evaluation_seed(std::uint64_t training_seed);

/// Loads an agent checkpoint and evaluates its deterministic policy.
/// Throws ConfigError listing expected and found network shapes on mismatch.
double evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                           int steps, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  double initial_eval = 0.0;
  double final_eval = 0.0;
  TrainSummary training;
};

struct RunSummary {
  std::string config_hash;
  SchemeId scheme = SchemeId::drl_rsma;
  std::vector<SeedResult> seeds;
  double mean_final_eval = 0.0;
  double std_final_eval = 0.0;  // sample standard deviation (0 for one seed)
};

nlohmann::json to_json(const RunSummary& summary, const ExperimentConfig& config);
/// Returns an empty string when `j` matches the summary schema, else the first problem.
std::string summary_schema_error(const nlohmann::json& j);

inline constexpr const char* kCurveHeader =
    "seed,config_hash,step,reward,critic_loss,actor_loss,battery,P_t";

/// Trains (or, for greedy schemes, rolls out) every seed and writes
/// config.json, curves.csv, summary.json and per-seed checkpoints into
/// config.output_dir. Refuses an existing directory unless `force`.
RunSummary run_training(const ExperimentConfig& config, bool force = false);

struct SweepRow {
  SchemeId scheme;
  double battery_max;
  double mean;
  double std;
  std::size_t n_seeds;
};

/// One run_training per (scheme, b_max) under output_dir/<scheme>/bmax_<v>,
/// and a table.csv at the top. `values` must be ascending.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::vector<SchemeId>& schemes,
                                const std::vector<double>& values, bool force = false);

/// Formats a double for CSV output; round-trips exactly.
std::string format_number(double v);

}  // namespace rsmalab
