// rsmalab command line: train, sweep, eval, solver-bench.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "rsmalab/harness.hpp"
#include "rsmalab/solver_corpus.hpp"

using namespace rsmalab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config_path;
  std::string scheme;
  int n_seeds = 0;
  std::int64_t steps = -1;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON experiment file (defaults otherwise)");
  cmd->add_option("--scheme", f.scheme, "scheme id, e.g. drl-rsma, greedy-noma");
  cmd->add_option("--seeds", f.n_seeds, "use seeds 1..N")->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "training steps per seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "parallel seed workers")->check(CLI::PositiveNumber);
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  if (!f.scheme.empty()) {
    const auto id = parse_scheme(f.scheme);
    if (!id) throw ConfigError("unknown scheme '" + f.scheme + "'");
    c.scheme = *id;
  }
  if (f.n_seeds > 0) {
    c.seeds.resize(static_cast<std::size_t>(f.n_seeds));
    std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{1});
  }
  if (f.steps >= 0) c.total_steps = f.steps;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.jobs > 0) c.jobs = f.jobs;
  c.validate();
  return c;
}

void print_summary(const RunSummary& s) {
  std::printf("config %s scheme %s\n", s.config_hash.c_str(), std::string(to_string(s.scheme)).c_str());
  for (const auto& r : s.seeds) {
    std::printf("  seed %llu  initial %.4f  final %.4f  updates %lld  violations %lld\n",
                static_cast<unsigned long long>(r.seed), r.initial_eval, r.final_eval,
                static_cast<long long>(r.training.updates),
                static_cast<long long>(r.training.feasibility.total()));
  }
  std::printf("mean final sum-rate %.4f (sd %.4f)\n", s.mean_final_eval, s.std_final_eval);
}

int solver_bench() {
  int failures = 0;
  std::printf("%-28s %-22s %6s %14s %14s\n", "problem", "status", "iters", "objective", "abs error");
  for (const auto& p : regression_corpus()) {
    for (bool numeric : {false, true}) {
      const auto t0 = std::chrono::steady_clock::now();
      const NlpSolution s = solve(numeric ? without_gradients(p.problem) : p.problem, p.start);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      const double err = std::abs(s.objective_value - p.optimal_value);
      const bool ok = err <= 1e-5;
      failures += ok ? 0 : 1;
      std::printf("%-28s %-22s %6d %14.8g %14.3g %s %.2fms\n",
                  (p.name + (numeric ? " (fd)" : "")).c_str(), std::string(to_string(s.status)).c_str(),
                  s.iterations, s.objective_value, err, ok ? "ok" : "FAIL", ms);
    }
  }
  return failures == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSMA energy-harvesting base station experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  bool train_force = false;
  auto* train = app.add_subcommand("train", "train (or roll out) one scheme over the configured seeds");
  add_common(train, train_flags);
  train->add_flag("--force", train_force, "overwrite an existing output directory");

  CommonFlags sweep_flags;
  bool sweep_force = false;
  std::vector<double> sweep_values{5, 10, 20, 40};
  std::vector<std::string> sweep_schemes;
  auto* sweep = app.add_subcommand("sweep", "sweep battery capacity for one or more schemes");
  add_common(sweep, sweep_flags);
  sweep->add_flag("--force", sweep_force, "overwrite an existing output directory");
  sweep->add_option("--values", sweep_values, "ascending battery capacities")->delimiter(',');
  sweep->add_option("--schemes", sweep_schemes, "comma-separated scheme ids")->delimiter(',');

  CommonFlags eval_flags;
  std::string checkpoint;
  int eval_steps = 1000;
  std::uint64_t eval_seed = 12345;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint's deterministic policy");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", checkpoint, "checkpoint.bin from a training run")->required();
  eval->add_option("--eval-steps", eval_steps, "rollout length")->check(CLI::PositiveNumber);
  eval->add_option("--eval-seed", eval_seed, "environment seed");

  auto* bench = app.add_subcommand("solver-bench", "run the SLSQP regression corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      const ExperimentConfig c = build_config(train_flags);
      print_summary(run_training(c, train_force));
      std::printf("artifacts in %s\n", c.output_dir.string().c_str());
    } else if (*sweep) {
      const ExperimentConfig c = build_config(sweep_flags);
      std::vector<SchemeId> schemes;
      for (const auto& token : sweep_schemes) {
        const auto id = parse_scheme(token);
        if (!id) throw ConfigError("unknown scheme '" + token + "'");
        schemes.push_back(*id);
      }
      if (schemes.empty()) schemes.push_back(c.scheme);
      for (const auto& row : run_sweep(c, schemes, sweep_values, sweep_force)) {
        std::printf("%-18s b_max %-6s mean %.4f sd %.4f seeds %zu\n",
                    std::string(to_string(row.scheme)).c_str(), format_number(row.battery_max).c_str(),
                    row.mean, row.std, row.n_seeds);
      }
      std::printf("table in %s\n", (c.output_dir / "table.csv").string().c_str());
    } else if (*eval) {
      const ExperimentConfig c = build_config(eval_flags);
      std::printf("mean sum-rate %.6f over %d steps\n",
                  evaluate_checkpoint(checkpoint, c, eval_steps, eval_seed), eval_steps);
    } else if (*bench) {
      return solver_bench();
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
