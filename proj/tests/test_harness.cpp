#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsmalab/harness.hpp"

using namespace rsmalab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rsmalab_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.total_steps = 40;
  c.eval_steps = 20;
  c.sac.batch_size = 16;
  c.sac.warmup_steps = 16;
  c.sac.hidden = {8, 8};
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("defaults describe the reference scenario") {
  const ExperimentConfig c;
  CHECK(c.env.channel.n_users == 2);
  CHECK(c.env.channel.n_tx == 2);
  CHECK(c.env.channel.kappa == 3.0);
  CHECK(c.env.channel.omega == 1.0);
  CHECK(c.env.sigma_e2 == 0.1);
  CHECK(c.env.noise_var == 1.0);
  CHECK(c.env.energy.harvest_prob == 0.5);
  CHECK(c.env.energy.max_energy == 20.0);
  CHECK(c.env.battery_max == 20.0);
  CHECK(c.env.slot_time == 1.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config json round trip and rejection") {
  ExperimentConfig c;
  c.scheme = SchemeId::greedy_noma;
  c.env.energy.law = ArrivalLaw::point_mass;
  c.sac.alpha = 0.2;
  c.seeds = {3, 4};
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));

  auto j = to_json(c);
  j["sac"]["alpah"] = 0.1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["extra"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["scheme"] = "drl-ofdma";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["sac"]["gamma"] = 1.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["channel"]["n_users"] = 3;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["run"]["seeds"] = nlohmann::json::array();
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  CHECK(config_from_json(nlohmann::json::object()).scheme == SchemeId::drl_rsma);
}

TEST_CASE("config hash ignores seeds and output location only") {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.seeds = {9, 10, 11};
  b.jobs = 4;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.sac.alpha = 0.25;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("zero power earns nothing") {
  const EnvConfig env;
  const double r = evaluate_policy(env, 5, 50, [](const EnvState&, const Vector&) { return 0.0; });
  CHECK(r == 0.0);
}

TEST_CASE("greedy policy evaluation matches a manual rollout") {
  EnvConfig cfg;
  const double via_harness = evaluate_policy(cfg, 21, 30, greedy_policy(cfg));
  EnergyEnv env(cfg, 21);
  double total = 0.0;
  for (int i = 0; i < 30; ++i) total += env.step(env.state().battery / cfg.slot_time).reward;
  CHECK(via_harness == doctest::Approx(total / 30).epsilon(1e-12));
}

TEST_CASE("zero training steps leaves the evaluation unchanged") {
  const fs::path out = scratch("zero");
  ExperimentConfig c = small_config(out);
  c.total_steps = 0;
  const RunSummary s = run_training(c);
  REQUIRE(s.seeds.size() == 1);
  CHECK(s.seeds[0].final_eval == s.seeds[0].initial_eval);
  CHECK(s.seeds[0].training.updates == 0);
  fs::remove_all(out);
}

TEST_CASE("identical runs write identical curves") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ExperimentConfig c = small_config(a);
  c.seeds = {1, 2};
  run_training(c);
  c.output_dir = b;
  c.jobs = 2;
  run_training(c);
  const std::string csv = slurp(a / "curves.csv");
  CHECK(csv == slurp(b / "curves.csv"));
  CHECK(csv.rfind(std::string(kCurveHeader) + "\n", 0) == 0);
  // header plus one row per step per seed
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * c.total_steps);
  CHECK(slurp(a / "seed_1" / "checkpoint.bin") == slurp(b / "seed_1" / "checkpoint.bin"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("summary file validates against its schema") {
  const fs::path out = scratch("schema");
  ExperimentConfig c = small_config(out);
  c.scheme = SchemeId::greedy_sdma;
  c.seeds = {4, 5};
  const RunSummary s = run_training(c);
  std::ifstream in(out / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(summary_schema_error(j) == "");
  CHECK(j["seeds"].size() == 2);
  CHECK(j["mean_final_eval"].get<double>() == doctest::Approx(s.mean_final_eval));
  CHECK(fs::exists(out / "config.json"));
  CHECK_FALSE(fs::exists(out / "seed_4" / "checkpoint.bin"));

  auto bad = j;
  bad.erase("config_hash");
  CHECK(summary_schema_error(bad) != "");
  bad = j;
  bad["seeds"][0]["final_eval"] = "high";
  CHECK(summary_schema_error(bad) != "");
  bad = j;
  bad["surprise"] = true;
  CHECK(summary_schema_error(bad) != "");
  fs::remove_all(out);
}

TEST_CASE("existing output directory requires force") {
  const fs::path out = scratch("force");
  ExperimentConfig c = small_config(out);
  c.scheme = SchemeId::greedy_rsma;
  c.total_steps = 5;
  run_training(c);
  CHECK_THROWS_AS(run_training(c), ConfigError);
  CHECK_NOTHROW(run_training(c, true));
  fs::remove_all(out);
}

TEST_CASE("greedy run reports feasible transitions and no updates") {
  const fs::path out = scratch("greedy");
  ExperimentConfig c = small_config(out);
  c.scheme = SchemeId::greedy_rsma;
  c.total_steps = 50;
  const RunSummary s = run_training(c);
  CHECK(s.seeds[0].training.feasibility.total() == 0);
  CHECK(s.seeds[0].training.updates == 0);
  CHECK(s.seeds[0].final_eval == s.seeds[0].initial_eval);
  fs::remove_all(out);
}

TEST_CASE("checkpoint with mismatched shape is rejected") {
  const fs::path out = scratch("ckpt");
  ExperimentConfig c = small_config(out);
  c.total_steps = 20;
  run_training(c);
  const fs::path ck = out / "seed_1" / "checkpoint.bin";
  CHECK_NOTHROW(evaluate_checkpoint(ck, c, 10, 7));
  ExperimentConfig other = c;
  other.env.channel.n_tx = 3;
  try {
    evaluate_checkpoint(ck, other, 10, 7);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }
  CHECK_THROWS_AS(evaluate_checkpoint(out / "missing.bin", c, 10, 7), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("greedy sweep over battery capacity") {
  const fs::path out = scratch("sweep");
  ExperimentConfig c = small_config(out);
  c.total_steps = 0;
  c.eval_steps = 60;
  c.env.energy.harvest_prob = 1.0;
  c.env.energy.law = ArrivalLaw::point_mass;
  const std::vector<double> values{5.0, 10.0, 20.0};
  const auto rows = run_sweep(c, {SchemeId::greedy_rsma}, values);
  REQUIRE(rows.size() == 3);
  // full harvest every slot: greedy spends min(E, b_max), so capacity matters
  CHECK(rows[0].mean < rows[1].mean);
  CHECK(rows[1].mean < rows[2].mean);
  CHECK(fs::exists(out / "table.csv"));
  const std::string table = slurp(out / "table.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK_THROWS_AS(run_sweep(c, {SchemeId::greedy_rsma}, {10.0, 5.0}, true), ConfigError);

  // beyond one arrival the battery never accumulates more
  const auto flat = run_sweep(c, {SchemeId::greedy_rsma, SchemeId::greedy_sdma}, {20.0, 40.0}, true);
  REQUIRE(flat.size() == 4);
  CHECK(flat[0].mean == flat[1].mean);
  CHECK(flat[2].mean == flat[3].mean);

  ExperimentConfig single = c;
  single.scheme = SchemeId::greedy_rsma;
  single.output_dir = out / "single";
  const auto one = run_sweep(c, {SchemeId::greedy_rsma}, {20.0}, true);
  CHECK(one[0].mean == run_training(single).mean_final_eval);
  fs::remove_all(out);
}
