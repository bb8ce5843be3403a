#include "rsmalab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace rsmalab {
namespace {

using nlohmann::json;

constexpr const char* kSummarySchema = "rsmalab.summary/1";

// Reads fields of one JSON object, rejecting keys that are never consumed.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw ConfigError(std::string("config: '") + name + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw ConfigError(std::string("config: unknown key ") + name_ + "." + key);
    }
  }

 private:
  const char* name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

std::string_view law_name(ArrivalLaw law) {
  return law == ArrivalLaw::uniform ? "uniform" : "point-mass";
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool learned(SchemeId id) { return power_policy(id) == PowerPolicy::learned; }

EnvConfig env_for(const ExperimentConfig& config) {
  EnvConfig env = config.env;
  env.precoder = precoder_rule(config.scheme);
  return env;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void prepare_output(const std::filesystem::path& dir, bool force) {
  if (std::filesystem::exists(dir)) {
    if (!force) {
      throw ConfigError("output directory " + dir.string() + " exists; pass --force to overwrite");
    }
    std::filesystem::remove_all(dir);
  }
  std::filesystem::create_directories(dir);
}

struct SeedArtifacts {
  SeedResult result;
  std::string csv;
};

SeedArtifacts run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::string& hash) {
  const EnvConfig env_cfg = env_for(config);
  SeedArtifacts out;
  out.result.seed = seed;
  std::ostringstream csv;
  const std::string prefix = std::to_string(seed) + "," + hash + ",";
  const auto eval_seed = evaluation_seed(seed);

  EnergyEnv env(env_cfg, seed);
  auto log_row = [&](const TrainRecord& r, bool with_losses) {
    csv << prefix << r.step << ',' << format_number(r.reward) << ','
        << (with_losses && r.updated ? format_number(r.critic_loss) : "") << ','
        << (with_losses && r.updated ? format_number(r.actor_loss) : "") << ','
        << format_number(r.battery) << ',' << format_number(r.power) << '\n';
  };

  if (learned(config.scheme)) {
    SacAgent agent(env_cfg.state_dimension(), config.sac, seed);
    out.result.initial_eval =
        evaluate_policy(env_cfg, eval_seed, config.eval_steps, learned_policy(agent, env_cfg));
    out.result.training = train(env, agent, config.total_steps,
                                [&](const TrainRecord& r, const Transition&) { log_row(r, true); });
    out.result.final_eval =
        config.total_steps == 0
            ? out.result.initial_eval
            : evaluate_policy(env_cfg, eval_seed, config.eval_steps, learned_policy(agent, env_cfg));
    const auto dir = config.output_dir / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    std::ofstream ck(dir / "checkpoint.bin", std::ios::binary);
    agent.save(ck);
  } else {
    const PowerPolicyFn policy = greedy_policy(env_cfg);
    TrainSummary& s = out.result.training;
    for (std::int64_t step = 0; step < config.total_steps; ++step) {
      const EnvState& st = env.state();
      TrainRecord r;
      r.step = step;
      r.battery = st.battery;
      const Transition t = env.step(policy(st, Vector()));
      r.reward = t.reward;
      r.power = t.action;
      s.feasibility += check_transition(t, env_cfg);
      if (t.decision.solver_called && t.decision.solver_status != SolverStatus::converged) {
        ++s.solver_failures;
      }
      ++s.steps;
      log_row(r, false);
    }
    out.result.final_eval = evaluate_policy(env_cfg, eval_seed, config.eval_steps, policy);
    out.result.initial_eval = out.result.final_eval;
  }
  out.csv = csv.str();
  return out;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    sac.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (seeds.empty()) throw ConfigError("config: seed list must not be empty");
  if (total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (eval_steps < 1) throw ConfigError("config: eval_steps must be >= 1");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (precoder_rule(scheme) == PrecoderRule::noma && env.channel.n_users != 2) {
    throw ConfigError("config: NOMA schemes need exactly two users");
  }
  try {
    env.precoder_options.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["scheme"] = std::string(to_string(c.scheme));
  j["channel"] = {{"n_users", c.env.channel.n_users},   {"n_tx", c.env.channel.n_tx},
                  {"kappa", c.env.channel.kappa},       {"omega", c.env.channel.omega},
                  {"sigma_e2", c.env.sigma_e2},         {"noise_var", c.env.noise_var}};
  j["energy"] = {{"harvest_prob", c.env.energy.harvest_prob},
                 {"max_energy", c.env.energy.max_energy},
                 {"arrival_law", std::string(law_name(c.env.energy.law))},
                 {"battery_max", c.env.battery_max},
                 {"initial_battery", c.env.initial_battery},
                 {"slot_time", c.env.slot_time},
                 {"truncation_steps", c.env.truncation_steps}};
  j["sac"] = {{"gamma", c.sac.gamma},
              {"alpha", c.sac.alpha},
              {"buffer_capacity", c.sac.buffer_capacity},
              {"batch_size", c.sac.batch_size},
              {"actor_lr", c.sac.actor_lr},
              {"critic_lr", c.sac.critic_lr},
              {"tau", c.sac.tau},
              {"update_every", c.sac.update_every},
              {"warmup_steps", c.sac.warmup_steps},
              {"hidden", c.sac.hidden}};
  const SolverOptions& s = c.env.precoder_options.solver;
  j["solver"] = {{"max_iterations", s.max_iterations},
                 {"tolerance", s.tolerance},
                 {"gradient_step", s.gradient_step},
                 {"multistart", c.env.precoder_options.multistart}};
  j["run"] = {{"seeds", c.seeds},
              {"total_steps", c.total_steps},
              {"eval_steps", c.eval_steps},
              {"jobs", c.jobs},
              {"output_dir", c.output_dir.string()}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> sections{"scheme", "channel", "energy", "sac", "solver", "run"};
  for (const auto& [key, value] : j.items()) {
    if (!sections.count(key)) throw ConfigError("config: unknown key " + key);
  }
  ExperimentConfig c;
  if (j.contains("scheme")) {
    if (!j.at("scheme").is_string()) throw ConfigError("config: scheme must be a string");
    const auto id = parse_scheme(j.at("scheme").get<std::string>());
    if (!id) throw ConfigError("config: unknown scheme " + j.at("scheme").get<std::string>());
    c.scheme = *id;
  }
  Section ch(j, "channel");
  ch.get("n_users", c.env.channel.n_users);
  ch.get("n_tx", c.env.channel.n_tx);
  ch.get("kappa", c.env.channel.kappa);
  ch.get("omega", c.env.channel.omega);
  ch.get("sigma_e2", c.env.sigma_e2);
  ch.get("noise_var", c.env.noise_var);
  ch.finish();

  Section en(j, "energy");
  en.get("harvest_prob", c.env.energy.harvest_prob);
  en.get("max_energy", c.env.energy.max_energy);
  std::string law(law_name(c.env.energy.law));
  en.get("arrival_law", law);
  if (law == "uniform") {
    c.env.energy.law = ArrivalLaw::uniform;
  } else if (law == "point-mass") {
    c.env.energy.law = ArrivalLaw::point_mass;
  } else {
    throw ConfigError("config: arrival_law must be 'uniform' or 'point-mass'");
  }
  en.get("battery_max", c.env.battery_max);
  en.get("initial_battery", c.env.initial_battery);
  en.get("slot_time", c.env.slot_time);
  en.get("truncation_steps", c.env.truncation_steps);
  en.finish();

  Section sac(j, "sac");
  sac.get("gamma", c.sac.gamma);
  sac.get("alpha", c.sac.alpha);
  sac.get("buffer_capacity", c.sac.buffer_capacity);
  sac.get("batch_size", c.sac.batch_size);
  sac.get("actor_lr", c.sac.actor_lr);
  sac.get("critic_lr", c.sac.critic_lr);
  sac.get("tau", c.sac.tau);
  sac.get("update_every", c.sac.update_every);
  sac.get("warmup_steps", c.sac.warmup_steps);
  sac.get("hidden", c.sac.hidden);
  sac.finish();

  Section so(j, "solver");
  so.get("max_iterations", c.env.precoder_options.solver.max_iterations);
  so.get("tolerance", c.env.precoder_options.solver.tolerance);
  so.get("gradient_step", c.env.precoder_options.solver.gradient_step);
  so.get("multistart", c.env.precoder_options.multistart);
  so.finish();

  Section run(j, "run");
  run.get("seeds", c.seeds);
  run.get("total_steps", c.total_steps);
  run.get("eval_steps", c.eval_steps);
  run.get("jobs", c.jobs);
  std::string out = c.output_dir.string();
  run.get("output_dir", out);
  c.output_dir = out;
  run.finish();

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j["run"].erase("seeds");
  j["run"].erase("jobs");
  j["run"].erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

PowerPolicyFn greedy_policy(const EnvConfig& env) {
  const double t = env.slot_time;
  return [t](const EnvState& s, const Vector&) { return greedy_power(s.battery, t); };
}

PowerPolicyFn learned_policy(const SacAgent& agent, const EnvConfig& env) {
  const double t = env.slot_time;
  return [&agent, t](const EnvState& s, const Vector& features) {
    if (!(s.battery > 0.0)) return 0.0;
    const PolicyOutput head = agent.policy(features);
    return squash(head.mean, 0.0, 1.0) * s.battery / t;
  };
}

double evaluate_policy(const EnvConfig& env_cfg, std::uint64_t seed, int steps,
                       const PowerPolicyFn& policy) {
  if (steps < 1) throw std::invalid_argument("evaluate: steps must be >= 1");
  EnergyEnv env(env_cfg, seed);
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    const EnvState& st = env.state();
    const double p = std::clamp(policy(st, encode_state(st, env_cfg)), 0.0, max_feasible_power(st, env_cfg));
    total += env.step(p).reward;
  }
  return total / steps;
}

std::uint64_t evaluation_seed(std::uint64_t training_seed) {
  return mix64(training_seed ^ 0x5EEDE7A1ULL);
}

double evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                           int steps, std::uint64_t seed) {
  const EnvConfig env_cfg = env_for(config);
  SacAgent agent(env_cfg.state_dimension(), config.sac, 0);
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + checkpoint.string());
  const auto start = in.tellg();
  try {
    agent.load(in);
  } catch (const std::runtime_error& e) {
    // Describe the shapes actually stored next to the ones this config needs.
    in.clear();
    in.seekg(start);
    in.ignore(8 + 4);
    std::string found;
    try {
      const DenseNet stored = DenseNet::load(in);
      for (int w : stored.widths()) found += std::to_string(w) + " ";
    } catch (const std::exception&) {
      found = "unreadable ";
    }
    std::string expected;
    for (int w : agent.actor().widths()) expected += std::to_string(w) + " ";
    throw ConfigError(std::string(e.what()) + "; actor widths expected [ " + expected + "] found [ " +
                      found + "]");
  }
  return evaluate_policy(env_cfg, seed, steps, learned_policy(agent, env_cfg));
}

json to_json(const RunSummary& summary, const ExperimentConfig& config) {
  json j;
  j["schema"] = kSummarySchema;
  j["config_hash"] = summary.config_hash;
  j["scheme"] = std::string(to_string(summary.scheme));
  j["total_steps"] = config.total_steps;
  j["eval_steps"] = config.eval_steps;
  j["seeds"] = json::array();
  for (const SeedResult& s : summary.seeds) {
    const auto& f = s.training.feasibility;
    j["seeds"].push_back({{"seed", s.seed},
                          {"initial_eval", s.initial_eval},
                          {"final_eval", s.final_eval},
                          {"steps", s.training.steps},
                          {"updates", s.training.updates},
                          {"solver_failures", s.training.solver_failures},
                          {"clipped_actions", s.training.clipped_actions},
                          {"feasibility_violations",
                           {{"battery", f.battery},
                            {"power", f.power},
                            {"simplex", f.simplex},
                            {"unit_norm", f.unit_norm}}}});
  }
  j["mean_final_eval"] = summary.mean_final_eval;
  j["std_final_eval"] = summary.std_final_eval;
  return j;
}

std::string summary_schema_error(const json& j) {
  if (!j.is_object()) return "summary is not an object";
  const std::set<std::string> top{"schema",    "config_hash",     "scheme",        "total_steps",
                                  "eval_steps", "seeds",          "mean_final_eval", "std_final_eval"};
  for (const auto& key : top) {
    if (!j.contains(key)) return "missing key " + key;
  }
  for (const auto& [key, value] : j.items()) {
    if (!top.count(key)) return "unexpected key " + key;
  }
  if (j["schema"] != kSummarySchema) return "wrong schema tag";
  if (!j["config_hash"].is_string() || j["config_hash"].get<std::string>().size() != 16) {
    return "config_hash must be 16 hex digits";
  }
  if (!j["scheme"].is_string() || !parse_scheme(j["scheme"].get<std::string>())) return "bad scheme";
  if (!j["total_steps"].is_number_integer() || !j["eval_steps"].is_number_integer()) {
    return "step counts must be integers";
  }
  if (!j["mean_final_eval"].is_number() || !j["std_final_eval"].is_number()) return "bad aggregate";
  if (!j["seeds"].is_array() || j["seeds"].empty()) return "seeds must be a non-empty array";
  const std::set<std::string> per_seed{"seed",    "initial_eval",    "final_eval",
                                       "steps",   "updates",         "solver_failures",
                                       "clipped_actions", "feasibility_violations"};
  for (const auto& s : j["seeds"]) {
    if (!s.is_object() || s.size() != per_seed.size()) return "bad seed record";
    for (const auto& key : per_seed) {
      if (!s.contains(key)) return "seed record missing " + key;
    }
    if (!s["initial_eval"].is_number() || !s["final_eval"].is_number()) return "bad seed evaluation";
    const auto& f = s["feasibility_violations"];
    for (const char* key : {"battery", "power", "simplex", "unit_norm"}) {
      if (!f.contains(key) || !f[key].is_number_integer()) return "bad feasibility record";
    }
  }
  return "";
}

RunSummary run_training(const ExperimentConfig& config, bool force) {
  config.validate();
  prepare_output(config.output_dir, force);
  const std::string hash = config_hash(config);
  write_json_file(config.output_dir / "config.json", to_json(config));

  std::vector<SeedArtifacts> results(config.seeds.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        results[i] = run_seed(config, config.seeds[i], hash);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n_workers = std::min<int>(config.jobs, static_cast<int>(config.seeds.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::ofstream csv(config.output_dir / "curves.csv");
  csv << kCurveHeader << '\n';
  RunSummary summary;
  summary.config_hash = hash;
  summary.scheme = config.scheme;
  std::vector<double> finals;
  for (auto& r : results) {
    csv << r.csv;
    summary.seeds.push_back(r.result);
    finals.push_back(r.result.final_eval);
  }
  if (!csv) throw std::runtime_error("cannot write curves.csv");
  mean_std(finals, summary.mean_final_eval, summary.std_final_eval);
  write_json_file(config.output_dir / "summary.json", to_json(summary, config));
  return summary;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::vector<SchemeId>& schemes,
                                const std::vector<double>& values, bool force) {
  if (values.empty() || !std::is_sorted(values.begin(), values.end())) {
    throw ConfigError("sweep: values must be non-empty and ascending");
  }
  if (schemes.empty()) throw ConfigError("sweep: no schemes given");
  config.validate();
  prepare_output(config.output_dir, force);
  std::vector<SweepRow> rows;
  std::ofstream table(config.output_dir / "table.csv");
  table << "scheme,config_hash,battery_max,mean_sum_rate,std_sum_rate,n_seeds\n";
  for (SchemeId scheme : schemes) {
    for (double v : values) {
      ExperimentConfig c = config;
      c.scheme = scheme;
      c.env.battery_max = v;
      c.env.initial_battery = std::min(c.env.initial_battery, v);
      c.output_dir = config.output_dir / std::string(to_string(scheme)) / ("bmax_" + format_number(v));
      const RunSummary s = run_training(c, true);
      rows.push_back({scheme, v, s.mean_final_eval, s.std_final_eval, s.seeds.size()});
      table << to_string(scheme) << ',' << s.config_hash << ',' << format_number(v) << ','
            << format_number(s.mean_final_eval) << ',' << format_number(s.std_final_eval) << ','
            << s.seeds.size() << '\n';
    }
  }
  if (!table) throw std::runtime_error("cannot write table.csv");
  return rows;
}

}  // namespace rsmalab
