// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "draws.hpp"
#include "oracles/qp_enumeration.hpp"
#include "rsmalab/baselines.hpp"
#include "rsmalab/harness.hpp"
#include "rsmalab/qp.hpp"
#include "rsmalab/rates.hpp"
#include "rsmalab/solver_corpus.hpp"

using namespace rsmalab;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double seconds) {
  std::printf("[%s] %d %-26s %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Student t upper-tail probability by Simpson integration of the density.
double t_upper_tail(double t, double df) {
  if (t <= 0.0) return 1.0 - t_upper_tail(-t, df);
  const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto pdf = [&](double x) { return std::exp(log_c - (df + 1) / 2 * std::log1p(x * x / df)); };
  const int n = 20000;
  const double h = t / n;
  double s = pdf(0.0) + pdf(t);
  for (int i = 1; i < n; ++i) s += pdf(i * h) * (i % 2 ? 4.0 : 2.0);
  return 0.5 - s * h / 3.0;
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
  double t = 0.0;
  double p = 1.0;
};

// One-sided test of mean(x) > 0.
Stats one_sided(const std::vector<double>& x) {
  Stats s;
  const double n = static_cast<double>(x.size());
  for (double v : x) s.mean += v;
  s.mean /= n;
  for (double v : x) s.sd += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(s.sd / (n - 1));
  s.t = s.sd > 0.0 ? s.mean / (s.sd / std::sqrt(n)) : (s.mean > 0.0 ? INFINITY : -INFINITY);
  s.p = std::isinf(s.t) ? (s.t > 0 ? 0.0 : 1.0) : t_upper_tail(s.t, n - 1);
  return s;
}

CVector random_unit(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v[i] = {nd(gen), nd(gen)};
  return v / v.norm();
}

void rate_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const double sigma_e2 = 0.1;
  const double noise = 1.0;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::normal_distribution<double> err(0.0, std::sqrt(sigma_e2 / 2.0));
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const ChannelSet ch = testing::random_slot(100000 + static_cast<std::uint64_t>(draw), sigma_e2);
    const double power = 1.0 + 19.0 * std::uniform_real_distribution<double>()(gen);
    std::vector<double> mu{unif(gen), unif(gen), unif(gen)};
    const double total = mu[0] + mu[1] + mu[2];
    for (auto& m : mu) m /= total;
    const std::vector<CVector> dirs{random_unit(gen, 2), random_unit(gen, 2)};
    const PrecoderSet set = assemble(power, mu[2], std::span(mu.data(), 2), random_unit(gen, 2), dirs);
    std::vector<CVector> streams{set.common, set.privates[0], set.privates[1]};
    for (int k = 0; k < 2; ++k) {
      const CVector& h = ch.estimated_channels[static_cast<size_t>(k)];
      // recover the error term from the library's common-stream rate
      const double rate = common_rate_k(k, ch, set, noise);
      double rest = noise;
      for (const auto& p : set.privates) rest += std::norm(h.dot(p));
      const double library = std::norm(h.dot(set.common)) / std::expm1(rate * std::log(2.0)) - rest;
      double sample = 0.0;
      const int n_mc = 100000;
      CVector e(2);
      for (int d = 0; d < n_mc; ++d) {
        for (int i = 0; i < 2; ++i) e[i] = {err(gen), err(gen)};
        for (const auto& p : streams) sample += std::norm(e.dot(p));
      }
      sample /= n_mc;
      worst = std::max(worst, std::abs(library - sample) / sample);
    }
  }
  report(1, "rate-equation oracle", worst <= 0.05,
         fmt("1000 draws x 2 users, max rel err %.4f (tol 0.05)", worst), seconds_since(t0));
}

void solver_regression() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_obj = 0.0;
  int solved = 0;
  for (const auto& c : regression_corpus()) {
    for (bool numeric : {false, true}) {
      const NlpSolution s = solve(numeric ? without_gradients(c.problem) : c.problem, c.start);
      worst_obj = std::max(worst_obj, std::abs(s.objective_value - c.optimal_value));
      solved += s.status == SolverStatus::converged ? 1 : 0;
    }
  }
  RandomStream rng(31337);
  double worst_qp = 0.0;
  int qp_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const QpProblem qp = testing::random_qp(rng);
    const auto reference = oracle::enumerate_active_sets(qp);
    const QpResult r = solve_qp(qp);
    if (!reference || r.status != QpStatus::optimal) {
      ++qp_failures;
      continue;
    }
    worst_qp = std::max(worst_qp, (r.step - reference->step).lpNorm<Eigen::Infinity>());
  }
  const int n_corpus = static_cast<int>(regression_corpus().size());
  const bool pass = n_corpus == 10 && worst_obj <= 1e-5 && qp_failures == 0 && worst_qp <= 1e-8;
  report(2, "SLSQP regression corpus", pass,
         fmt("%.0f problems x {analytic, fd}: max |f - f*| %.2e (tol 1e-5); 100 QPs: max step diff %.2e (tol 1e-8)",
             n_corpus, worst_obj, worst_qp),
         seconds_since(t0));
}

double max_gradient_error(const DenseNet& original, std::uint64_t seed) {
  DenseNet net = original;
  const int in = net.widths().front();
  const int out = net.widths().back();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix x(in, 3);
  Matrix g(out, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = nd(gen);
  DenseNet::Cache cache;
  net.forward(x, cache);
  Matrix input_grad;
  const Vector grad = net.backward(cache, g, &input_grad);
  const double h = 1e-5;
  auto loss = [&](const Matrix& in_batch) { return net.forward(in_batch).cwiseProduct(g).sum(); };
  auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}); };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) {
    const double saved = net.parameters()[i];
    net.parameters()[i] = saved + h;
    const double fp = loss(x);
    net.parameters()[i] = saved - h;
    const double fm = loss(x);
    net.parameters()[i] = saved;
    worst = std::max(worst, rel((fp - fm) / (2 * h), grad[i]));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x;
    Matrix xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    worst = std::max(worst, rel((loss(xp) - loss(xm)) / (2 * h), input_grad.data()[i]));
  }
  return worst;
}

void gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  const EnvConfig env;
  SacAgent agent(env.state_dimension(), SacConfig{}, 3);
  const double actor = max_gradient_error(agent.actor(), 11);
  const double critic = max_gradient_error(agent.critic(0), 12);
  const double target = max_gradient_error(agent.target(1), 13);
  const double worst = std::max({actor, critic, target});
  report(3, "network gradients", worst < 1e-4,
         fmt("actor %.2e, critic %.2e, target critic %.2e (tol 1e-4)", actor, critic, target),
         seconds_since(t0));
}

void containment() {
  const auto t0 = std::chrono::steady_clock::now();
  const double power = 10.0;
  const double noise = 1.0;
  double worst_gap = INFINITY;
  std::vector<double> vs_sdma;
  const int n_draws = 100;
  for (int draw = 0; draw < n_draws; ++draw) {
    const ChannelSet ch = testing::random_slot(500000 + static_cast<std::uint64_t>(draw), 0.1);
    PrecoderOptions opts;
    opts.multistart = true;
    std::vector<double> rates;
    for (auto rule : {PrecoderRule::sdma, PrecoderRule::noma, PrecoderRule::rsma_fixed_eta,
                      PrecoderRule::rsma_no_info}) {
      const PrecoderDecision d = design_precoder(rule, ch, power, noise);
      rates.push_back(d.sum_rate());
      opts.warm_starts.push_back(rsma_equivalent(d, rule, ch, power, noise));
    }
    const double rsma = optimize_precoder(ch, power, noise, {}, opts).sum_rate();
    for (double r : rates) worst_gap = std::min(worst_gap, rsma - r);
    vs_sdma.push_back(rsma - rates[0]);
  }
  const Stats s = one_sided(vs_sdma);
  const bool pass = worst_gap >= -1e-6 && s.p < 0.05;
  report(5, "containment hierarchy", pass,
         fmt("%.0f draws: min(RSMA - baseline) %.2e (tol -1e-6); RSMA - SDMA mean %.4f, t %.2f",
             n_draws, worst_gap, s.mean, s.t) +
             fmt(", p %.2e (< 0.05)", s.p),
         seconds_since(t0));
}

ExperimentConfig base_config(const fs::path& root, const std::string& name) {
  ExperimentConfig c;
  c.output_dir = root / name;
  c.eval_steps = 1000;
  return c;
}

struct DefaultRuns {
  RunSummary learned;
  RunSummary greedy;
  double seconds = 0.0;
};

// Five 10^4-step runs at the default setting, shared by criteria 4 and 6.
DefaultRuns default_runs(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  DefaultRuns runs;
  ExperimentConfig learned = base_config(root, "drl");
  learned.seeds = {1, 2, 3, 4, 5};
  learned.total_steps = 10000;
  runs.learned = run_training(learned, true);
  ExperimentConfig greedy = learned;
  greedy.scheme = SchemeId::greedy_rsma;
  greedy.output_dir = root / "greedy";
  greedy.total_steps = 0;
  runs.greedy = run_training(greedy, true);
  runs.seconds = seconds_since(t0);
  return runs;
}

void feasibility(const DefaultRuns& runs) {
  long long violations = 0;
  long long steps = 0;
  for (const auto& s : runs.learned.seeds) {
    violations += s.training.feasibility.total();
    steps += s.training.steps;
  }
  report(4, "feasibility invariants", violations == 0 && steps == 5 * 10000,
         fmt("%.0f transitions over five 10^4-step runs, %.0f violations (tol 1e-6)",
             static_cast<double>(steps), static_cast<double>(violations)),
         runs.seconds);
}

void drl_vs_greedy(const DefaultRuns& runs) {
  std::vector<double> diff;
  for (size_t i = 0; i < runs.learned.seeds.size(); ++i) {
    diff.push_back(runs.learned.seeds[i].final_eval - runs.greedy.seeds[i].final_eval);
  }
  const Stats s = one_sided(diff);
  report(6, "DRL vs greedy", s.p < 0.05 && s.mean > 0.0,
         fmt("5 seeds x 10^4 steps: DRL %.4f vs greedy %.4f, paired t %.2f, p %.2e (< 0.05)",
             runs.learned.mean_final_eval, runs.greedy.mean_final_eval, s.t, s.p),
         runs.seconds);
}

void no_scarcity(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig plenty = base_config(root, "plenty");
  plenty.env.energy.harvest_prob = 1.0;
  plenty.env.energy.law = ArrivalLaw::point_mass;
  plenty.seeds = {1, 2, 3};
  plenty.total_steps = 5000;
  const RunSummary learned = run_training(plenty, true);
  plenty.scheme = SchemeId::greedy_rsma;
  plenty.total_steps = 0;
  plenty.output_dir = root / "plenty_greedy";
  const RunSummary greedy = run_training(plenty, true);
  const double ratio = learned.mean_final_eval / greedy.mean_final_eval;
  report(7, "no-scarcity sanity", ratio >= 0.95,
         fmt("3 seeds x 5000 steps, p_e = 1: DRL %.4f / greedy %.4f = %.4f (>= 0.95)",
             learned.mean_final_eval, greedy.mean_final_eval, ratio),
         seconds_since(t0));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = base_config(root, "det_a");
  c.seeds = {11, 12};
  c.total_steps = 1200;
  c.eval_steps = 100;
  run_training(c, true);
  c.output_dir = root / "det_b";
  c.jobs = 2;
  run_training(c, true);
  const std::string a = slurp(root / "det_a" / "curves.csv");
  const std::string b = slurp(root / "det_b" / "curves.csv");
  const bool pass = !a.empty() && a == b &&
                    slurp(root / "det_a" / "summary.json") == slurp(root / "det_b" / "summary.json");
  report(8, "determinism", pass,
         fmt("2 seeds x 1200 steps run twice: curves.csv %.0f bytes, identical = %.0f", static_cast<double>(a.size()),
             a == b ? 1.0 : 0.0),
         seconds_since(t0));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rsmalab_acceptance";
  fs::create_directories(root);
  DefaultRuns runs;
  bool have_runs = false;
  const std::vector<std::function<void()>> criteria{
      rate_oracle,
      solver_regression,
      gradient_checks,
      [&] {
        runs = default_runs(root);
        have_runs = true;
        feasibility(runs);
      },
      containment,
      [&] {
        if (!have_runs) throw std::runtime_error("criterion 6 needs the default training runs");
        drl_vs_greedy(runs);
      },
      [&] { no_scarcity(root); },
      [&] { determinism(root); }};
  for (const auto& run : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion aborted: %s\n", e.what());
      ++g_failed;
    }
  }
  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
