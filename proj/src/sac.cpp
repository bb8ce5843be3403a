#include "rsmalab/sac.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace rsmalab {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kBoundaryInset = 1e-6;
constexpr std::array<char, 8> kMagic{'R', 'S', 'M', 'A', 'S', 'A', 'C', '\0'};
constexpr std::uint32_t kVersion = 1;

std::vector<int> layer_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Heads {
  Vector mean;
  Vector log_std;
  std::vector<bool> clamped;
};

Heads split_heads(const Matrix& out) {
  Heads h;
  h.mean = out.row(0).transpose();
  h.log_std.resize(out.cols());
  h.clamped.resize(static_cast<size_t>(out.cols()));
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const double raw = out(1, i);
    h.log_std[i] = std::clamp(raw, kLogStdMin, kLogStdMax);
    h.clamped[static_cast<size_t>(i)] = raw < kLogStdMin || raw > kLogStdMax;
  }
  return h;
}

// Log-density of the fraction a = (tanh u + 1) / 2 with u = mean + std * eps.
double fraction_log_prob(double eps, double log_std, double u) {
  return -0.5 * eps * eps - log_std - kHalfLog2Pi - log1m_tanh2(u) + std::numbers::ln2;
}

}  // namespace

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("sac: gamma must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("sac: alpha must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("sac: batch size must be >= 1");
  if (buffer_capacity < batch_size) throw std::invalid_argument("sac: buffer smaller than a batch");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw std::invalid_argument("sac: learning rates must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("sac: tau must lie in (0, 1]");
  if (update_every < 1) throw std::invalid_argument("sac: update_every must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("sac: warmup must be >= 0");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("sac: hidden widths must be >= 1");
  }
}

double log1m_tanh2(double u) {
  // 1 - tanh^2 u = 4 / (e^u + e^-u)^2
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

double squash(double u, double lo, double hi) { return lo + (hi - lo) * 0.5 * (std::tanh(u) + 1.0); }

double log_prob(const PolicyOutput& head, double action, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("log_prob: empty interval");
  const double width = hi - lo;
  const double a = std::clamp(action, lo + kBoundaryInset * width, hi - kBoundaryInset * width);
  const double y = 2.0 * (a - lo) / width - 1.0;
  const double u = std::atanh(y);
  const double log_std = std::clamp(head.log_std, kLogStdMin, kLogStdMax);
  const double z = (u - head.mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi - log1m_tanh2(u) - std::log(0.5 * width);
}

ReplayBuffer::ReplayBuffer(std::int64_t capacity, int state_dim) : capacity_(capacity), dim_(state_dim) {
  if (capacity < 1 || state_dim < 1) throw std::invalid_argument("replay: bad capacity or dimension");
}

void ReplayBuffer::push(const Vector& state, double action, double reward, const Vector& next_state,
                        bool truncated) {
  if (state.size() != dim_ || next_state.size() != dim_) throw std::invalid_argument("replay: bad state size");
  const auto d = static_cast<size_t>(dim_);
  if (size_ < capacity_) {
    states_.insert(states_.end(), state.data(), state.data() + dim_);
    next_states_.insert(next_states_.end(), next_state.data(), next_state.data() + dim_);
    actions_.push_back(action);
    rewards_.push_back(reward);
    truncated_.push_back(truncated ? 1 : 0);
    ++size_;
  } else {
    const auto i = static_cast<size_t>(next_);
    std::copy(state.data(), state.data() + dim_, states_.begin() + static_cast<std::ptrdiff_t>(i * d));
    std::copy(next_state.data(), next_state.data() + dim_,
              next_states_.begin() + static_cast<std::ptrdiff_t>(i * d));
    actions_[i] = action;
    rewards_[i] = reward;
    truncated_[i] = truncated ? 1 : 0;
  }
  next_ = (next_ + 1) % capacity_;
}

Batch ReplayBuffer::sample(int batch_size, RandomStream& rng) const {
  if (batch_size < 1 || batch_size > size_) throw std::invalid_argument("replay: batch larger than buffer");
  // Floyd's algorithm: distinct indices, order of selection kept.
  std::vector<std::int64_t> picks;
  picks.reserve(static_cast<size_t>(batch_size));
  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<size_t>(batch_size) * 2);
  for (std::int64_t j = size_ - batch_size; j < size_; ++j) {
    const auto t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(j + 1)));
    const std::int64_t pick = seen.count(t) ? j : t;
    seen.insert(pick);
    picks.push_back(pick);
  }
  Batch b;
  b.states.resize(dim_, batch_size);
  b.next_states.resize(dim_, batch_size);
  b.actions.resize(batch_size);
  b.rewards.resize(batch_size);
  b.truncated.resize(static_cast<size_t>(batch_size));
  const auto d = static_cast<size_t>(dim_);
  for (int c = 0; c < batch_size; ++c) {
    const auto i = static_cast<size_t>(picks[static_cast<size_t>(c)]);
    b.states.col(c) = Eigen::Map<const Vector>(states_.data() + i * d, dim_);
    b.next_states.col(c) = Eigen::Map<const Vector>(next_states_.data() + i * d, dim_);
    b.actions[c] = actions_[i];
    b.rewards[c] = rewards_[i];
    b.truncated[static_cast<size_t>(c)] = truncated_[i] != 0;
  }
  return b;
}

SacAgent::SacAgent(int state_dim, SacConfig config, std::uint64_t seed)
    : state_dim_(state_dim), config_(std::move(config)), rng_(RandomStream(seed).split(0xA11CE)) {
  config_.validate();
  if (state_dim < 1) throw std::invalid_argument("sac: state dimension must be >= 1");
  const RandomStream init(seed);
  actor_ = DenseNet(layer_widths(state_dim, config_.hidden, 2), init.split(1).seed());
  for (int i = 0; i < 2; ++i) {
    critics_.emplace_back(layer_widths(state_dim + 1, config_.hidden, 1),
                          init.split(2 + static_cast<std::uint64_t>(i)).seed());
    targets_.push_back(critics_.back());
    critic_opts_.emplace_back(critics_.back().parameter_count(), config_.critic_lr);
  }
  actor_opt_ = Adam(actor_.parameter_count(), config_.actor_lr);
}

PolicyOutput SacAgent::policy(const Vector& state) const {
  const Matrix out = actor_.forward(state);
  return {out(0, 0), std::clamp(out(1, 0), kLogStdMin, kLogStdMax)};
}

double SacAgent::select_fraction(const Vector& state, bool deterministic) {
  const PolicyOutput head = policy(state);
  const double u = deterministic ? head.mean : head.mean + std::exp(head.log_std) * rng_.normal();
  return squash(u, 0.0, 1.0);
}

double SacAgent::select_action(const Vector& state, double battery, double slot_time,
                               bool deterministic) {
  if (!(battery > 0.0)) return 0.0;
  const double f = select_fraction(state, deterministic);
  return std::clamp(f, 0.0, 1.0) * battery / slot_time;
}

Matrix SacAgent::critic_inputs(const Matrix& states, const Vector& fractions) const {
  Matrix in(state_dim_ + 1, states.cols());
  in.topRows(state_dim_) = states;
  in.row(state_dim_) = fractions.transpose();
  return in;
}

double SacAgent::q_value(int critic, const Vector& state, double fraction) const {
  const Vector f = Vector::Constant(1, fraction);
  return critics_[static_cast<size_t>(critic)].forward(critic_inputs(state, f))(0, 0);
}

Vector SacAgent::critic_targets(const Batch& batch, const NextActionFn& next_action) {
  const Eigen::Index n = batch.size();
  Vector next_a(n);
  Vector next_logp(n);
  if (next_action) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [a, lp] = next_action(batch.next_states.col(i));
      next_a[i] = a;
      next_logp[i] = lp;
    }
  } else {
    const Heads h = split_heads(actor_.forward(batch.next_states));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eps = rng_.normal();
      const double u = h.mean[i] + std::exp(h.log_std[i]) * eps;
      next_a[i] = squash(u, 0.0, 1.0);
      next_logp[i] = fraction_log_prob(eps, h.log_std[i], u);
    }
  }
  const Matrix next_in = critic_inputs(batch.next_states, next_a);
  const Vector q1 = targets_[0].forward(next_in).row(0).transpose();
  const Vector q2 = targets_[1].forward(next_in).row(0).transpose();
  return batch.rewards + config_.gamma * (q1.cwiseMin(q2) - config_.alpha * next_logp);
}

double SacAgent::update_critics(const Batch& batch, const NextActionFn& next_action) {
  const Eigen::Index n = batch.size();
  const Vector target = critic_targets(batch, next_action);
  const Matrix in = critic_inputs(batch.states, batch.actions);
  double loss = 0.0;
  for (size_t c = 0; c < 2; ++c) {
    DenseNet::Cache cache;
    const Matrix q = critics_[c].forward(in, cache);
    const Matrix residual = q - target.transpose();
    loss += residual.squaredNorm() / static_cast<double>(n);
    const Vector grad = critics_[c].backward(cache, 2.0 * residual / static_cast<double>(n));
    critic_opts_[c].step(critics_[c].parameters(), grad);
  }
  return 0.5 * loss;
}

double SacAgent::actor_objective(const Batch& batch, const Vector& noise, Vector* grad) const {
  const Eigen::Index n = batch.size();
  if (noise.size() != n) throw std::invalid_argument("sac: one noise draw per sample");
  DenseNet::Cache actor_cache;
  const Matrix out = actor_.forward(batch.states, actor_cache);
  const Heads h = split_heads(out);
  Vector u(n);
  Vector a(n);
  Vector logp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = h.mean[i] + std::exp(h.log_std[i]) * noise[i];
    a[i] = squash(u[i], 0.0, 1.0);
    logp[i] = fraction_log_prob(noise[i], h.log_std[i], u[i]);
  }
  const Matrix in = critic_inputs(batch.states, a);
  std::array<Vector, 2> q;
  std::array<Vector, 2> dq_da;
  for (size_t c = 0; c < 2; ++c) {
    DenseNet::Cache cache;
    q[c] = critics_[c].forward(in, cache).row(0).transpose();
    if (grad) dq_da[c] = critics_[c].input_gradient(cache, Matrix::Ones(1, n)).row(state_dim_).transpose();
  }
  const double alpha = config_.alpha;
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix grad_out(2, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const size_t pick = q[0][i] <= q[1][i] ? 0 : 1;
    loss += alpha * logp[i] - q[pick][i];
    if (!grad) continue;
    const double t = std::tanh(u[i]);
    const double sigma = std::exp(h.log_std[i]);
    const double da_du = 0.5 * (1.0 - t * t);
    const double dl_du = alpha * 2.0 * t - dq_da[pick][i] * da_du;
    grad_out(0, i) = inv_n * dl_du;
    grad_out(1, i) = h.clamped[static_cast<size_t>(i)] ? 0.0 : inv_n * (-alpha + dl_du * sigma * noise[i]);
  }
  if (grad) *grad = actor_.backward(actor_cache, grad_out);
  return loss * inv_n;
}

double SacAgent::update_actor(const Batch& batch) {
  Vector noise(batch.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng_.normal();
  Vector grad;
  const double loss = actor_objective(batch, noise, &grad);
  actor_opt_.step(actor_.parameters(), grad);
  return loss;
}

void SacAgent::update_targets() {
  const double tau = config_.tau;
  for (size_t c = 0; c < 2; ++c) {
    targets_[c].parameters() = (1.0 - tau) * targets_[c].parameters() + tau * critics_[c].parameters();
  }
}

UpdateLosses SacAgent::update(const Batch& batch) {
  UpdateLosses l;
  l.critic = update_critics(batch);
  l.actor = update_actor(batch);
  update_targets();
  return l;
}

void SacAgent::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  actor_.save(out);
  for (const auto& c : critics_) c.save(out);
  for (const auto& t : targets_) t.save(out);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void SacAgent::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: not an agent record");
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported agent version");
  DenseNet actor = DenseNet::load(in);
  std::vector<DenseNet> critics;
  std::vector<DenseNet> targets;
  for (int i = 0; i < 2; ++i) critics.push_back(DenseNet::load(in));
  for (int i = 0; i < 2; ++i) targets.push_back(DenseNet::load(in));
  if (actor.widths() != actor_.widths() || critics[0].widths() != critics_[0].widths()) {
    throw std::runtime_error("checkpoint: network shapes do not match this agent");
  }
  actor_ = std::move(actor);
  critics_ = std::move(critics);
  targets_ = std::move(targets);
  actor_opt_ = Adam(actor_.parameter_count(), config_.actor_lr);
  for (size_t c = 0; c < 2; ++c) critic_opts_[c] = Adam(critics_[c].parameter_count(), config_.critic_lr);
}

TrainSummary train(EnergyEnv& env, SacAgent& agent, std::int64_t total_steps,
                   const TrainCallback& on_step) {
  if (total_steps < 0) throw std::invalid_argument("train: negative step count");
  const SacConfig& cfg = agent.config();
  const EnvConfig& env_cfg = env.config();
  ReplayBuffer buffer(std::min<std::int64_t>(cfg.buffer_capacity, std::max<std::int64_t>(total_steps, 1)),
                      env_cfg.state_dimension());
  const std::int64_t update_start = std::max<std::int64_t>(cfg.warmup_steps, cfg.batch_size);
  TrainSummary summary;
  for (std::int64_t step = 0; step < total_steps; ++step) {
    const EnvState& st = env.state();
    const Vector features = encode_state(st, env_cfg);
    const double battery = st.battery;
    const double fraction = step < cfg.warmup_steps ? agent.rng().uniform()
                                                    : agent.select_fraction(features, false);
    const double power = battery > 0.0 ? fraction * battery / env_cfg.slot_time : 0.0;
    const Transition t = env.step(power);
    buffer.push(features, fraction, t.reward, encode_state(t.next_state, env_cfg), t.truncated);

    TrainRecord rec;
    rec.step = step;
    rec.reward = t.reward;
    rec.battery = battery;
    rec.power = t.action;
    if (buffer.size() >= update_start && (step + 1) % cfg.update_every == 0) {
      const UpdateLosses l = agent.update(buffer.sample(cfg.batch_size, agent.rng()));
      rec.critic_loss = l.critic;
      rec.actor_loss = l.actor;
      rec.updated = true;
      ++summary.updates;
    }
    summary.feasibility += check_transition(t, env_cfg);
    if (t.decision.solver_called && t.decision.solver_status != SolverStatus::converged) {
      ++summary.solver_failures;
    }
    if (t.action_clipped) ++summary.clipped_actions;
    ++summary.steps;
    if (on_step) on_step(rec, t);
  }
  return summary;
}

}  // namespace rsmalab
