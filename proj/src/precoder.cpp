#include "rsmalab/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rsmalab {
namespace {

constexpr double kRidge = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<CVector> normalized_columns(const CMatrix& z) {
  std::vector<CVector> out;
  out.reserve(static_cast<size_t>(z.cols()));
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const double n = z.col(k).norm();
    if (n > 0.0) {
      out.emplace_back(z.col(k) / n);
    } else {
      out.emplace_back(CVector::Unit(z.rows(), k % z.rows()));
    }
  }
  return out;
}

std::vector<CVector> canonical_directions(Eigen::Index n_tx, Eigen::Index n_users) {
  std::vector<CVector> out;
  for (Eigen::Index k = 0; k < n_users; ++k) out.emplace_back(CVector::Unit(n_tx, k % n_tx));
  return out;
}

double mean_error_variance(const ChannelSet& channels) {
  if (channels.error_variance.empty()) return 0.0;
  return std::accumulate(channels.error_variance.begin(), channels.error_variance.end(), 0.0) /
         static_cast<double>(channels.error_variance.size());
}

// Index map of the solver decision vector.
struct Layout {
  int eta = -1;
  std::vector<int> priv;  // -1 for a pinned user
  int common = -1;
  int w = -1;  // 2 N_t entries: real parts then imaginary parts
  int rc = -1;
  int size = 0;
  int n_tx = 0;
};

Layout make_layout(int n_users, int n_tx, const DesignVariant& v) {
  Layout l;
  l.n_tx = n_tx;
  int next = 0;
  if (v.optimize_eta && v.private_rule == PrivateRule::mmse) l.eta = next++;
  l.priv.assign(static_cast<size_t>(n_users), -1);
  for (int k = 0; k < n_users; ++k) {
    if (k != v.silent_user) l.priv[static_cast<size_t>(k)] = next++;
  }
  if (v.use_common) {
    l.common = next++;
    l.w = next;
    next += 2 * n_tx;
    l.rc = next++;
  }
  l.size = next;
  return l;
}

// Shared machinery for one design problem.
class Design {
 public:
  Design(const ChannelSet& channels, double total_power, double noise_var, const DesignVariant& v)
      : channels_(channels),
        design_channels_(v.ignore_error_statistics ? channels.without_error_statistics() : channels),
        h_(channels.estimated_matrix()),
        power_(total_power),
        noise_(noise_var),
        variant_(v),
        layout_(make_layout(channels.n_users(), channels.n_tx(), v)),
        fallback_w_(dominant_direction(h_)) {
    design_sigma_e2_ = v.ignore_error_statistics ? 0.0 : mean_error_variance(channels);
    if (v.private_rule == PrivateRule::zero_forcing) {
      fixed_dirs_ = zero_forcing_directions(h_);
      if (fixed_dirs_.empty()) {
        fixed_dirs_ = mmse_private_directions(h_, power_, 1.0, noise_, design_sigma_e2_);
      }
    }
  }

  const Layout& layout() const { return layout_; }

  struct Point {
    double eta;
    double common_ratio;
    std::vector<double> private_ratios;
    CVector w_c;
    std::vector<CVector> directions;
  };

  Point decode(const Vector& x) const {
    Point p;
    const int k_users = channels_.n_users();
    p.eta = layout_.eta >= 0 ? x[layout_.eta] : variant_.fixed_eta;
    p.private_ratios.assign(static_cast<size_t>(k_users), 0.0);
    double total = 0.0;
    for (int k = 0; k < k_users; ++k) {
      const int i = layout_.priv[static_cast<size_t>(k)];
      if (i >= 0) p.private_ratios[static_cast<size_t>(k)] = std::max(0.0, x[i]);
      total += p.private_ratios[static_cast<size_t>(k)];
    }
    p.common_ratio = layout_.common >= 0 ? std::max(0.0, x[layout_.common]) : 0.0;
    total += p.common_ratio;
    if (total > 0.0) {
      for (auto& r : p.private_ratios) r /= total;
      p.common_ratio /= total;
    } else {
      int free = (layout_.common >= 0) ? 1 : 0;
      for (int i : layout_.priv) free += i >= 0 ? 1 : 0;
      for (int k = 0; k < k_users; ++k) {
        if (layout_.priv[static_cast<size_t>(k)] >= 0) p.private_ratios[static_cast<size_t>(k)] = 1.0 / free;
      }
      if (layout_.common >= 0) p.common_ratio = 1.0 / free;
    }
    if (layout_.w >= 0) {
      const int n = layout_.n_tx;
      p.w_c.resize(n);
      for (int i = 0; i < n; ++i) p.w_c[i] = cdouble(x[layout_.w + i], x[layout_.w + n + i]);
      const double norm = p.w_c.norm();
      p.w_c = norm > 1e-12 ? CVector(p.w_c / norm) : fallback_w_;
    } else {
      p.w_c = fallback_w_;
    }
    p.directions = directions(p.eta);
    return p;
  }

  std::vector<CVector> directions(double eta) const {
    if (!fixed_dirs_.empty()) return fixed_dirs_;
    return mmse_private_directions(h_, power_, eta, noise_, design_sigma_e2_);
  }

  static RateReport rates_of(const ChannelSet& ch, const Point& p, double power, double noise) {
    const CVector common = std::sqrt(power * p.common_ratio) * p.w_c;
    std::vector<CVector> privates;
    privates.reserve(p.directions.size());
    for (size_t k = 0; k < p.directions.size(); ++k) {
      privates.emplace_back(std::sqrt(power * p.private_ratios[k]) * p.directions[k]);
    }
    return evaluate_rates(ch, common, privates, noise);
  }

  // [objective, R_ck - r_c ..., 1 - |w|^2] for the solver.
  Vector values(const Vector& x) const {
    const Point p = decode(x);
    const RateReport r = rates_of(design_channels_, p, power_, noise_);
    const int k_users = channels_.n_users();
    const bool common = layout_.rc >= 0;
    Vector out(common ? 2 + k_users : 1);
    double priv = 0.0;
    for (double v : r.private_rates) priv += v;
    if (common) {
      const double rc = x[layout_.rc];
      out[0] = -(rc + priv);
      for (int k = 0; k < k_users; ++k) out[1 + k] = r.common_rates[static_cast<size_t>(k)] - rc;
      out[1 + k_users] = 1.0 - x.segment(layout_.w, 2 * layout_.n_tx).squaredNorm();
    } else {
      out[0] = -priv;
    }
    return out;
  }

  PrecoderDecision decision(const Vector& x) const {
    const Point p = decode(x);
    PrecoderDecision d;
    d.eta = p.eta;
    d.precoders = assemble(power_, p.common_ratio, p.private_ratios, p.w_c, p.directions);
    d.achieved_rates = sum_rate(channels_, d.precoders, noise_);
    d.auxiliary_common_rate = layout_.rc >= 0 ? x[layout_.rc] : 0.0;
    return d;
  }

  Vector encode(const DesignPoint& dp) const {
    Vector x = Vector::Zero(layout_.size);
    if (layout_.eta >= 0) x[layout_.eta] = std::clamp(dp.eta, 0.0, kEtaMax);
    for (size_t k = 0; k < layout_.priv.size(); ++k) {
      if (layout_.priv[k] >= 0 && k < dp.private_ratios.size()) {
        x[layout_.priv[k]] = std::clamp(dp.private_ratios[k], 0.0, 1.0);
      }
    }
    if (layout_.common >= 0) {
      x[layout_.common] = std::clamp(dp.common_ratio, 0.0, 1.0);
      const int n = layout_.n_tx;
      CVector w = dp.common_direction.size() == n ? dp.common_direction : fallback_w_;
      const double norm = w.norm();
      if (norm > 1e-12) {
        w /= norm;
      } else {
        w = fallback_w_;
      }
      for (int i = 0; i < n; ++i) {
        x[layout_.w + i] = w[i].real();
        x[layout_.w + n + i] = w[i].imag();
      }
      const RateReport r = rates_of(design_channels_, decode(x), power_, noise_);
      x[layout_.rc] = r.common_rate;
    }
    return x;
  }

  void bounds(Vector& lower, Vector& upper) const {
    lower = Vector::Zero(layout_.size);
    upper = Vector::Ones(layout_.size);
    if (layout_.eta >= 0) upper[layout_.eta] = kEtaMax;
    if (layout_.w >= 0) lower.segment(layout_.w, 2 * layout_.n_tx).setConstant(-1.0);
    if (layout_.rc >= 0) upper[layout_.rc] = kInf;
  }

 private:
  const ChannelSet& channels_;
  ChannelSet design_channels_;
  CMatrix h_;
  double power_;
  double noise_;
  DesignVariant variant_;
  Layout layout_;
  CVector fallback_w_;
  double design_sigma_e2_ = 0.0;
  std::vector<CVector> fixed_dirs_;
};

// Evaluates objective and constraints together and differentiates them with
// one shared stencil, caching the most recent point.
class JointEvaluator {
 public:
  JointEvaluator(const Design& design, double step, Vector lower, Vector upper)
      : design_(design), h_(step), lower_(std::move(lower)), upper_(std::move(upper)) {}

  double value(const Vector& x, Eigen::Index row) {
    if (!(value_ok_ && x == value_x_)) {
      value_x_ = x;
      values_ = design_.values(x);
      value_ok_ = true;
    }
    return values_[row];
  }

  Vector gradient(const Vector& x, Eigen::Index row) {
    if (!(jac_ok_ && x == jac_x_)) {
      jac_x_ = x;
      jacobian(x);
      jac_ok_ = true;
    }
    return jac_.row(row).transpose();
  }

 private:
  void jacobian(const Vector& x) {
    const Eigen::Index n = x.size();
    const Vector base = design_.values(x);
    jac_.resize(base.size(), n);
    Vector probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x[i];
      const bool below = xi - h_ >= lower_[i];
      const bool above = xi + h_ <= upper_[i];
      if (below && above) {
        probe[i] = xi + h_;
        const Vector fp = design_.values(probe);
        probe[i] = xi - h_;
        jac_.col(i) = (fp - design_.values(probe)) / (2.0 * h_);
      } else if (above) {
        probe[i] = xi + h_;
        jac_.col(i) = (design_.values(probe) - base) / h_;
      } else if (below) {
        probe[i] = xi - h_;
        jac_.col(i) = (base - design_.values(probe)) / h_;
      } else {
        jac_.col(i).setZero();
      }
      probe[i] = xi;
    }
  }

  const Design& design_;
  double h_;
  Vector lower_;
  Vector upper_;
  bool value_ok_ = false;
  Vector value_x_;
  Vector values_;
  bool jac_ok_ = false;
  Vector jac_x_;
  Matrix jac_;
};

PrecoderDecision zero_decision(const ChannelSet& channels, double noise_var) {
  const int k_users = channels.n_users();
  const int n_tx = channels.n_tx();
  PrecoderDecision d;
  d.eta = 1.0;
  std::vector<double> ratios(static_cast<size_t>(k_users), 0.5 / k_users);
  d.precoders = assemble(0.0, 0.5, ratios, CVector::Unit(n_tx, 0), canonical_directions(n_tx, k_users));
  d.achieved_rates = sum_rate(channels, d.precoders, noise_var);
  return d;
}

}  // namespace

std::vector<CVector> mmse_private_directions(const CMatrix& estimated, double total_power,
                                             double eta, double noise_var, double sigma_e2) {
  if (!(total_power >= 0.0)) throw std::invalid_argument("mmse: total power must be >= 0");
  if (!(eta >= 0.0)) throw std::invalid_argument("mmse: eta must be >= 0");
  if (total_power == 0.0) return canonical_directions(estimated.rows(), estimated.cols());
  const auto k = estimated.cols();
  const double reg = eta * (static_cast<double>(estimated.rows()) * noise_var / total_power + sigma_e2);
  CMatrix gram = estimated.adjoint() * estimated;
  gram.diagonal().array() += reg;
  Eigen::PartialPivLU<CMatrix> lu(gram);
  if (!(std::abs(lu.determinant()) > 1e-300) || !std::isfinite(std::abs(lu.determinant()))) {
    gram.diagonal().array() += kRidge;
    lu.compute(gram);
  }
  CMatrix z = estimated * lu.solve(CMatrix::Identity(k, k));
  if (!z.allFinite()) {
    gram.diagonal().array() += kRidge;
    z = estimated * gram.fullPivLu().solve(CMatrix::Identity(k, k));
  }
  return normalized_columns(z);
}

std::vector<CVector> zero_forcing_directions(const CMatrix& estimated) {
  Eigen::JacobiSVD<CMatrix> svd(estimated);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || estimated.cols() > estimated.rows() ||
      s[s.size() - 1] <= 1e-10 * std::max(1.0, s[0])) {
    return {};
  }
  const CMatrix gram = estimated.adjoint() * estimated;
  return normalized_columns(estimated * gram.inverse());
}

CVector dominant_direction(const CMatrix& estimated) {
  Eigen::JacobiSVD<CMatrix> svd(estimated, Eigen::ComputeThinU);
  CVector u = svd.matrixU().col(0);
  const double n = u.norm();
  if (!(n > 0.0)) return CVector::Unit(estimated.rows(), 0);
  return u / n;
}

void DesignVariant::validate(int n_users) const {
  if (!(fixed_eta >= 0.0 && fixed_eta <= kEtaMax)) {
    throw std::invalid_argument("design: fixed eta outside [0, 1000]");
  }
  if (silent_user < -1 || silent_user >= n_users) {
    throw std::invalid_argument("design: silent user index out of range");
  }
  if (silent_user >= 0 && !use_common && n_users == 1) {
    throw std::invalid_argument("design: no stream left to carry power");
  }
}

int decision_dimension(int n_users, int n_tx, const DesignVariant& variant) {
  return make_layout(n_users, n_tx, variant).size;
}

DesignPoint PrecoderDecision::design_point() const {
  DesignPoint p;
  p.eta = eta;
  p.common_ratio = precoders.common_ratio;
  p.private_ratios = precoders.private_ratios;
  p.common_direction = precoders.common_direction;
  return p;
}

DesignPoint initialize_decision(const ChannelSet& channels, double /*total_power*/) {
  DesignPoint p;
  const int k_users = channels.n_users();
  p.eta = 1.0;
  p.common_ratio = 0.5;
  p.private_ratios.assign(static_cast<size_t>(k_users), 0.5 / k_users);
  p.common_direction = dominant_direction(channels.estimated_matrix());
  return p;
}

DesignPoint transfer_design(const DesignPoint& point, const ChannelSet& channels, double from_power,
                            double to_power, double noise_var) {
  DesignPoint out = point;
  if (from_power > 0.0 && to_power > 0.0) {
    const double sigma_e2 = mean_error_variance(channels);
    const double n = channels.n_tx() * noise_var;
    out.eta = std::min(kEtaMax, point.eta * (n / from_power + sigma_e2) / (n / to_power + sigma_e2));
  }
  return out;
}

PrecoderDecision evaluate_design(const ChannelSet& channels, double total_power, double noise_var,
                                 const DesignPoint& point, const DesignVariant& variant) {
  variant.validate(channels.n_users());
  if (!(total_power >= 0.0)) throw std::invalid_argument("precoder: total power must be >= 0");
  if (total_power == 0.0) return zero_decision(channels, noise_var);
  const Design design(channels, total_power, noise_var, variant);
  return design.decision(design.encode(point));
}

PrecoderDecision optimize_precoder(const ChannelSet& channels, double total_power, double noise_var,
                                   const DesignVariant& variant, const PrecoderOptions& options) {
  variant.validate(channels.n_users());
  if (!(total_power >= 0.0)) throw std::invalid_argument("precoder: total power must be >= 0");
  if (!(noise_var > 0.0)) throw std::invalid_argument("precoder: noise variance must be > 0");
  if (channels.n_users() < 1) throw std::invalid_argument("precoder: no users");
  if (total_power == 0.0) return zero_decision(channels, noise_var);

  const Design design(channels, total_power, noise_var, variant);
  const int k_users = channels.n_users();

  std::vector<DesignPoint> starts{initialize_decision(channels, total_power)};
  if (options.multistart) {
    DesignPoint private_only = starts.front();
    private_only.eta = 0.0;
    private_only.common_ratio = 0.0;
    private_only.private_ratios.assign(static_cast<size_t>(k_users), 1.0 / k_users);
    starts.push_back(private_only);
    DesignPoint common_only = starts.front();
    common_only.common_ratio = 1.0;
    common_only.private_ratios.assign(static_cast<size_t>(k_users), 0.0);
    starts.push_back(common_only);
  }
  starts.insert(starts.end(), options.warm_starts.begin(), options.warm_starts.end());

  Vector lower;
  Vector upper;
  design.bounds(lower, upper);
  JointEvaluator eval(design, options.solver.gradient_step, lower, upper);

  NlpProblem problem;
  problem.dimension = design.layout().size;
  problem.lower = lower;
  problem.upper = upper;
  problem.objective = [&eval](const Vector& x) { return eval.value(x, 0); };
  problem.objective_gradient = [&eval](const Vector& x) { return eval.gradient(x, 0); };
  if (design.layout().rc >= 0) {
    for (Eigen::Index row = 1; row <= k_users + 1; ++row) {
      problem.constraints.push_back({[&eval, row](const Vector& x) { return eval.value(x, row); },
                                     [&eval, row](const Vector& x) { return eval.gradient(x, row); }});
    }
  }

  PrecoderDecision best;
  bool have_best = false;
  auto consider = [&](PrecoderDecision d) {
    if (!have_best || d.sum_rate() > best.sum_rate()) {
      best = std::move(d);
      have_best = true;
    }
  };

  int iterations = 0;
  for (const DesignPoint& start : starts) {
    const Vector x0 = design.encode(start);
    const NlpSolution sol = solve(problem, x0, options.solver);
    iterations += sol.iterations;
    for (const Vector* x : {&x0, &sol.x}) {
      PrecoderDecision d = design.decision(*x);
      d.solver_status = sol.status;
      consider(std::move(d));
    }
  }
  best.solver_called = true;
  best.solver_iterations = iterations;
  return best;
}

}  // namespace rsmalab
