#pragma once

#include <vector>

#include "rsmalab/channel.hpp"
#include "rsmalab/linalg.hpp"
#include "rsmalab/rates.hpp"
#include "rsmalab/slsqp.hpp"

namespace rsmalab {

inline constexpr double kEtaMax = 1e3;

/// Regularized channel inversion. Columns of
///   Z = H (H^H H + eta (N_t sigma_n^2 / P + sigma_e^2) I)^-1
/// normalized to unit norm. eta = 0 gives zero-forcing.
/// For P = 0 returns canonical basis vectors.
std::vector<CVector> mmse_private_directions(const CMatrix& estimated, double total_power,
                                             double eta, double noise_var, double sigma_e2);

/// Normalized columns of the pseudoinverse of H^H. Returns an empty vector
/// when H is rank deficient.
std::vector<CVector> zero_forcing_directions(const CMatrix& estimated);

/// Dominant left singular vector of H, unit norm.
CVector dominant_direction(const CMatrix& estimated);

enum class PrivateRule { mmse, zero_forcing };

/// Restrictions of the full design used by the comparison schemes.
struct DesignVariant {
  bool optimize_eta = true;
  double fixed_eta = 1.0;
  bool use_common = true;
  /// User whose private ratio is pinned to zero, or -1.
  int silent_user = -1;
  /// Design as if Phi_k = 0; rates are still reported under the true Phi_k.
  bool ignore_error_statistics = false;
  PrivateRule private_rule = PrivateRule::mmse;

  void validate(int n_users) const;
};

/// A point of the design space before renormalization.
struct DesignPoint {
  double eta = 1.0;
  double common_ratio = 0.5;
  std::vector<double> private_ratios;
  CVector common_direction;
};

struct PrecoderDecision {
  double eta = 0.0;
  PrecoderSet precoders;
  RateReport achieved_rates;
  SolverStatus solver_status = SolverStatus::converged;
  bool solver_called = false;
  int solver_iterations = 0;
  /// Value of the auxiliary common-rate variable at the returned point
  /// (equals achieved_rates.common_rate at a converged optimum).
  double auxiliary_common_rate = 0.0;

  [[nodiscard]] double sum_rate() const { return achieved_rates.sum_rate; }
  [[nodiscard]] DesignPoint design_point() const;
};

struct PrecoderOptions {
  /// Adds the mu_c = 0 and mu_c = 1 corners to the default start.
  bool multistart = false;
  /// Additional starts; the best result over all starts is returned.
  std::vector<DesignPoint> warm_starts;
  SolverOptions solver{};
};

/// eta = 1, mu_c = 0.5, mu_k = 0.5 / K, w_c = dominant left singular vector.
DesignPoint initialize_decision(const ChannelSet& channels, double total_power);

/// Re-expresses a design found at one power level for another, rescaling eta
/// so the private directions stay the same.
DesignPoint transfer_design(const DesignPoint& point, const ChannelSet& channels, double from_power,
                            double to_power, double noise_var);

/// Builds the precoders and true-model rates of a design point.
PrecoderDecision evaluate_design(const ChannelSet& channels, double total_power, double noise_var,
                                 const DesignPoint& point, const DesignVariant& variant = {});

/// Maximizes the sum rate over eta, power ratios and the common direction.
/// The min over common rates is lifted into an auxiliary variable r_c with
/// R_{c,k} - r_c >= 0. Never throws on solver failure: the best evaluated point
/// is returned with the final solver status.
PrecoderDecision optimize_precoder(const ChannelSet& channels, double total_power, double noise_var,
                                   const DesignVariant& variant = {},
                                   const PrecoderOptions& options = {});

/// Length of the solver decision vector for a variant (including r_c).
int decision_dimension(int n_users, int n_tx, const DesignVariant& variant);

}  // namespace rsmalab
