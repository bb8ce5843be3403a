#pragma once

#include <span>
#include <vector>

#include "rsmalab/linalg.hpp"
#include "rsmalab/random.hpp"

namespace rsmalab {

/// Rician shape/scale for an i.i.d.-per-element MU-MISO channel.
///
/// Each complex entry is x + jy with x ~ N(s, sigma_h^2), y ~ N(0, sigma_h^2),
/// where kappa = s^2 / (2 sigma_h^2) and omega = s^2 + 2 sigma_h^2.
struct RicianParams {
  double kappa = 3.0;
  double omega = 1.0;
  int n_tx = 2;
  int n_users = 2;

  void validate() const;
  /// s, the line-of-sight mean of the real part.
  [[nodiscard]] double los_mean() const;
  /// 2 sigma_h^2, total power of the scattered component.
  [[nodiscard]] double scatter_power() const;
};

/// True channels, estimates and error statistics for one slot.
struct ChannelSet {
  std::vector<CVector> true_channels;
  std::vector<CVector> estimated_channels;
  std::vector<CVector> errors;
  std::vector<double> error_variance;
  std::vector<CMatrix> error_covariance;

  [[nodiscard]] int n_users() const { return static_cast<int>(estimated_channels.size()); }
  [[nodiscard]] int n_tx() const {
    return estimated_channels.empty() ? 0 : static_cast<int>(estimated_channels.front().size());
  }
  /// Estimated channel matrix with users as columns (N_t x K).
  [[nodiscard]] CMatrix estimated_matrix() const;
  /// Copy with all error statistics zeroed; the estimates are kept.
  [[nodiscard]] ChannelSet without_error_statistics() const;
};

/// Draws K channel vectors. User k consumes rng.split(k).
std::vector<CVector> sample_channels(const RicianParams& params, const RandomStream& rng);

/// Draws i.i.d. CN(0, sigma_e2) errors and forms h_hat = h - e.
/// Requires 0 <= sigma_e2 < params.scatter_power(). User k consumes rng.split(k).
ChannelSet corrupt_channels(std::span<const CVector> true_channels, double sigma_e2,
                            const RicianParams& params, const RandomStream& rng);

/// Builds a ChannelSet directly from estimates and a uniform error variance
/// (true channels are set equal to the estimates). Handy for fixed test inputs.
ChannelSet make_channel_set(std::span<const CVector> estimates, double sigma_e2);

}  // namespace rsmalab
