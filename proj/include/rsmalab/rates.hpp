#pragma once

#include <span>
#include <vector>

#include "rsmalab/channel.hpp"
#include "rsmalab/linalg.hpp"

namespace rsmalab {

/// Common and private precoders together with their power-ratio / unit-direction
/// factorization: p_c = sqrt(P mu_c) w_c, p_k = sqrt(P mu_k) w_k.
struct PrecoderSet {
  double total_power = 0.0;
  double common_ratio = 0.0;
  std::vector<double> private_ratios;
  CVector common_direction;
  std::vector<CVector> private_directions;
  CVector common;
  std::vector<CVector> privates;

  [[nodiscard]] int n_users() const { return static_cast<int>(privates.size()); }
  /// ||p_c||^2 + sum_k ||p_k||^2
  [[nodiscard]] double radiated_power() const;
};

/// Builds a PrecoderSet. Ratios must be nonnegative and sum to one within 1e-6,
/// directions must be nonzero and unit-norm within 1e-6; both are renormalized
/// to machine precision before assembly. Throws std::invalid_argument otherwise.
PrecoderSet assemble(double total_power, double common_ratio, std::span<const double> private_ratios,
                     const CVector& common_direction, std::span<const CVector> private_directions);

/// Rates in bits/s/Hz.
struct RateReport {
  std::vector<double> common_rates;  // R_{c,k}
  double common_rate = 0.0;          // min_k R_{c,k}
  std::vector<double> private_rates; // R_k
  double sum_rate = 0.0;             // R_c + sum_k R_k
};

/// Applies the min rule and forms the sum rate from per-user rates.
RateReport combine_rates(std::vector<double> common_rates, std::vector<double> private_rates);

/// Rate at which user k decodes the common stream, treating all private
/// streams as interference and the estimation error through p^H Phi_k p.
double common_rate_k(int user, const ChannelSet& channels, const PrecoderSet& precoders,
                     double noise_var);

/// Rate of user k's private stream after removing the common stream.
double private_rate_k(int user, const ChannelSet& channels, const PrecoderSet& precoders,
                      double noise_var);

RateReport sum_rate(const ChannelSet& channels, const PrecoderSet& precoders, double noise_var);

/// Same expressions evaluated directly on raw precoders (no factorization needed).
RateReport evaluate_rates(const ChannelSet& channels, const CVector& common,
                          std::span<const CVector> privates, double noise_var);

/// Diagnostic only: rates a genie receiver would see on the true channels with
/// no estimation-error term. Never used as an optimization objective.
RateReport realized_rates(const ChannelSet& channels, const PrecoderSet& precoders,
                          double noise_var);

}  // namespace rsmalab
