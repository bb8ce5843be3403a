#include "rsmalab/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsmalab {
namespace {

constexpr double kInputTolerance = 1e-6;

double gain(const CVector& h, const CVector& p) { return std::norm(h.dot(p)); }

double error_power(const CMatrix& phi, const CVector& p) {
  return std::max(0.0, (p.adjoint() * phi * p)(0, 0).real());
}

double log2_1p(double snr) { return std::log1p(snr) / std::numbers::ln2; }

struct StreamPowers {
  double common_signal;
  std::vector<double> private_gains;  // |h_k^H p_j|^2, j = 0..K-1
  double error_term;
};

StreamPowers stream_powers(const CVector& h, const CMatrix& phi, const CVector& common,
                           std::span<const CVector> privates) {
  StreamPowers out;
  out.common_signal = gain(h, common);
  out.error_term = error_power(phi, common);
  out.private_gains.reserve(privates.size());
  for (const auto& p : privates) {
    out.private_gains.push_back(gain(h, p));
    out.error_term += error_power(phi, p);
  }
  return out;
}

double common_rate_from(const StreamPowers& s, double noise_var) {
  double interference = s.error_term + noise_var;
  for (double g : s.private_gains) interference += g;
  return log2_1p(s.common_signal / interference);
}

double private_rate_from(const StreamPowers& s, size_t k, double noise_var) {
  double interference = s.error_term + noise_var;
  for (size_t j = 0; j < s.private_gains.size(); ++j) {
    if (j != k) interference += s.private_gains[j];
  }
  return log2_1p(s.private_gains[k] / interference);
}

void check_noise(double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("rates: noise variance must be > 0");
}

RateReport rates_on(std::span<const CVector> receive_channels, std::span<const CMatrix> covariances,
                    const CVector& common, std::span<const CVector> privates, double noise_var) {
  check_noise(noise_var);
  RateReport report;
  const size_t k_users = receive_channels.size();
  report.common_rates.resize(k_users);
  report.private_rates.resize(k_users);
  for (size_t k = 0; k < k_users; ++k) {
    const StreamPowers s = stream_powers(receive_channels[k], covariances[k], common, privates);
    report.common_rates[k] = common_rate_from(s, noise_var);
    report.private_rates[k] = private_rate_from(s, k, noise_var);
  }
  return combine_rates(std::move(report.common_rates), std::move(report.private_rates));
}

}  // namespace

RateReport combine_rates(std::vector<double> common_rates, std::vector<double> private_rates) {
  RateReport report;
  report.common_rates = std::move(common_rates);
  report.private_rates = std::move(private_rates);
  report.common_rate = report.common_rates.empty()
                           ? 0.0
                           : *std::min_element(report.common_rates.begin(), report.common_rates.end());
  report.sum_rate = report.common_rate;
  for (double r : report.private_rates) report.sum_rate += r;
  return report;
}

double PrecoderSet::radiated_power() const {
  double total = common.squaredNorm();
  for (const auto& p : privates) total += p.squaredNorm();
  return total;
}

PrecoderSet assemble(double total_power, double common_ratio, std::span<const double> private_ratios,
                     const CVector& common_direction, std::span<const CVector> private_directions) {
  if (!(total_power >= 0.0)) throw std::invalid_argument("assemble: total power must be >= 0");
  if (private_ratios.size() != private_directions.size()) {
    throw std::invalid_argument("assemble: ratio/direction count mismatch");
  }
  double ratio_sum = common_ratio;
  if (common_ratio < 0.0) throw std::invalid_argument("assemble: negative common ratio");
  for (double mu : private_ratios) {
    if (mu < 0.0) throw std::invalid_argument("assemble: negative private ratio");
    ratio_sum += mu;
  }
  if (std::abs(ratio_sum - 1.0) > kInputTolerance) {
    throw std::invalid_argument("assemble: power ratios must sum to 1");
  }
  auto unit = [](const CVector& w) {
    const double n = w.norm();
    if (n == 0.0) throw std::invalid_argument("assemble: zero direction vector");
    if (std::abs(n - 1.0) > kInputTolerance) {
      throw std::invalid_argument("assemble: direction vector is not unit-norm");
    }
    return CVector(w / n);
  };

  PrecoderSet set;
  set.total_power = total_power;
  set.common_ratio = common_ratio / ratio_sum;
  set.common_direction = unit(common_direction);
  set.common = std::sqrt(total_power * set.common_ratio) * set.common_direction;
  for (size_t k = 0; k < private_ratios.size(); ++k) {
    const double mu = private_ratios[k] / ratio_sum;
    set.private_ratios.push_back(mu);
    set.private_directions.push_back(unit(private_directions[k]));
    set.privates.push_back(std::sqrt(total_power * mu) * set.private_directions.back());
  }
  return set;
}

double common_rate_k(int user, const ChannelSet& channels, const PrecoderSet& precoders,
                     double noise_var) {
  check_noise(noise_var);
  const auto k = static_cast<size_t>(user);
  const StreamPowers s = stream_powers(channels.estimated_channels.at(k),
                                       channels.error_covariance.at(k), precoders.common,
                                       precoders.privates);
  return common_rate_from(s, noise_var);
}

double private_rate_k(int user, const ChannelSet& channels, const PrecoderSet& precoders,
                      double noise_var) {
  check_noise(noise_var);
  const auto k = static_cast<size_t>(user);
  const StreamPowers s = stream_powers(channels.estimated_channels.at(k),
                                       channels.error_covariance.at(k), precoders.common,
                                       precoders.privates);
  return private_rate_from(s, k, noise_var);
}

RateReport sum_rate(const ChannelSet& channels, const PrecoderSet& precoders, double noise_var) {
  return evaluate_rates(channels, precoders.common, precoders.privates, noise_var);
}

RateReport evaluate_rates(const ChannelSet& channels, const CVector& common,
                          std::span<const CVector> privates, double noise_var) {
  return rates_on(channels.estimated_channels, channels.error_covariance, common, privates,
                  noise_var);
}

RateReport realized_rates(const ChannelSet& channels, const PrecoderSet& precoders,
                          double noise_var) {
  std::vector<CMatrix> zero;
  for (const auto& h : channels.true_channels) zero.push_back(CMatrix::Zero(h.size(), h.size()));
  return rates_on(channels.true_channels, zero, precoders.common, precoders.privates, noise_var);
}

}  // namespace rsmalab
