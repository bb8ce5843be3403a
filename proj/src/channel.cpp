#include "rsmalab/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsmalab {

void RicianParams::validate() const {
  if (!(kappa >= 0.0)) throw std::invalid_argument("rician: kappa must be >= 0");
  if (!(omega > 0.0)) throw std::invalid_argument("rician: omega must be > 0");
  if (n_tx < 1) throw std::invalid_argument("rician: n_tx must be >= 1");
  if (n_users < 1) throw std::invalid_argument("rician: n_users must be >= 1");
}

double RicianParams::los_mean() const { return std::sqrt(omega * kappa / (1.0 + kappa)); }

double RicianParams::scatter_power() const { return omega / (1.0 + kappa); }

CMatrix ChannelSet::estimated_matrix() const {
  CMatrix h(n_tx(), n_users());
  for (int k = 0; k < n_users(); ++k) h.col(k) = estimated_channels[static_cast<size_t>(k)];
  return h;
}

ChannelSet ChannelSet::without_error_statistics() const {
  ChannelSet out = *this;
  for (auto& v : out.error_variance) v = 0.0;
  for (auto& phi : out.error_covariance) phi.setZero();
  return out;
}

std::vector<CVector> sample_channels(const RicianParams& params, const RandomStream& rng) {
  const double s = params.los_mean();
  const double sigma = std::sqrt(0.5 * params.scatter_power());
  std::vector<CVector> channels;
  channels.reserve(static_cast<size_t>(params.n_users));
  for (int k = 0; k < params.n_users; ++k) {
    RandomStream user_rng = rng.split(static_cast<std::uint64_t>(k));
    CVector h(params.n_tx);
    for (int n = 0; n < params.n_tx; ++n) {
      const double re = user_rng.normal(s, sigma);
      const double im = user_rng.normal(0.0, sigma);
      h[n] = {re, im};
    }
    channels.push_back(std::move(h));
  }
  return channels;
}

ChannelSet corrupt_channels(std::span<const CVector> true_channels, double sigma_e2,
                            const RicianParams& params, const RandomStream& rng) {
  if (!(sigma_e2 >= 0.0) || !(sigma_e2 < params.scatter_power())) {
    throw std::invalid_argument("corrupt_channels: sigma_e2 must lie in [0, " +
                                std::to_string(params.scatter_power()) + ")");
  }
  const double sigma = std::sqrt(0.5 * sigma_e2);
  ChannelSet set;
  for (size_t k = 0; k < true_channels.size(); ++k) {
    const CVector& h = true_channels[k];
    RandomStream user_rng = rng.split(k);
    CVector e(h.size());
    for (Eigen::Index n = 0; n < h.size(); ++n) {
      const double re = user_rng.normal(0.0, sigma);
      const double im = user_rng.normal(0.0, sigma);
      e[n] = {re, im};
    }
    set.true_channels.push_back(h);
    set.estimated_channels.push_back(h - e);
    set.errors.push_back(std::move(e));
    set.error_variance.push_back(sigma_e2);
    set.error_covariance.push_back(sigma_e2 * CMatrix::Identity(h.size(), h.size()));
  }
  return set;
}

ChannelSet make_channel_set(std::span<const CVector> estimates, double sigma_e2) {
  ChannelSet set;
  for (const auto& h : estimates) {
    set.true_channels.push_back(h);
    set.estimated_channels.push_back(h);
    set.errors.push_back(CVector::Zero(h.size()));
    set.error_variance.push_back(sigma_e2);
    set.error_covariance.push_back(sigma_e2 * CMatrix::Identity(h.size(), h.size()));
  }
  return set;
}

}  // namespace rsmalab
