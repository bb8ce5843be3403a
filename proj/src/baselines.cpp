#include "rsmalab/baselines.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>

namespace rsmalab {
namespace {

constexpr std::array<std::pair<SchemeId, std::string_view>, 8> kTokens{{
    {SchemeId::drl_rsma, "drl-rsma"},
    {SchemeId::drl_rsma_no_info, "drl-rsma-no-info"},
    {SchemeId::drl_rsma_eta1, "drl-rsma-eta1"},
    {SchemeId::drl_sdma, "drl-sdma"},
    {SchemeId::drl_noma, "drl-noma"},
    {SchemeId::greedy_rsma, "greedy-rsma"},
    {SchemeId::greedy_sdma, "greedy-sdma"},
    {SchemeId::greedy_noma, "greedy-noma"},
}};

}  // namespace

std::string_view to_string(SchemeId id) {
  for (const auto& [scheme, token] : kTokens) {
    if (scheme == id) return token;
  }
  return "unknown";
}

std::optional<SchemeId> parse_scheme(std::string_view token) {
  for (const auto& [scheme, name] : kTokens) {
    if (name == token) return scheme;
  }
  return std::nullopt;
}

PowerPolicy power_policy(SchemeId id) {
  switch (id) {
    case SchemeId::greedy_rsma:
    case SchemeId::greedy_sdma:
    case SchemeId::greedy_noma: return PowerPolicy::greedy;
    default: return PowerPolicy::learned;
  }
}

PrecoderRule precoder_rule(SchemeId id) {
  switch (id) {
    case SchemeId::drl_rsma_no_info: return PrecoderRule::rsma_no_info;
    case SchemeId::drl_rsma_eta1: return PrecoderRule::rsma_fixed_eta;
    case SchemeId::drl_sdma:
    case SchemeId::greedy_sdma: return PrecoderRule::sdma;
    case SchemeId::drl_noma:
    case SchemeId::greedy_noma: return PrecoderRule::noma;
    default: return PrecoderRule::rsma;
  }
}

double greedy_power(double battery, double slot_time) {
  if (!(slot_time > 0.0)) throw std::invalid_argument("greedy: slot time must be > 0");
  return std::max(0.0, battery) / slot_time;
}

int noma_weak_user(const ChannelSet& channels) {
  if (channels.n_users() != 2) throw std::invalid_argument("noma: only K = 2 is supported");
  const double n0 = channels.estimated_channels[0].squaredNorm();
  const double n1 = channels.estimated_channels[1].squaredNorm();
  return n0 < n1 ? 0 : 1;
}

DesignVariant design_variant(PrecoderRule rule, const ChannelSet& channels) {
  DesignVariant v;
  switch (rule) {
    case PrecoderRule::rsma: break;
    case PrecoderRule::rsma_no_info: v.ignore_error_statistics = true; break;
    case PrecoderRule::rsma_fixed_eta:
      v.optimize_eta = false;
      v.fixed_eta = 1.0;
      break;
    case PrecoderRule::sdma:
      v.use_common = false;
      v.private_rule = PrivateRule::zero_forcing;
      break;
    case PrecoderRule::noma: v.silent_user = noma_weak_user(channels); break;
  }
  return v;
}

PrecoderDecision design_precoder(PrecoderRule rule, const ChannelSet& channels, double total_power,
                                 double noise_var, const PrecoderOptions& options) {
  return optimize_precoder(channels, total_power, noise_var, design_variant(rule, channels), options);
}

DesignPoint rsma_equivalent(const PrecoderDecision& decision, PrecoderRule rule,
                            const ChannelSet& channels, double total_power, double noise_var) {
  DesignPoint p = decision.design_point();
  if (rule == PrecoderRule::sdma && !zero_forcing_directions(channels.estimated_matrix()).empty()) {
    p.eta = 0.0;
  }
  if (rule == PrecoderRule::rsma_no_info && total_power > 0.0) {
    double sigma_e2 = 0.0;
    for (double v : channels.error_variance) sigma_e2 += v;
    if (!channels.error_variance.empty()) sigma_e2 /= static_cast<double>(channels.error_variance.size());
    const double a = channels.n_tx() * noise_var / total_power;
    p.eta = decision.eta * a / (a + sigma_e2);
  }
  return p;
}

PrecoderDecision sdma_precoder(const ChannelSet& channels, double total_power, double noise_var,
                               const PrecoderOptions& options) {
  return design_precoder(PrecoderRule::sdma, channels, total_power, noise_var, options);
}

PrecoderDecision noma_precoder(const ChannelSet& channels, double total_power, double noise_var,
                               const PrecoderOptions& options) {
  return design_precoder(PrecoderRule::noma, channels, total_power, noise_var, options);
}

PrecoderDecision no_info_precoder(const ChannelSet& channels, double total_power, double noise_var,
                                  const PrecoderOptions& options) {
  return design_precoder(PrecoderRule::rsma_no_info, channels, total_power, noise_var, options);
}

PrecoderDecision fixed_eta_precoder(const ChannelSet& channels, double total_power,
                                    double noise_var, const PrecoderOptions& options) {
  return design_precoder(PrecoderRule::rsma_fixed_eta, channels, total_power, noise_var, options);
}

}  // namespace rsmalab
