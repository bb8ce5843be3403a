#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rsmalab/channel.hpp"
#include "rsmalab/precoder.hpp"

namespace rsmalab {

enum class SchemeId {
  drl_rsma,
  drl_rsma_no_info,
  drl_rsma_eta1,
  drl_sdma,
  drl_noma,
  greedy_rsma,
  greedy_sdma,
  greedy_noma,
};

/// Tokens as accepted on the command line, e.g. "drl-rsma", "greedy-noma".
std::string_view to_string(SchemeId id);
std::optional<SchemeId> parse_scheme(std::string_view token);

enum class PowerPolicy { learned, greedy };

PowerPolicy power_policy(SchemeId id);

/// Precoder rule bound to a scheme; NOMA additionally needs the channel to
/// decide which user is silent, see noma_weak_user.
enum class PrecoderRule { rsma, rsma_no_info, rsma_fixed_eta, sdma, noma };

PrecoderRule precoder_rule(SchemeId id);

/// Drains the battery: P_t = b / T.
double greedy_power(double battery, double slot_time = 1.0);

/// Index of the user with the smaller estimated channel norm. On a tie the
/// higher index is the weak one. Requires exactly two users.
int noma_weak_user(const ChannelSet& channels);

/// Design restrictions for a precoder rule on a given channel.
DesignVariant design_variant(PrecoderRule rule, const ChannelSet& channels);

PrecoderDecision sdma_precoder(const ChannelSet& channels, double total_power, double noise_var,
                               const PrecoderOptions& options = {});
PrecoderDecision noma_precoder(const ChannelSet& channels, double total_power, double noise_var,
                               const PrecoderOptions& options = {});
PrecoderDecision no_info_precoder(const ChannelSet& channels, double total_power, double noise_var,
                                  const PrecoderOptions& options = {});
PrecoderDecision fixed_eta_precoder(const ChannelSet& channels, double total_power,
                                    double noise_var, const PrecoderOptions& options = {});

/// The same precoders expressed as a point of the full RSMA design, usable as
/// a warm start for optimize_precoder. Only the no-info rule needs a change of
/// eta, since its directions were computed without the error variance.
DesignPoint rsma_equivalent(const PrecoderDecision& decision, PrecoderRule rule,
                            const ChannelSet& channels, double total_power, double noise_var);

/// Dispatches on the rule.
PrecoderDecision design_precoder(PrecoderRule rule, const ChannelSet& channels, double total_power,
                                 double noise_var, const PrecoderOptions& options = {});

}  // namespace rsmalab
