#pragma once

#include <cstddef>
#include <vector>

namespace hcqkd {

/// Gaussian Q-factor receiver: Q = P_rx / NEP, BER = 0.5*erfc(Q/sqrt(2)).
/// The default NEP is pinned so that -23.6 dBm sits at BER 1e-10.
struct ReceiverModel {
    double nep_mw = 6.862377491591985e-4;  // 10^(-2.36) / 6.361
    double sensitivity_spread_db = 1.8;    // worst - best channel

    void validate() const;
    /// Linear ramp of per-channel offsets covering +-spread/2.
    std::vector<double> channel_offsets(std::size_t channel_count) const;
};

double ber(double rop_dbm, const ReceiverModel& rx, double channel_offset_db = 0.0);

/// Minimal received power reaching `target_ber`, bisected to 0.01 dB inside
/// [-60, +10] dBm; the channel offset shifts the result exactly.
double sensitivity(const ReceiverModel& rx, double channel_offset_db, double target_ber);

}  // namespace hcqkd
