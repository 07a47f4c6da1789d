#include "hcqkd/classical.hpp"

#include <cmath>
#include <stdexcept>

#include "hcqkd/errors.hpp"
#include "hcqkd/units.hpp"

namespace hcqkd {

void ReceiverModel::validate() const {
    if (!(nep_mw > 0.0)) throw ConfigError("ReceiverModel: NEP must be > 0");
    if (sensitivity_spread_db < 0.0)
        throw ConfigError("ReceiverModel: negative sensitivity spread");
}

std::vector<double> ReceiverModel::channel_offsets(std::size_t channel_count) const {
    validate();
    std::vector<double> offsets(channel_count, 0.0);
    if (channel_count < 2) return offsets;
    const double half = sensitivity_spread_db / 2.0;
    for (std::size_t i = 0; i < channel_count; ++i)
        offsets[i] = -half + sensitivity_spread_db * static_cast<double>(i) /
                                 static_cast<double>(channel_count - 1);
    return offsets;
}

double ber(double rop_dbm, const ReceiverModel& rx, double channel_offset_db) {
    rx.validate();
    if (!std::isfinite(rop_dbm)) throw std::domain_error("ber: non-finite ROP");
    const double q = dbm_to_mw(rop_dbm - channel_offset_db) / rx.nep_mw;
    return 0.5 * std::erfc(q / std::sqrt(2.0));
}

double sensitivity(const ReceiverModel& rx, double channel_offset_db, double target_ber) {
    rx.validate();
    if (!(target_ber > 0.0 && target_ber < 0.5))
        throw std::domain_error("sensitivity: target BER outside (0, 0.5)");
    // Solve at offset 0 and shift afterwards, so offsets move the result
    // exactly instead of through the bisection grid.
    double lo = -60.0, hi = 10.0;
    if (ber(hi, rx) > target_ber)
        throw std::domain_error("sensitivity: target unreachable at +10 dBm");
    if (ber(lo, rx) <= target_ber)
        throw std::domain_error("sensitivity: target already met at -60 dBm");
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        if (ber(mid, rx) <= target_ber)
            hi = mid;
        else
            lo = mid;
    }
    return hi + channel_offset_db;
}

}  // namespace hcqkd
