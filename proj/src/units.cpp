#include "hcqkd/units.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hcqkd/errors.hpp"

namespace hcqkd {

double dbm_to_mw(double dbm) {
    if (!std::isfinite(dbm)) throw std::domain_error("dbm_to_mw: non-finite input");
    return std::pow(10.0, dbm / 10.0);
}

double mw_to_dbm(double mw) {
    if (!(mw > 0.0)) throw std::domain_error("mw_to_dbm: power must be > 0 mW");
    return 10.0 * std::log10(mw);
}

double photon_flux(double p_watt, double wavelength_nm) {
    if (p_watt < 0.0) throw std::domain_error("photon_flux: negative power");
    return p_watt * (wavelength_nm * 1e-9) / (kPlanck * kLightSpeed);
}

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("binary_entropy: x outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

OpticalPower OpticalPower::from_mw(double mw) {
    return OpticalPower(mw_to_dbm(mw));
}

std::string to_string(ChannelRole role) {
    switch (role) {
        case ChannelRole::ClassicalData: return "classical-data";
        case ChannelRole::Quantum: return "quantum";
        case ChannelRole::Sync: return "sync";
        case ChannelRole::DistillationDown: return "distillation-down";
        case ChannelRole::DistillationUp: return "distillation-up";
    }
    return "?";
}

Channel::Channel(double center, OpticalPower power, ChannelRole r)
    : center_nm(center), launch(power), role(r) {
    if (!(center_nm > 1200.0 && center_nm < 1700.0))
        throw std::domain_error("Channel: wavelength outside (1200, 1700) nm");
}

void ChannelPlan::add(Channel ch) {
    for (const auto& existing : channels_) {
        if (existing.center_nm == ch.center_nm)
            throw ConfigError("ChannelPlan: duplicate center wavelength");
        if (ch.role == ChannelRole::Quantum && existing.role == ChannelRole::Quantum)
            throw ConfigError("ChannelPlan: more than one quantum channel");
    }
    channels_.push_back(ch);
    std::stable_sort(channels_.begin(), channels_.end(),
                     [](const Channel& a, const Channel& b) {
                         const bool ca = a.role == ChannelRole::ClassicalData;
                         const bool cb = b.role == ChannelRole::ClassicalData;
                         if (ca && cb) return a.center_nm < b.center_nm;
                         return false;
                     });
}

std::vector<const Channel*> ChannelPlan::classical() const {
    std::vector<const Channel*> out;
    for (const auto& ch : channels_)
        if (ch.role == ChannelRole::ClassicalData) out.push_back(&ch);
    return out;
}

const Channel& ChannelPlan::quantum() const {
    const Channel* found = nullptr;
    for (const auto& ch : channels_) {
        if (ch.role == ChannelRole::Quantum) {
            if (found) throw ConfigError("ChannelPlan: more than one quantum channel");
            found = &ch;
        }
    }
    if (!found) throw ConfigError("ChannelPlan: missing quantum channel");
    return *found;
}

std::size_t ChannelPlan::classical_count() const {
    return classical().size();
}

double ChannelPlan::aggregate_classical_dbm() const {
    double total_mw = 0.0;
    for (const auto* ch : classical()) total_mw += ch->launch.mw();
    return mw_to_dbm(total_mw);
}

ChannelPlan build_plan(std::size_t count, double start_nm, double end_nm,
                       double per_channel_dbm) {
    if (count == 0) throw ConfigError("build_plan: empty plan (count = 0)");
    if (count > 1 && !(start_nm < end_nm))
        throw ConfigError("build_plan: start must be below end");
    ChannelPlan plan;
    const double step = count > 1 ? (end_nm - start_nm) / static_cast<double>(count - 1) : 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        plan.add(Channel(start_nm + step * static_cast<double>(i),
                         OpticalPower::from_dbm(per_channel_dbm),
                         ChannelRole::ClassicalData));
    }
    plan.grid_start_nm = start_nm;
    plan.grid_end_nm = count > 1 ? end_nm : start_nm;
    plan.grid_count = count;
    return plan;
}

}  // namespace hcqkd
