#pragma once

#include <string>
#include <vector>

namespace hcqkd {

inline constexpr double kPlanck = 6.62607015e-34;       // J*s
inline constexpr double kLightSpeed = 2.99792458e8;     // m/s

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Photon flux of optical power `p_watt` at `wavelength_nm`: p*lambda/(h*c).
/// Negative power is a domain error.
double photon_flux(double p_watt, double wavelength_nm);

/// Binary entropy in bits, with h2(0) = h2(1) = 0 by continuity.
double binary_entropy(double x);

/// Optical power carried as dBm; linear conversions are explicit.
class OpticalPower {
public:
    static OpticalPower from_dbm(double dbm) { return OpticalPower(dbm); }
    static OpticalPower from_mw(double mw);

    double dbm() const { return dbm_; }
    double mw() const { return dbm_to_mw(dbm_); }

private:
    explicit OpticalPower(double dbm) : dbm_(dbm) {}
    double dbm_;
};

enum class ChannelRole {
    ClassicalData,
    Quantum,
    Sync,
    DistillationDown,
    DistillationUp,
};

std::string to_string(ChannelRole role);

struct Channel {
    double center_nm = 0.0;
    OpticalPower launch = OpticalPower::from_dbm(0.0);
    ChannelRole role = ChannelRole::ClassicalData;

    Channel(double center_nm, OpticalPower launch, ChannelRole role);
};

/// Ordered carrier set. Classical channels stay sorted ascending in
/// wavelength; wavelengths are pairwise distinct; a full scenario plan holds
/// exactly one quantum channel.
class ChannelPlan {
public:
    void add(Channel ch);

    const std::vector<Channel>& channels() const { return channels_; }
    std::vector<const Channel*> classical() const;
    /// The quantum channel; throws ConfigError unless the plan holds exactly one.
    const Channel& quantum() const;

    std::size_t classical_count() const;
    /// Sum of classical launch powers, in dBm.
    double aggregate_classical_dbm() const;

    // Grid metadata (populated by build_plan; zero otherwise).
    double grid_start_nm = 0.0;
    double grid_end_nm = 0.0;
    std::size_t grid_count = 0;

private:
    std::vector<Channel> channels_;
};

/// Evenly spaced classical grid, endpoints inclusive, equal per-channel power.
ChannelPlan build_plan(std::size_t count, double start_nm, double end_nm,
                       double per_channel_dbm);

}  // namespace hcqkd
