#pragma once

#include <cstdint>
#include <vector>

namespace hcqkd {

struct SpadParams {
    double efficiency = 0.10;
    double dark_rate_hz = 620.0;
    double dead_time_s = 10e-6;

    void validate() const;
};

enum class DetectorId : std::uint8_t { Data, Monitor };

struct ClickRecord {
    DetectorId detector = DetectorId::Data;
    std::uint64_t frame = 0;
    std::uint32_t slot = 0;

    friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

/// Poissonian click probability: 1 - exp(-mu * efficiency).
double click_probability(double mean_photons, const SpadParams& spad);

/// Background rate seen by a free-running SPAD: flux * efficiency + dark.
double background_click_rate(double noise_flux, const SpadParams& spad);

/// Drops clicks arriving within `dead_time_s` of the last surviving click on
/// the same detector. Input must be time-ordered per detector; output order
/// is preserved.
std::vector<ClickRecord> prune_dead_time(std::vector<ClickRecord> clicks,
                                         const SpadParams& spad, double slot_rate_hz,
                                         std::uint32_t slots_per_frame);

/// One detector stream: per-slot Bernoulli signal draws (the probability
/// pattern repeats every frame) plus slot-uniform Poisson background, then
/// dead-time pruning. Deterministic in (seed); per-frame substreams.
std::vector<ClickRecord> sample_click_stream(const std::vector<double>& per_slot_probabilities,
                                             double background_rate_hz,
                                             std::uint64_t duration_frames,
                                             const SpadParams& spad,
                                             double slot_rate_hz,
                                             std::uint64_t seed);

}  // namespace hcqkd
