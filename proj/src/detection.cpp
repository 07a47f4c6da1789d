#include "hcqkd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hcqkd/rng.hpp"

namespace hcqkd {

void SpadParams::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw std::domain_error("SpadParams: efficiency outside [0,1]");
    if (dark_rate_hz < 0.0) throw std::domain_error("SpadParams: negative dark rate");
    if (dead_time_s < 0.0) throw std::domain_error("SpadParams: negative dead time");
}

double click_probability(double mean_photons, const SpadParams& spad) {
    if (mean_photons < 0.0)
        throw std::domain_error("click_probability: negative mean photon number");
    spad.validate();
    return 1.0 - std::exp(-mean_photons * spad.efficiency);
}

double background_click_rate(double noise_flux, const SpadParams& spad) {
    if (noise_flux < 0.0)
        throw std::domain_error("background_click_rate: negative flux");
    spad.validate();
    return noise_flux * spad.efficiency + spad.dark_rate_hz;
}

std::vector<ClickRecord> prune_dead_time(std::vector<ClickRecord> clicks,
                                         const SpadParams& spad, double slot_rate_hz,
                                         std::uint32_t slots_per_frame) {
    if (spad.dead_time_s == 0.0) return clicks;
    const double slot_s = 1.0 / slot_rate_hz;
    double last_data = -1e300, last_mon = -1e300;
    std::vector<ClickRecord> kept;
    kept.reserve(clicks.size());
    for (const auto& c : clicks) {
        const double t =
            (static_cast<double>(c.frame) * slots_per_frame + c.slot) * slot_s;
        double& last = c.detector == DetectorId::Data ? last_data : last_mon;
        if (t - last >= spad.dead_time_s) {
            kept.push_back(c);
            last = t;
        }
    }
    return kept;
}

std::vector<ClickRecord> sample_click_stream(const std::vector<double>& per_slot_probabilities,
                                             double background_rate_hz,
                                             std::uint64_t duration_frames,
                                             const SpadParams& spad,
                                             double slot_rate_hz,
                                             std::uint64_t seed) {
    spad.validate();
    for (double p : per_slot_probabilities)
        if (p < 0.0 || p > 1.0)
            throw std::domain_error("sample_click_stream: probability outside [0,1]");
    const auto slots = static_cast<std::uint32_t>(per_slot_probabilities.size());
    const double frame_s = slots / slot_rate_hz;

    std::vector<ClickRecord> clicks;
    for (std::uint64_t f = 0; f < duration_frames; ++f) {
        Rng rng = Rng::stream(seed, f);
        std::vector<bool> hit(slots, false);
        for (std::uint32_t s = 0; s < slots; ++s)
            if (rng.bernoulli(per_slot_probabilities[s])) hit[s] = true;
        const std::uint64_t bg = rng.poisson(background_rate_hz * frame_s);
        for (std::uint64_t i = 0; i < bg; ++i)
            hit[static_cast<std::uint32_t>(rng.below(slots))] = true;
        for (std::uint32_t s = 0; s < slots; ++s)
            if (hit[s]) clicks.push_back({DetectorId::Data, f, s});
    }
    return prune_dead_time(std::move(clicks), spad, slot_rate_hz, slots);
}

}  // namespace hcqkd
