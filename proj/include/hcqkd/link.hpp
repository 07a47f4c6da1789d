#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hcqkd/units.hpp"

namespace hcqkd {

/// Spontaneous Raman scattering coefficients versus pump detuning.
/// Coefficients are photons/s per 0.1 nm per mW of pump, referenced to the
/// 7.7 km span the shipped tables were calibrated for. Piecewise-linear in
/// |detuning|, flat beyond the table edges.
class SprsProfile {
public:
    SprsProfile(std::vector<std::pair<double, double>> table);

    static SprsProfile from_file(const std::string& path);
    /// Same spectrum a fixed number of dB down (HCF = SMF - 35 dB).
    SprsProfile suppressed(double suppression_db) const;
    static SprsProfile flat(double coefficient);

    double coefficient(double detuning_nm) const;
    const std::vector<std::pair<double, double>>& table() const { return table_; }

private:
    std::vector<std::pair<double, double>> table_;  // (detuning_nm, coefficient)
};

enum class FiberKind { SMF, HCF };

struct FiberSpan {
    double length_km = 7.7;
    double attenuation_db_per_km = 1.0;
    SprsProfile profile;
    FiberKind kind = FiberKind::HCF;

    FiberSpan(double length_km, double attenuation_db_per_km, SprsProfile profile,
              FiberKind kind);

    double loss_db() const { return attenuation_db_per_km * length_km; }
};

/// Effective interaction length (1 - 10^(-aL/10)) / (a ln10 / 10); plain L
/// when the span is lossless.
double effective_length_km(double attenuation_db_per_km, double length_km);

struct CoexistenceElement {
    double quantum_drop_loss_db = 0.0;
    double classical_express_loss_db = 0.0;
    double notch_rejection_db = 0.0;
    // Fraction of the aggregated classical input scattered into the quantum
    // channel's 0.1 nm acceptance band.
    double scatter_fraction = 0.0;

    void validate() const;
};

struct Amplifier {
    double output_clamp_dbm = 20.0;
    double small_signal_gain_db = 25.0;
    double ase_loaded_dbm_per_0p1nm = -40.0;
    double ase_noload_dbm_per_0p1nm = -6.0;

    void validate() const;
    /// Per-channel gain for a given total input power; output never exceeds
    /// the clamp.
    double gain_db(double total_input_dbm) const;
};

struct NoiseBudget {
    double spr_flux = 0.0;      // photons/s at the quantum receiver input
    double ase_flux = 0.0;
    double scatter_flux = 0.0;

    double total() const { return spr_flux + ase_flux + scatter_flux; }
};

/// The Fig.-2-style cascade: mux -> booster -> A_tx -> CE-T -> span -> CE-R
/// -> A_rx. The quantum and sync carriers join at the CE-T drop port.
struct LinkChain {
    double mux_loss_db = 0.0;
    Amplifier amplifier;
    bool ase_enabled = true;
    double a_tx_db = 0.0;
    CoexistenceElement ce_t;
    FiberSpan span;
    CoexistenceElement ce_r;
    double a_rx_db = 0.0;
    double acceptance_bw_nm = 0.1;

    void validate() const;
};

/// SpRS flux in `acceptance_bw_nm` at the span output for one pump channel.
double spr_flux(double pump_power_mw, double detuning_nm, const FiberSpan& span,
                double acceptance_bw_nm);

/// Residual amplifier ASE flux inside the quantum acceptance band, referred
/// past `downstream_rejection_db` (notch) and `downstream_loss_db`.
double ase_flux(const Amplifier& amp, bool loaded, double downstream_rejection_db,
                double downstream_loss_db, double acceptance_bw_nm,
                double wavelength_nm);

/// Broadband component scattering of the aggregated classical power into the
/// quantum band at a co-existence element.
double scatter_flux(double aggregate_classical_mw, const CoexistenceElement& element,
                    double downstream_loss_db, double wavelength_nm);

struct QuantumPathResult {
    double loss_db = 0.0;
    NoiseBudget noise;
};

/// Quantum-channel loss plus the in-band noise flux arriving at the quantum
/// receiver, summed over all classical channels of the plan.
QuantumPathResult evaluate_quantum_path(const LinkChain& chain, const ChannelPlan& plan);

/// Received power of one classical data channel at the APD, in dBm.
double evaluate_classical_path(const LinkChain& chain, const ChannelPlan& plan,
                               const Channel& channel);

}  // namespace hcqkd
