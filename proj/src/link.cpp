#include "hcqkd/link.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hcqkd/errors.hpp"

namespace hcqkd {

namespace {
double db_factor(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }
}  // namespace

SprsProfile::SprsProfile(std::vector<std::pair<double, double>> table)
    : table_(std::move(table)) {
    if (table_.empty()) throw ConfigError("SprsProfile: empty table");
    std::sort(table_.begin(), table_.end());
    for (const auto& [d, c] : table_) {
        if (d < 0.0) throw ConfigError("SprsProfile: negative detuning in table");
        if (c < 0.0) throw ConfigError("SprsProfile: negative coefficient");
    }
}

SprsProfile SprsProfile::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("SprsProfile: cannot open " + path);
    std::vector<std::pair<double, double>> table;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double detuning, coeff;
        if (row >> detuning >> coeff) table.emplace_back(detuning, coeff);
    }
    if (table.empty()) throw ConfigError("SprsProfile: no rows in " + path);
    return SprsProfile(std::move(table));
}

SprsProfile SprsProfile::suppressed(double suppression_db) const {
    auto table = table_;
    const double factor = db_factor(suppression_db);
    for (auto& [d, c] : table) c *= factor;
    return SprsProfile(std::move(table));
}

SprsProfile SprsProfile::flat(double coefficient) {
    return SprsProfile({{0.0, coefficient}, {1000.0, coefficient}});
}

double SprsProfile::coefficient(double detuning_nm) const {
    const double d = std::fabs(detuning_nm);
    if (d <= table_.front().first) return table_.front().second;
    if (d >= table_.back().first) return table_.back().second;
    for (std::size_t i = 0; i + 1 < table_.size(); ++i) {
        const auto& [x0, y0] = table_[i];
        const auto& [x1, y1] = table_[i + 1];
        if (d <= x1) return y0 + (y1 - y0) * (d - x0) / (x1 - x0);
    }
    return table_.back().second;
}

FiberSpan::FiberSpan(double length, double attenuation, SprsProfile prof, FiberKind k)
    : length_km(length),
      attenuation_db_per_km(attenuation),
      profile(std::move(prof)),
      kind(k) {
    if (!(length_km > 0.0)) throw ConfigError("FiberSpan: length must be > 0");
    if (attenuation_db_per_km < 0.0) throw ConfigError("FiberSpan: negative attenuation");
}

double effective_length_km(double attenuation_db_per_km, double length_km) {
    if (attenuation_db_per_km <= 0.0) return length_km;
    const double alpha = attenuation_db_per_km * std::log(10.0) / 10.0;  // 1/km
    return (1.0 - std::pow(10.0, -attenuation_db_per_km * length_km / 10.0)) / alpha;
}

void CoexistenceElement::validate() const {
    if (quantum_drop_loss_db < 0.0 || classical_express_loss_db < 0.0 ||
        notch_rejection_db < 0.0)
        throw ConfigError("CoexistenceElement: losses must be >= 0");
    if (scatter_fraction < 0.0 || scatter_fraction >= 1.0)
        throw ConfigError("CoexistenceElement: scatter_fraction outside [0, 1)");
}

void Amplifier::validate() const {
    if (ase_noload_dbm_per_0p1nm < ase_loaded_dbm_per_0p1nm)
        throw ConfigError("Amplifier: no-load ASE density below loaded density");
}

double Amplifier::gain_db(double total_input_dbm) const {
    const double out = std::min(total_input_dbm + small_signal_gain_db, output_clamp_dbm);
    return out - total_input_dbm;
}

void LinkChain::validate() const {
    amplifier.validate();
    ce_t.validate();
    ce_r.validate();
    if (mux_loss_db < 0.0 || a_tx_db < 0.0 || a_rx_db < 0.0)
        throw ConfigError("LinkChain: attenuations must be >= 0");
    if (!(acceptance_bw_nm > 0.0))
        throw ConfigError("LinkChain: acceptance bandwidth must be > 0");
}

double spr_flux(double pump_power_mw, double detuning_nm, const FiberSpan& span,
                double acceptance_bw_nm) {
    if (!(acceptance_bw_nm > 0.0))
        throw std::domain_error("spr_flux: acceptance bandwidth must be > 0");
    if (pump_power_mw < 0.0) throw std::domain_error("spr_flux: negative pump");
    const double reference_leff = effective_length_km(span.attenuation_db_per_km, 7.7);
    const double leff = effective_length_km(span.attenuation_db_per_km, span.length_km);
    return span.profile.coefficient(detuning_nm) * pump_power_mw *
           (acceptance_bw_nm / 0.1) * (leff / reference_leff);
}

double ase_flux(const Amplifier& amp, bool loaded, double downstream_rejection_db,
                double downstream_loss_db, double acceptance_bw_nm,
                double wavelength_nm) {
    const double density_dbm =
        loaded ? amp.ase_loaded_dbm_per_0p1nm : amp.ase_noload_dbm_per_0p1nm;
    const double mw = dbm_to_mw(density_dbm) * (acceptance_bw_nm / 0.1) *
                      db_factor(downstream_rejection_db + downstream_loss_db);
    return photon_flux(mw * 1e-3, wavelength_nm);
}

double scatter_flux(double aggregate_classical_mw, const CoexistenceElement& element,
                    double downstream_loss_db, double wavelength_nm) {
    if (aggregate_classical_mw < 0.0)
        throw std::domain_error("scatter_flux: negative aggregate power");
    const double watts = aggregate_classical_mw * element.scatter_fraction *
                         db_factor(downstream_loss_db) * 1e-3;
    return photon_flux(watts, wavelength_nm);
}

QuantumPathResult evaluate_quantum_path(const LinkChain& chain, const ChannelPlan& plan) {
    chain.validate();
    const Channel& quantum = plan.quantum();  // ConfigError when absent

    QuantumPathResult result;
    result.loss_db = chain.ce_t.quantum_drop_loss_db + chain.span.loss_db() +
                     chain.ce_r.quantum_drop_loss_db + chain.a_rx_db;

    const auto classical = plan.classical();
    const bool loaded = !classical.empty();

    // Classical carriers at the CE-T input: launch - mux + clamped gain - A_tx.
    double gain = 0.0;
    if (loaded) {
        double total_in_mw = 0.0;
        for (const auto* ch : classical)
            total_in_mw += dbm_to_mw(ch->launch.dbm() - chain.mux_loss_db);
        gain = chain.amplifier.gain_db(mw_to_dbm(total_in_mw));
    }

    const double to_receiver_from_span_out =
        chain.ce_r.quantum_drop_loss_db + chain.a_rx_db;
    double aggregate_cet_in_mw = 0.0;
    for (const auto* ch : classical) {
        const double cet_in_dbm =
            ch->launch.dbm() - chain.mux_loss_db + gain - chain.a_tx_db;
        aggregate_cet_in_mw += dbm_to_mw(cet_in_dbm);
        const double span_in_mw =
            dbm_to_mw(cet_in_dbm - chain.ce_t.classical_express_loss_db);
        result.noise.spr_flux +=
            spr_flux(span_in_mw, ch->center_nm - quantum.center_nm, chain.span,
                     chain.acceptance_bw_nm) *
            db_factor(to_receiver_from_span_out);
    }

    result.noise.scatter_flux = scatter_flux(
        aggregate_cet_in_mw, chain.ce_t,
        chain.span.loss_db() + to_receiver_from_span_out, quantum.center_nm);

    if (chain.ase_enabled) {
        result.noise.ase_flux = ase_flux(
            chain.amplifier, loaded, chain.ce_t.notch_rejection_db,
            chain.a_tx_db + chain.span.loss_db() + to_receiver_from_span_out,
            chain.acceptance_bw_nm, quantum.center_nm);
    }
    return result;
}

double evaluate_classical_path(const LinkChain& chain, const ChannelPlan& plan,
                               const Channel& channel) {
    chain.validate();
    if (channel.role != ChannelRole::ClassicalData)
        throw ConfigError("evaluate_classical_path: channel is not classical-data");
    double total_in_mw = 0.0;
    for (const auto* ch : plan.classical())
        total_in_mw += dbm_to_mw(ch->launch.dbm() - chain.mux_loss_db);
    const double gain = chain.amplifier.gain_db(mw_to_dbm(total_in_mw));
    return channel.launch.dbm() - chain.mux_loss_db + gain - chain.a_tx_db -
           chain.ce_t.classical_express_loss_db - chain.span.loss_db() -
           chain.ce_r.classical_express_loss_db - chain.a_rx_db;
}

}  // namespace hcqkd
