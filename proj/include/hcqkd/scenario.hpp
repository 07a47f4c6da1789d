#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcqkd/classical.hpp"
#include "hcqkd/cow.hpp"
#include "hcqkd/distill.hpp"
#include "hcqkd/exec.hpp"
#include "hcqkd/link.hpp"
#include "hcqkd/units.hpp"

namespace hcqkd {

inline constexpr const char* kToolVersion = "hcqkd 0.1.0";

struct PlanConfig {
    std::size_t grid_channel_count = 17;  // full DWDM grid
    double grid_start_nm = 1540.56;
    double grid_end_nm = 1558.17;
    std::size_t channel_count = 17;  // first N grid channels carry traffic
    double aggregate_launch_dbm = 8.0;  // total classical power at the span input
    double source_power_per_channel_dbm = -1.30;
    double quantum_nm = 1538.0;
    double sync_nm = 1611.0;
    double distillation_down_nm = 1554.94;
    double distillation_up_nm = 1552.52;
};

struct AmplifierConfig {
    double output_clamp_dbm = 20.0;
    double small_signal_gain_db = 25.0;
    double ase_loaded_dbm_per_0p1nm = -40.0;
    double ase_noload_dbm_per_0p1nm = -6.0;
    bool ase_enabled = true;
};

struct ElementConfig {
    double quantum_drop_loss_db = 0.0;
    double classical_express_loss_db = 0.0;
    double notch_rejection_db = 0.0;
    double scatter_fraction = 0.0;
};

struct LinkConfig {
    std::string fiber_kind = "HCF";  // HCF | SMF
    double span_length_km = 7.7;
    double attenuation_db_per_km = 1.0;
    std::string spr_profile_path = "data/spr_smf.tsv";  // SMF reference table
    double hcf_suppression_db = 35.0;
    double acceptance_bw_nm = 0.1;
    double mux_loss_db = 0.0;
    AmplifierConfig amplifier;
    double a_tx_db = 5.7;  // used verbatim when no classical channels are lit
    ElementConfig ce_t{0.76, 6.3, 95.0, 1.841626e-12};
    ElementConfig ce_r{1.0, 1.3, 0.0, 0.0};
    double a_rx_db = 0.0;
};

struct CowConfig {
    double slot_rate_hz = 1e9;
    double frame_rate_hz = 1e6;
    double mean_photon_number = 0.1;
    double decoy_fraction = 0.1;
    double data_branch = 0.75;
    double intrinsic_qber = 0.0067;
    double intrinsic_visibility = 0.98;
    double monitor_duty = 5.272264e-3;
    SpadParams spad;
};

struct DistillConfig {
    double sample_fraction = 0.1;
    double error_correction_efficiency = 1.2;
    std::string secret_fraction_strategy = "h2-leakage";
    std::size_t estimation_floor_bits = 100;
};

struct BackendConfig {
    std::string type = "analytic";  // analytic | montecarlo
    std::uint64_t frames = 10000;
    std::uint64_t seed = 1;
};

struct ReceiverConfig {
    double nep_mw = 6.862377491591985e-4;
    double sensitivity_spread_db = 1.8;
};

struct SweepConfig {
    std::vector<double> aggregate_powers_dbm{-1.0, 2.0, 5.0, 8.0, 11.0};
    std::vector<std::size_t> channel_counts{6, 17};
};

struct ScenarioConfig {
    PlanConfig plan;
    LinkConfig link;
    CowConfig cow;
    DistillConfig distillation;
    BackendConfig backend;
    ReceiverConfig receiver;
    SweepConfig sweep;

    /// Parse from JSON text; unknown keys are rejected with their path.
    static ScenarioConfig from_json_text(const std::string& text,
                                         const std::string& base_dir = ".");
    static ScenarioConfig from_file(const std::string& path);
    std::string to_json_text() const;
    /// FNV-1a over the canonical JSON dump.
    std::string hash() const;
};

struct ScenarioResult {
    double aggregate_dbm = 0.0;  // -inf when no classical channels are lit
    std::size_t channel_count = 0;
    double a_tx_db = 0.0;
    double loss_db = 0.0;
    NoiseBudget noise;
    double r_sift_hz = 0.0;
    double qber = 0.0;
    double visibility = 0.0;
    double skr_bps = 0.0;
    std::size_t secure_key_bits = 0;  // Monte-Carlo backend only
    std::vector<double> ber_per_channel;
    std::string backend;
    std::uint64_t seed = 0;
    std::optional<SecureKey> secure_key;  // Monte-Carlo backend only
};

/// Scenario assembly helpers (also used by the calibration loop).
ChannelPlan assemble_plan(const ScenarioConfig& config);
LinkChain assemble_chain(const ScenarioConfig& config);
OperatingPoint assemble_operating_point(const ScenarioConfig& config);

ScenarioResult run_scenario(const ScenarioConfig& config, Exec exec = Exec::Parallel);
std::vector<ScenarioResult> run_sweep(const ScenarioConfig& config,
                                      Exec exec = Exec::Parallel);

struct CalibrationAnchors {
    // Required: analytic QBER at an operating point.
    double qber_aggregate_dbm = 8.0;
    std::size_t qber_channel_count = 17;
    double qber_value = 0.012;
    // Optional: SKR ratio between two aggregate powers at fixed channel count.
    bool has_skr_ratio = false;
    double ratio_high_dbm = 11.0;
    double ratio_low_dbm = 8.0;
    std::size_t ratio_channel_count = 17;
    double skr_ratio = 65.0 / 1200.0;

    static CalibrationAnchors from_file(const std::string& path);
};

struct CalibrationReport {
    ScenarioConfig config;  // with fitted parameters
    double scatter_fraction = 0.0;
    double monitor_duty = 0.0;
    double achieved_qber = 0.0;
    double achieved_skr_ratio = 0.0;
    bool ratio_fitted = false;
};

/// Stage 1 bisects CE-T scatter_fraction against the QBER anchor; stage 2
/// (when a ratio anchor is given) bisects the monitor duty against the SKR
/// ratio. Both run on the analytic backend.
CalibrationReport calibrate(const ScenarioConfig& config, const CalibrationAnchors& anchors);

void emit_csv(const std::vector<ScenarioResult>& table, std::ostream& out);
void emit_csv(const std::vector<ScenarioResult>& table, const std::string& path);
/// Companion metadata: config hash, seed, calibration values, tool version.
void write_meta(const ScenarioConfig& config, const std::string& csv_path);

/// Informational note on the NIST AES-256 key-renewal budget for a given
/// link capacity, quoting the 64-GByte rule.
std::string aes_budget_note(double link_capacity_bps);

}  // namespace hcqkd
