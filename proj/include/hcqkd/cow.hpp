#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hcqkd/detection.hpp"
#include "hcqkd/exec.hpp"

namespace hcqkd {

struct FrameSpec {
    double slot_rate_hz = 1e9;
    double frame_rate_hz = 1e6;

    FrameSpec() = default;
    FrameSpec(double slot_rate, double frame_rate);

    std::uint32_t slots_per_frame() const {
        return static_cast<std::uint32_t>(slot_rate_hz / frame_rate_hz);
    }
    std::uint32_t symbols_per_frame() const { return slots_per_frame() / 2; }
    double frame_duration_s() const { return 1.0 / frame_rate_hz; }
};

// Two consecutive slots per symbol; the decoy pulses both.
enum class CowSymbol : std::uint8_t { Bit0 = 0, Bit1 = 1, Decoy = 2 };

/// Alice's transmitted pattern. Symbols are stored per frame in emission
/// order; 500 symbols per 1000-slot frame at the default rates.
struct AliceRecord {
    std::uint64_t start_counter = 0;
    std::uint64_t frame_count = 0;
    std::uint32_t symbols_per_frame = 0;
    double mu = 0.1;
    std::uint64_t seed = 0;
    std::vector<CowSymbol> symbols;  // frame-major

    CowSymbol symbol(std::uint64_t frame, std::uint32_t index) const {
        return symbols[frame * symbols_per_frame + index];
    }
};

struct DataDetection {
    std::uint64_t frame = 0;
    std::uint32_t symbol = 0;
    std::uint8_t parity = 0;  // recovered bit: which slot of the symbol clicked

    friend bool operator==(const DataDetection&, const DataDetection&) = default;
};

struct MonitorDetection {
    std::uint64_t frame = 0;
    std::uint32_t slot = 0;  // pair-window start slot (or background landing slot)

    friend bool operator==(const MonitorDetection&, const MonitorDetection&) = default;
};

struct BobReport {
    std::uint64_t start_counter = 0;
    std::uint64_t frame_count = 0;
    std::vector<DataDetection> data;
    std::vector<MonitorDetection> monitor;

    friend bool operator==(const BobReport&, const BobReport&) = default;
};

struct OperatingPoint {
    double mu = 0.1;
    double link_loss_db = 9.46;
    double noise_flux = 0.0;  // photons/s in the acceptance band at the receiver
    SpadParams spad;
    double data_branch = 0.75;  // monitor branch is the complement
    double intrinsic_qber = 0.0067;
    double intrinsic_visibility = 0.98;
    double decoy_fraction = 0.1;
    // Fraction of coherent pulse-pair windows the registration logic actually
    // evaluates for interference; the free-running SPAD background is counted
    // regardless. Calibration parameter.
    double monitor_duty = 1.0;

    void validate() const;
    double transmission() const;
    double monitor_branch() const { return 1.0 - data_branch; }
};

struct CowRates {
    double r_sig = 0.0;      // signal contribution to the sifted rate, Hz
    double r_sift = 0.0;     // Hz
    double qber = 0.0;
    double visibility = 0.0;
    double r_int = 0.0;      // evaluated monitor-line pair click rate, Hz
    double r_bg_data = 0.0;  // Hz
    double r_bg_mon = 0.0;   // Hz
};

/// Random bit per symbol, decoy substitution with probability f_d.
AliceRecord alice_generate(std::uint64_t frame_count, const FrameSpec& spec,
                           double decoy_fraction, double mu, std::uint64_t seed);

/// Per-slot mean photon numbers of one frame of the pulse train.
std::vector<double> pulse_train_frame(const AliceRecord& alice, std::uint64_t frame,
                                      const FrameSpec& spec);

/// Monte-Carlo receiver: branch thinning, Poissonian clicks, slot-uniform
/// background, destructive-port interference on consecutive-pulse windows,
/// dead-time pruning. Deterministic in (seed); frame-parallel.
BobReport bob_receive(const AliceRecord& alice, const OperatingPoint& op,
                      const FrameSpec& spec, std::uint64_t seed,
                      Exec exec = Exec::Parallel);

/// Closed-form expectation of the Monte-Carlo receiver (no dead time).
CowRates expected_rates(const OperatingPoint& op, const FrameSpec& spec);

/// Ideal sync: validates that both transcripts cover the same frames.
const BobReport& frame_sync(const BobReport& report, const AliceRecord& alice);

// Line-oriented transcripts for replay tests.
void write_transcript(const AliceRecord& alice, std::ostream& out);
void write_transcript(const BobReport& report, std::ostream& out);
AliceRecord parse_alice_transcript(std::istream& in);
BobReport parse_bob_transcript(std::istream& in);

}  // namespace hcqkd
