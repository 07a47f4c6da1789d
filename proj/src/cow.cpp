#include "hcqkd/cow.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hcqkd/errors.hpp"
#include "hcqkd/rng.hpp"

namespace hcqkd {

FrameSpec::FrameSpec(double slot_rate, double frame_rate)
    : slot_rate_hz(slot_rate), frame_rate_hz(frame_rate) {
    if (!(slot_rate > 0.0) || !(frame_rate > 0.0))
        throw ConfigError("FrameSpec: rates must be > 0");
    const double ratio = slot_rate / frame_rate;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError("FrameSpec: slot rate not divisible by frame rate");
    if (static_cast<std::uint64_t>(std::round(ratio)) % 2 != 0)
        throw ConfigError("FrameSpec: slots per frame must be even");
}

void OperatingPoint::validate() const {
    spad.validate();
    if (mu < 0.0) throw std::domain_error("OperatingPoint: negative mean photon number");
    if (noise_flux < 0.0) throw std::domain_error("OperatingPoint: negative noise flux");
    if (!(data_branch > 0.0 && data_branch < 1.0))
        throw std::domain_error("OperatingPoint: data branch ratio outside (0,1)");
    if (intrinsic_qber < 0.0 || intrinsic_qber > 0.5)
        throw std::domain_error("OperatingPoint: intrinsic QBER outside [0,0.5]");
    if (!(intrinsic_visibility > 0.0 && intrinsic_visibility <= 1.0))
        throw std::domain_error("OperatingPoint: intrinsic visibility outside (0,1]");
    if (decoy_fraction < 0.0 || decoy_fraction > 0.5)
        throw std::domain_error("OperatingPoint: decoy fraction outside [0,0.5]");
    if (monitor_duty < 0.0 || monitor_duty > 1.0)
        throw std::domain_error("OperatingPoint: monitor duty outside [0,1]");
}

double OperatingPoint::transmission() const {
    return std::pow(10.0, -link_loss_db / 10.0);
}

AliceRecord alice_generate(std::uint64_t frame_count, const FrameSpec& spec,
                           double decoy_fraction, double mu, std::uint64_t seed) {
    if (frame_count < 1) throw std::domain_error("alice_generate: frame_count < 1");
    if (decoy_fraction < 0.0 || decoy_fraction > 1.0)
        throw std::domain_error("alice_generate: decoy fraction outside [0,1]");
    AliceRecord rec;
    rec.frame_count = frame_count;
    rec.symbols_per_frame = spec.symbols_per_frame();
    rec.mu = mu;
    rec.seed = seed;
    rec.symbols.resize(frame_count * rec.symbols_per_frame);
    for (std::uint64_t f = 0; f < frame_count; ++f) {
        Rng rng = Rng::stream(seed, f);
        CowSymbol* frame = rec.symbols.data() + f * rec.symbols_per_frame;
        for (std::uint32_t s = 0; s < rec.symbols_per_frame; ++s) {
            const CowSymbol bit = rng.bernoulli(0.5) ? CowSymbol::Bit1 : CowSymbol::Bit0;
            frame[s] = rng.bernoulli(decoy_fraction) ? CowSymbol::Decoy : bit;
        }
    }
    return rec;
}

namespace {

void pulse_train_frame_into(const AliceRecord& alice, std::uint64_t frame,
                            std::vector<double>& train) {
    const std::uint32_t spf = alice.symbols_per_frame;
    train.assign(spf * 2, 0.0);
    const CowSymbol* symbols = alice.symbols.data() + frame * spf;
    for (std::uint32_t s = 0; s < spf; ++s) {
        switch (symbols[s]) {
            case CowSymbol::Bit0: train[2 * s] = alice.mu; break;
            case CowSymbol::Bit1: train[2 * s + 1] = alice.mu; break;
            case CowSymbol::Decoy:
                train[2 * s] = alice.mu;
                train[2 * s + 1] = alice.mu;
                break;
        }
    }
}

struct FrameOutput {
    std::vector<DataDetection> data;
    std::vector<MonitorDetection> monitor;
};

// One frame of Bob's optics. Draw order is fixed: data-line signal clicks in
// slot order, data background, recovered parities in slot order, monitor pair
// windows in slot order, monitor background.
void receive_frame(const AliceRecord& alice, const OperatingPoint& op,
                   const FrameSpec& spec, std::uint64_t seed, std::uint64_t f,
                   std::vector<double>& train, std::vector<std::uint8_t>& clicked,
                   FrameOutput& out) {
    const std::uint32_t slots = spec.slots_per_frame();
    const double transmission = op.transmission();
    const double p_sig =
        1.0 - std::exp(-op.mu * transmission * op.data_branch * op.spad.efficiency);
    const double p_pair = 1.0 - std::exp(-2.0 * op.mu * transmission *
                                         op.monitor_branch() * op.spad.efficiency);
    const double p_destructive = 0.5 * (1.0 - op.intrinsic_visibility) * p_pair;
    const double r_bg_data =
        background_click_rate(op.noise_flux * op.data_branch, op.spad);
    const double r_bg_mon =
        background_click_rate(op.noise_flux * op.monitor_branch(), op.spad);
    const double frame_s = spec.frame_duration_s();

    Rng rng = Rng::stream(seed, f);
    pulse_train_frame_into(alice, f, train);

    clicked.assign(slots, 0);
    for (std::uint32_t s = 0; s < slots; ++s)
        if (train[s] > 0.0 && rng.bernoulli(p_sig)) clicked[s] = 1;
    const std::uint64_t bg = rng.poisson(r_bg_data * frame_s);
    for (std::uint64_t i = 0; i < bg; ++i)
        clicked[static_cast<std::uint32_t>(rng.below(slots))] = 1;
    for (std::uint32_t s = 0; s < slots; ++s) {
        if (!clicked[s]) continue;
        std::uint8_t parity = static_cast<std::uint8_t>(s & 1u);
        if (rng.bernoulli(op.intrinsic_qber)) parity ^= 1u;
        out.data.push_back({f, s / 2, parity});
    }

    // Consecutive pulsed slots form a coherent pair window; only a duty-cycled
    // subset is evaluated for interference, the destructive port clicking with
    // probability (1-V0)/2 of the non-interfering pair expectation.
    for (std::uint32_t s = 0; s + 1 < slots; ++s) {
        if (train[s] > 0.0 && train[s + 1] > 0.0 && rng.bernoulli(op.monitor_duty) &&
            rng.bernoulli(p_destructive))
            out.monitor.push_back({f, s});
    }
    // The observed destructive port collects half of the monitor-line
    // background; the other half exits through the unmonitored port.
    const std::uint64_t mbg = rng.poisson(0.5 * r_bg_mon * frame_s);
    for (std::uint64_t i = 0; i < mbg; ++i)
        out.monitor.push_back({f, static_cast<std::uint32_t>(rng.below(slots))});
    std::stable_sort(out.monitor.begin(), out.monitor.end(),
                     [](const MonitorDetection& a, const MonitorDetection& b) {
                         return a.slot < b.slot;
                     });
}

template <typename Detection, typename SlotOf>
std::vector<Detection> prune_stream(const std::vector<Detection>& stream,
                                    const SpadParams& spad, const FrameSpec& spec,
                                    SlotOf slot_of) {
    if (spad.dead_time_s == 0.0) return stream;
    std::vector<Detection> kept;
    kept.reserve(stream.size());
    const double slot_s = 1.0 / spec.slot_rate_hz;
    double last = -1e300;
    for (const auto& d : stream) {
        const double t =
            (static_cast<double>(d.frame) * spec.slots_per_frame() + slot_of(d)) * slot_s;
        if (t - last >= spad.dead_time_s) {
            kept.push_back(d);
            last = t;
        }
    }
    return kept;
}

}  // namespace

std::vector<double> pulse_train_frame(const AliceRecord& alice, std::uint64_t frame,
                                      const FrameSpec& spec) {
    if (frame >= alice.frame_count)
        throw std::out_of_range("pulse_train_frame: frame index out of range");
    if (alice.symbols_per_frame != spec.symbols_per_frame())
        throw ConfigError("pulse_train_frame: frame spec mismatch");
    std::vector<double> train;
    pulse_train_frame_into(alice, frame, train);
    return train;
}

BobReport bob_receive(const AliceRecord& alice, const OperatingPoint& op,
                      const FrameSpec& spec, std::uint64_t seed, Exec exec) {
    op.validate();
    if (alice.symbols_per_frame != spec.symbols_per_frame())
        throw ConfigError("bob_receive: frame spec mismatch");
    const std::uint64_t frames = alice.frame_count;
    std::vector<FrameOutput> per_frame(frames);

    if (exec == Exec::Parallel) {
#pragma omp parallel
        {
            std::vector<double> train;
            std::vector<std::uint8_t> clicked;
#pragma omp for schedule(static)
            for (std::int64_t f = 0; f < static_cast<std::int64_t>(frames); ++f)
                receive_frame(alice, op, spec, seed, static_cast<std::uint64_t>(f),
                              train, clicked, per_frame[f]);
        }
    } else {
        std::vector<double> train;
        std::vector<std::uint8_t> clicked;
        for (std::uint64_t f = 0; f < frames; ++f)
            receive_frame(alice, op, spec, seed, f, train, clicked, per_frame[f]);
    }

    BobReport report;
    report.start_counter = alice.start_counter;
    report.frame_count = frames;
    for (auto& fo : per_frame) {
        report.data.insert(report.data.end(), fo.data.begin(), fo.data.end());
        report.monitor.insert(report.monitor.end(), fo.monitor.begin(), fo.monitor.end());
    }
    report.data = prune_stream(report.data, op.spad, spec, [](const DataDetection& d) {
        return d.symbol * 2u + d.parity;
    });
    report.monitor = prune_stream(report.monitor, op.spad, spec,
                                  [](const MonitorDetection& d) { return d.slot; });
    return report;
}

CowRates expected_rates(const OperatingPoint& op, const FrameSpec& spec) {
    op.validate();
    const double transmission = op.transmission();
    const double symbol_rate = spec.slot_rate_hz / 2.0;
    const double fd = op.decoy_fraction;

    CowRates rates;
    rates.r_sig = symbol_rate * (1.0 - fd) *
                  (1.0 - std::exp(-op.mu * transmission * op.data_branch *
                                  op.spad.efficiency));
    rates.r_bg_data = background_click_rate(op.noise_flux * op.data_branch, op.spad);
    rates.r_sift = rates.r_sig + rates.r_bg_data * (1.0 - fd);
    if (rates.r_sift <= 0.0)
        throw std::domain_error("expected_rates: zero sifted rate, QBER undefined");
    rates.qber = (op.intrinsic_qber * rates.r_sig +
                  0.5 * rates.r_bg_data * (1.0 - fd)) /
                 rates.r_sift;

    const double p_pair = 1.0 - std::exp(-2.0 * op.mu * transmission *
                                         op.monitor_branch() * op.spad.efficiency);
    const double spf = spec.symbols_per_frame();
    const double pairs_per_frame =
        spf * fd + (spf - 1.0) * std::pow((1.0 + fd) / 2.0, 2);
    rates.r_int = op.monitor_duty * spec.frame_rate_hz * pairs_per_frame * p_pair;
    rates.r_bg_mon = background_click_rate(op.noise_flux * op.monitor_branch(), op.spad);
    rates.visibility =
        rates.r_int + rates.r_bg_mon > 0.0
            ? op.intrinsic_visibility * rates.r_int / (rates.r_int + rates.r_bg_mon)
            : op.intrinsic_visibility;
    return rates;
}

const BobReport& frame_sync(const BobReport& report, const AliceRecord& alice) {
    if (report.start_counter != alice.start_counter)
        throw SyncError("frame_sync: frame counters are shifted");
    if (report.frame_count != alice.frame_count)
        throw SyncError("frame_sync: frame counts differ");
    return report;
}

void write_transcript(const AliceRecord& alice, std::ostream& out) {
    out << "# hcqkd alice transcript v1\n";
    out << "start " << alice.start_counter << "\n";
    out << "frames " << alice.frame_count << "\n";
    out << "spf " << alice.symbols_per_frame << "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", alice.mu);
    out << "mu " << buf << "\n";
    out << "seed " << alice.seed << "\n";
    for (std::uint64_t f = 0; f < alice.frame_count; ++f) {
        out << "frame " << f << " ";
        for (std::uint32_t s = 0; s < alice.symbols_per_frame; ++s) {
            switch (alice.symbol(f, s)) {
                case CowSymbol::Bit0: out << '0'; break;
                case CowSymbol::Bit1: out << '1'; break;
                case CowSymbol::Decoy: out << 'D'; break;
            }
        }
        out << "\n";
    }
}

void write_transcript(const BobReport& report, std::ostream& out) {
    out << "# hcqkd bob transcript v1\n";
    out << "start " << report.start_counter << "\n";
    out << "frames " << report.frame_count << "\n";
    for (const auto& d : report.data)
        out << "data " << d.frame << " " << d.symbol << " " << int(d.parity) << "\n";
    for (const auto& m : report.monitor)
        out << "mon " << m.frame << " " << m.slot << "\n";
}

namespace {
std::string expect_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw ProtocolError(std::string("transcript: missing ") + what);
    return line;
}
}  // namespace

AliceRecord parse_alice_transcript(std::istream& in) {
    if (expect_line(in, "header") != "# hcqkd alice transcript v1")
        throw ProtocolError("transcript: bad alice header");
    AliceRecord rec;
    std::string key;
    std::istringstream(expect_line(in, "start")) >> key >> rec.start_counter;
    std::istringstream(expect_line(in, "frames")) >> key >> rec.frame_count;
    std::istringstream(expect_line(in, "spf")) >> key >> rec.symbols_per_frame;
    std::istringstream(expect_line(in, "mu")) >> key >> rec.mu;
    std::istringstream(expect_line(in, "seed")) >> key >> rec.seed;
    rec.symbols.reserve(rec.frame_count * rec.symbols_per_frame);
    for (std::uint64_t f = 0; f < rec.frame_count; ++f) {
        std::istringstream row(expect_line(in, "frame row"));
        std::uint64_t index;
        std::string pattern;
        row >> key >> index >> pattern;
        if (key != "frame" || index != f || pattern.size() != rec.symbols_per_frame)
            throw ProtocolError("transcript: malformed alice frame row");
        for (char c : pattern) {
            switch (c) {
                case '0': rec.symbols.push_back(CowSymbol::Bit0); break;
                case '1': rec.symbols.push_back(CowSymbol::Bit1); break;
                case 'D': rec.symbols.push_back(CowSymbol::Decoy); break;
                default: throw ProtocolError("transcript: unknown symbol code");
            }
        }
    }
    return rec;
}

BobReport parse_bob_transcript(std::istream& in) {
    if (expect_line(in, "header") != "# hcqkd bob transcript v1")
        throw ProtocolError("transcript: bad bob header");
    BobReport rep;
    std::string key;
    std::istringstream(expect_line(in, "start")) >> key >> rep.start_counter;
    std::istringstream(expect_line(in, "frames")) >> key >> rep.frame_count;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        row >> key;
        if (key == "data") {
            DataDetection d;
            int parity;
            row >> d.frame >> d.symbol >> parity;
            d.parity = static_cast<std::uint8_t>(parity);
            rep.data.push_back(d);
        } else if (key == "mon") {
            MonitorDetection m;
            row >> m.frame >> m.slot;
            rep.monitor.push_back(m);
        } else {
            throw ProtocolError("transcript: unknown bob row '" + key + "'");
        }
    }
    return rep;
}

}  // namespace hcqkd
