#include "hcqkd/distill.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "hcqkd/errors.hpp"
#include "hcqkd/rng.hpp"
#include "hcqkd/units.hpp"

namespace hcqkd {

std::size_t BitVec::hamming_distance(const BitVec& other) const {
    if (bits_ != other.bits_)
        throw std::invalid_argument("BitVec: length mismatch in hamming_distance");
    std::size_t d = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
        d += std::popcount(words_[w] ^ other.words_[w]);
    return d;
}

std::pair<SiftedKey, SiftedKey> sift(const AliceRecord& alice, const BobReport& report) {
    SiftedKey ka{Owner::Alice, {}, {}};
    SiftedKey kb{Owner::Bob, {}, {}};
    for (const auto& d : report.data) {
        if (d.frame >= alice.frame_count || d.symbol >= alice.symbols_per_frame ||
            d.parity > 1)
            throw ProtocolError("sift: detection outside Alice's record");
        const CowSymbol sym = alice.symbol(d.frame, d.symbol);
        if (sym == CowSymbol::Decoy) continue;
        ka.bits.push_back(sym == CowSymbol::Bit1);
        kb.bits.push_back(d.parity != 0);
        ka.origins.push_back(d);
        kb.origins.push_back(d);
    }
    return {std::move(ka), std::move(kb)};
}

namespace {

BitVec remove_indices(const BitVec& bits, const std::vector<std::size_t>& sorted_drop) {
    BitVec out;
    std::size_t next = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (next < sorted_drop.size() && sorted_drop[next] == i) {
            ++next;
            continue;
        }
        out.push_back(bits.get(i));
    }
    return out;
}

}  // namespace

ParamEstimate estimate(SiftedKey& alice, SiftedKey& bob, const MonitorSummary& monitor,
                       double sample_fraction, std::uint64_t seed,
                       std::size_t floor_bits) {
    if (!(sample_fraction > 0.0 && sample_fraction < 1.0))
        throw std::domain_error("estimate: sample fraction outside (0,1)");
    if (alice.bits.size() != bob.bits.size())
        throw ProtocolError("estimate: sifted keys have different lengths");
    const std::size_t n = alice.bits.size();
    if (n < floor_bits)
        throw InsufficientDataError("estimate: sifted key below the estimation floor");

    std::size_t k = static_cast<std::size_t>(
        std::llround(sample_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n - 1);

    // Partial Fisher-Yates draw of k distinct positions.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(n - i))]);
    std::vector<std::size_t> disclosed(idx.begin(), idx.begin() + k);
    std::sort(disclosed.begin(), disclosed.end());

    std::size_t mismatches = 0;
    for (std::size_t i : disclosed)
        if (alice.bits.get(i) != bob.bits.get(i)) ++mismatches;

    ParamEstimate est;
    est.qber_est = static_cast<double>(mismatches) / static_cast<double>(k);
    est.sample_size = k;
    est.disclosed = disclosed;
    if (monitor.duration_s > 0.0 && monitor.reference_rate_hz > 0.0) {
        const double observed =
            static_cast<double>(monitor.clicks) / monitor.duration_s;
        est.visibility_est =
            std::clamp(1.0 - observed / monitor.reference_rate_hz, 0.0, 1.0);
    } else {
        est.visibility_est = 1.0;
    }

    alice.bits = remove_indices(alice.bits, disclosed);
    bob.bits = remove_indices(bob.bits, disclosed);
    auto drop_origins = [&](std::vector<DataDetection>& origins) {
        if (origins.size() != n) return;  // keys built without origin metadata
        std::vector<DataDetection> kept;
        kept.reserve(origins.size() - k);
        std::size_t next = 0;
        for (std::size_t i = 0; i < origins.size(); ++i) {
            if (next < disclosed.size() && disclosed[next] == i) {
                ++next;
                continue;
            }
            kept.push_back(origins[i]);
        }
        origins = std::move(kept);
    };
    drop_origins(alice.origins);
    drop_origins(bob.origins);
    return est;
}

double secret_fraction(double qber, double visibility, double f_ec,
                       const std::string& strategy) {
    if (qber < 0.0 || qber > 1.0) throw std::domain_error("secret_fraction: bad QBER");
    if (visibility < 0.0 || visibility > 1.0)
        throw std::domain_error("secret_fraction: bad visibility");
    if (f_ec < 1.0) throw std::domain_error("secret_fraction: f_ec must be >= 1");
    if (strategy == "h2-leakage")
        return std::max(0.0, 1.0 - f_ec * binary_entropy(qber) - (1.0 - visibility));
    if (strategy == "qber-only")
        return std::max(0.0, 1.0 - f_ec * binary_entropy(qber));
    throw ConfigError("secret_fraction: unknown strategy '" + strategy + "'");
}

BitVec toeplitz_diagonals(std::size_t key_length, std::size_t out_length,
                          std::uint64_t seed) {
    const std::size_t n_bits = out_length + key_length - 1;
    BitVec s(n_bits);
    Rng rng(seed);
    // Fill whole words; BitVec keeps bits past n_bits zero via set().
    for (std::size_t i = 0; i < n_bits; i += 64) {
        std::uint64_t word = rng.next();
        for (std::size_t b = 0; b < 64 && i + b < n_bits; ++b)
            s.set(i + b, (word >> b) & 1u);
    }
    return s;
}

namespace {

// Output bit i is the parity of the n-bit window of the diagonal sequence
// starting at i, ANDed with the reversed key.
std::uint8_t toeplitz_bit(const std::vector<std::uint64_t>& s_words,
                          const std::vector<std::uint64_t>& krev_words,
                          std::size_t n, std::size_t i) {
    std::uint64_t acc = 0;
    const std::size_t words = (n + 63) / 64;
    for (std::size_t w = 0; w < words; ++w) {
        const std::size_t bit = i + 64 * w;
        const std::size_t q = bit >> 6;
        const unsigned r = bit & 63;
        std::uint64_t window = s_words[q] >> r;
        if (r != 0 && q + 1 < s_words.size()) window |= s_words[q + 1] << (64 - r);
        acc ^= window & krev_words[w];
    }
    return static_cast<std::uint8_t>(std::popcount(acc) & 1);
}

}  // namespace

SecureKey privacy_amplify(const BitVec& key, std::size_t out_length, std::uint64_t seed,
                          Exec exec) {
    const std::size_t n = key.size();
    if (out_length > n)
        throw std::domain_error("privacy_amplify: output longer than input key");
    SecureKey out;
    out.hash_seed = seed;
    out.bits = BitVec(out_length);
    if (out_length == 0 || n == 0) return out;

    const BitVec s = toeplitz_diagonals(n, out_length, seed);
    // One spare zero word so unaligned window reads never run off the end.
    std::vector<std::uint64_t> s_words = s.words();
    s_words.push_back(0);

    BitVec krev(n);
    for (std::size_t j = 0; j < n; ++j) krev.set(j, key.get(n - 1 - j));
    const std::vector<std::uint64_t>& krev_words = krev.words();

    // Each thread owns whole 64-bit output words, so writes never race.
    auto fill_word = [&](std::size_t w) {
        std::uint64_t word = 0;
        const std::size_t hi = std::min(out_length, (w + 1) * 64);
        for (std::size_t i = w * 64; i < hi; ++i)
            word |= static_cast<std::uint64_t>(toeplitz_bit(s_words, krev_words, n, i))
                    << (i & 63);
        return word;
    };
    const std::size_t out_words = (out_length + 63) / 64;
    std::vector<std::uint64_t> result(out_words);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t w = 0; w < static_cast<std::int64_t>(out_words); ++w)
            result[w] = fill_word(static_cast<std::size_t>(w));
    } else {
        for (std::size_t w = 0; w < out_words; ++w) result[w] = fill_word(w);
    }
    for (std::size_t i = 0; i < out_length; ++i)
        out.bits.set(i, (result[i >> 6] >> (i & 63)) & 1u);
    return out;
}

SecureKey privacy_amplify_reference(const BitVec& key, std::size_t out_length,
                                    std::uint64_t seed) {
    const std::size_t n = key.size();
    if (out_length > n)
        throw std::domain_error("privacy_amplify: output longer than input key");
    SecureKey out;
    out.hash_seed = seed;
    out.bits = BitVec(out_length);
    if (out_length == 0 || n == 0) return out;
    const BitVec s = toeplitz_diagonals(n, out_length, seed);
    for (std::size_t i = 0; i < out_length; ++i) {
        int parity = 0;
        for (std::size_t j = 0; j < n; ++j)
            parity ^= (s.get(i + (n - 1 - j)) & key.get(j)) ? 1 : 0;
        out.bits.set(i, parity != 0);
    }
    return out;
}

double secure_key_rate(double r_sift_hz, const ParamEstimate& est, double sample_fraction,
                       double f_ec, const std::string& strategy) {
    if (r_sift_hz < 0.0) throw std::domain_error("secure_key_rate: negative sifted rate");
    if (sample_fraction < 0.0 || sample_fraction >= 1.0)
        throw std::domain_error("secure_key_rate: sample fraction outside [0,1)");
    return r_sift_hz * (1.0 - sample_fraction) *
           secret_fraction(est.qber_est, est.visibility_est, f_ec, strategy);
}

double aes_budget(double link_capacity_bps, double key_bits, double data_limit_bytes) {
    if (!(link_capacity_bps > 0.0))
        throw std::domain_error("aes_budget: capacity must be > 0");
    return key_bits * (link_capacity_bps / 8.0) / data_limit_bytes;
}

void write_key(const SecureKey& key, std::ostream& out) {
    out << "bits " << key.bits.size() << "\n";
    out << "seed " << key.hash_seed << "\n";
    static const char* hex = "0123456789abcdef";
    const std::size_t bytes = (key.bits.size() + 7) / 8;
    for (std::size_t b = 0; b < bytes; ++b) {
        unsigned v = 0;
        for (unsigned bit = 0; bit < 8; ++bit) {
            const std::size_t i = b * 8 + bit;
            if (i < key.bits.size() && key.bits.get(i)) v |= 1u << bit;
        }
        out << hex[v >> 4] << hex[v & 15];
    }
    out << "\n";
}

SecureKey read_key(std::istream& in) {
    std::string key_word;
    std::size_t bits;
    std::uint64_t seed;
    std::string hex;
    in >> key_word >> bits;
    if (key_word != "bits") throw ProtocolError("read_key: missing length header");
    in >> key_word >> seed;
    if (key_word != "seed") throw ProtocolError("read_key: missing seed header");
    in >> hex;
    if (hex.size() != 2 * ((bits + 7) / 8))
        throw ProtocolError("read_key: hex payload length mismatch");
    SecureKey key;
    key.hash_seed = seed;
    key.bits = BitVec(bits);
    auto nibble = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        throw ProtocolError("read_key: bad hex digit");
    };
    for (std::size_t i = 0; i < bits; ++i) {
        const unsigned byte = (nibble(hex[2 * (i / 8)]) << 4) | nibble(hex[2 * (i / 8) + 1]);
        key.bits.set(i, (byte >> (i % 8)) & 1u);
    }
    return key;
}

}  // namespace hcqkd
