#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hcqkd/cow.hpp"
#include "hcqkd/exec.hpp"

namespace hcqkd {

/// Word-packed bit sequence used for key material.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    std::size_t size() const { return bits_; }
    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool v) {
        const std::uint64_t mask = 1ULL << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }
    void push_back(bool v) {
        if (bits_ % 64 == 0) words_.push_back(0);
        ++bits_;
        set(bits_ - 1, v);
    }
    const std::vector<std::uint64_t>& words() const { return words_; }

    std::size_t hamming_distance(const BitVec& other) const;
    friend bool operator==(const BitVec&, const BitVec&) = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

enum class Owner : std::uint8_t { Alice, Bob };

struct SiftedKey {
    Owner owner = Owner::Alice;
    BitVec bits;
    // Origin of each bit, aligned between the two owners.
    std::vector<DataDetection> origins;
};

struct MonitorSummary {
    std::uint64_t clicks = 0;
    double duration_s = 0.0;
    double reference_rate_hz = 0.0;  // expected destructive-port rate at V=0
};

struct ParamEstimate {
    double qber_est = 0.0;
    double visibility_est = 0.0;
    std::size_t sample_size = 0;
    std::vector<std::size_t> disclosed;  // indices into the pre-estimation key
};

struct SecureKey {
    BitVec bits;
    std::uint64_t hash_seed = 0;
};

/// Bob announces detected data-line positions; Alice drops her decoys; both
/// keep the surviving bits in announcement order.
std::pair<SiftedKey, SiftedKey> sift(const AliceRecord& alice, const BobReport& report);

/// Disclose a uniform sample for the QBER estimate and remove it from both
/// keys; fold the monitor counts into a visibility estimate.
ParamEstimate estimate(SiftedKey& alice, SiftedKey& bob, const MonitorSummary& monitor,
                       double sample_fraction, std::uint64_t seed,
                       std::size_t floor_bits = 100);

/// Named secret-fraction strategies. "h2-leakage" (default):
/// max(0, 1 - f_ec*h2(q) - (1 - v)). "qber-only" ignores visibility.
/// These are documented accounting heuristics, not proof-backed bounds.
double secret_fraction(double qber, double visibility, double f_ec,
                       const std::string& strategy = "h2-leakage");

/// Toeplitz extractor over GF(2): out = T*key with T generated from a seeded
/// pseudorandom bit stream of length out+n-1, T[i][j] = s[i-j+n-1].
SecureKey privacy_amplify(const BitVec& key, std::size_t out_length, std::uint64_t seed,
                          Exec exec = Exec::Parallel);

/// Naive bit-at-a-time evaluation of the same matrix; reference lane.
SecureKey privacy_amplify_reference(const BitVec& key, std::size_t out_length,
                                    std::uint64_t seed);

/// The Toeplitz diagonal-generator bits for (n, out, seed); exposed so tests
/// can enumerate T explicitly.
BitVec toeplitz_diagonals(std::size_t key_length, std::size_t out_length,
                          std::uint64_t seed);

double secure_key_rate(double r_sift_hz, const ParamEstimate& est, double sample_fraction,
                       double f_ec, const std::string& strategy = "h2-leakage");

/// Key rate needed to re-key AES-`key_bits` every `data_limit_bytes` of
/// traffic on a `link_capacity_bps` link.
double aes_budget(double link_capacity_bps, double key_bits = 256.0,
                  double data_limit_bytes = 64e9);

// Hex export with a length header; the Toeplitz seed rides along for replay.
void write_key(const SecureKey& key, std::ostream& out);
SecureKey read_key(std::istream& in);

}  // namespace hcqkd
