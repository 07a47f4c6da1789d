#pragma once

#include <stdexcept>
#include <string>

namespace hcqkd {

// Scenario/file wiring problems (missing quantum channel, bad config keys...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Endpoint frame counters disagree.
struct SyncError : std::runtime_error {
    explicit SyncError(const std::string& what) : std::runtime_error(what) {}
};

// A message referenced data the peer never produced.
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Not enough sifted material to estimate parameters.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

// Calibration anchor cannot be met inside the parameter bracket.
struct AnchorUnreachableError : std::runtime_error {
    explicit AnchorUnreachableError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hcqkd
