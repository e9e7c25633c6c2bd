#pragma once

#include <stdexcept>
#include <string>

namespace twrn {

// Base of every failure raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter or arrival rate outside its admissible range.
struct ValidationError : Error {
    using Error::Error;
};

// Operation requested in a mode that does not define it.
struct UnsupportedModeError : Error {
    using Error::Error;
};

// Negative buffer occupancy or inconsistent state/arrival combination.
struct InvalidStateError : Error {
    using Error::Error;
};

// A chain (or one of the coupled chains) has no stationary distribution.
struct UnstableChainError : Error {
    explicit UnstableChainError(const std::string& msg, std::string chain = {})
        : Error(msg), chain_name(std::move(chain)) {}
    std::string chain_name;
};

// Delay requested for a system with backlog but zero throughput.
struct UndefinedDelayError : Error {
    using Error::Error;
};

// Requested state space exceeds the configured memory budget.
struct SizeError : Error {
    using Error::Error;
};

// Stationary solve hit a reducible / degenerate transition structure.
struct DecompositionError : Error {
    using Error::Error;
};

// Boundary tracing found the relay saturating before either end node.
struct SaturationOrderError : Error {
    using Error::Error;
};

// Config file or flag set could not be interpreted.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace twrn
