#pragma once

#include <stdexcept>
#include <string>

namespace stepwave {

// Error taxonomy mirrored by the CLI exit codes: config -> 2, solver -> 3,
// diagnostic -> 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DiagnosticError : std::runtime_error {
    explicit DiagnosticError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stepwave
