#pragma once

#include <stdexcept>
#include <string>

namespace cqnls {

// Error taxonomy, mapped to process exit codes by the CLI:
//   ConfigError / UsageError / InputError -> 2
//   MissingArtifactError                  -> 3
//   NumericError and subclasses           -> 4
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoGroundStateError : NumericError {
    using NumericError::NumericError;
};
struct SpectralFailureError : NumericError {
    using NumericError::NumericError;
};
struct GaugeDegenerateError : NumericError {
    using NumericError::NumericError;
};
struct ProjectionError : NumericError {
    using NumericError::NumericError;
};
struct ResonanceError : NumericError {
    using NumericError::NumericError;
};

// warning sink, replaceable in tests / silenced in sweeps
void log_warn(const std::string& msg);
void set_warn_enabled(bool on);

} // namespace cqnls
