#pragma once

#include "cvbias/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cvbias::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNumericalFailure = 3,
    kReliabilityTrip = 4,
};

struct CommonOptions {
    std::filesystem::path config_path;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    int threads = 1;
    bool crosscheck = false;
    bool allow_unreliable = false;
};

/// Load the config and apply command-line overrides.
config::ExperimentConfig resolve_config(const CommonOptions& options);

/// SHA-256 of the canonical dump of the resolved config, as lowercase hex.
std::string config_hash(const config::ExperimentConfig& config);

// Each command writes its artifacts plus a manifest and throws on failure.
void cmd_simulate(const CommonOptions& options);
void cmd_decompose(const CommonOptions& options);
void cmd_bias(const CommonOptions& options);
void cmd_select(const CommonOptions& options);
void cmd_sweep(const CommonOptions& options);

/// Entry point: parses argv, dispatches, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cvbias::cli
