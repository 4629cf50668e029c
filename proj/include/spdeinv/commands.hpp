#pragma once

#include "spdeinv/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace spdeinv {

/// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_not_tangent = 2;

struct RunRequest {
    /// Either a config file or a preset name (the file wins when both are set).
    std::filesystem::path config_path;
    std::string preset;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

/// $SPDE_MANIFOLD_OUT, or ./spde_manifold_out.
std::filesystem::path default_output_root();

/// Loads the config named by the request and applies the --seed / --threads overrides.
Config resolve_config(const RunRequest& request);

/// Writes check-<hash>.report.json/.report.csv/.manifest.json.
/// Returns 0 for tangent, 2 for not tangent, 1 for errors or an inconclusive sweep.
int cmd_check(const RunRequest& request, std::ostream& out, std::ostream& err);

/// Writes simulate-<seed>-<hash>.csv and its manifest. Returns 0 on success, 1 on error.
int cmd_simulate(const RunRequest& request, std::ostream& out, std::ostream& err);

/// Aggregates every *.manifest.json under `run_dir` into summary.csv. Returns 1 when none exist.
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace spdeinv
