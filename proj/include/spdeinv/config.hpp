#pragma once

#include "spdeinv/manifold.hpp"
#include "spdeinv/simulate.hpp"
#include "spdeinv/spde_models.hpp"
#include "spdeinv/tangency.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdeinv {

inline constexpr const char* artifact_version = "0.1.0";

/// Malformed configuration; `key` names the offending JSON path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct CheckSettings {
    std::string form = "bracket";  // bracket | stratonovich | both
    std::string da_mode = "analytic";
    double threshold = 1e-6;
    double spill_factor = 10.0;
    double form_tolerance = 1e-4;
    SamplingSpec sampling;
};

struct SimulateSettings {
    double horizon = 1.0;
    double dt = 1e-3;
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    int noise_substeps = 1;
    bool coupling = true;
    bool run_reduced = true;
    std::size_t record_every = 1;
    double explosion_ceiling = 1e8;
    std::vector<double> x0;
};

/// Canonical run configuration. Model and manifold blocks stay JSON with all
/// defaults filled in; `build` turns them into objects.
struct Config {
    std::string preset;
    nlohmann::json model;
    nlohmann::json manifold;
    CheckSettings check;
    SimulateSettings simulate;
    unsigned threads = 1;
};

/// Names accepted under "preset".
std::vector<std::string> preset_names();
nlohmann::json preset(const std::string& name);

/// Expands "preset" (explicit keys are merge-patched over it) and validates every field.
Config parse_config(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);
nlohmann::json to_json(const Config& config);

struct Problem {
    std::shared_ptr<const SpdeModel> model;
    std::shared_ptr<const Parametrization> chart;
    SweepOptions sweep;
    SamplingSpec sampling;
    SimConfig sim;
    CompareOptions compare;
    std::vector<double> x0;
};

Problem build(const Config& config);

/// FNV-1a over the compact JSON dump, as 16 hex digits.
std::string content_hash(const nlohmann::json& doc);

}  // namespace spdeinv
