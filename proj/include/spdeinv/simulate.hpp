#pragma once

#include "spdeinv/manifold.hpp"
#include "spdeinv/spde_models.hpp"
#include "spdeinv/tangency.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spdeinv {

/// Counter-based Gaussian stream: the draw for (path, step, j) depends on
/// nothing else, so extending J or splitting paths across threads leaves every
/// other draw unchanged.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    double normal(std::uint64_t path, std::uint64_t step, std::uint64_t j) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

struct SimConfig {
    double horizon = 1.0;
    double dt = 1e-3;
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    /// Each Wiener increment is the sum of this many draws on a grid of dt / substeps.
    /// A run at dt with 2 substeps shares its Brownian path with a run at dt / 2.
    int noise_substeps = 1;
    /// Share Wiener increments between the full and reduced simulations.
    bool coupling = true;
    /// Record every k-th step (the final step is always recorded).
    std::size_t record_every = 1;
    /// H-norm above which a full path is declared exploded.
    double explosion_ceiling = 1e8;
    unsigned threads = 1;

    std::size_t steps() const;
    void validate() const;
};

/// Wiener increment Delta W_k^j of path `path` over step k.
double wiener_increment(const NoiseStream& noise, const SimConfig& cfg, std::size_t path, std::size_t step, std::size_t j);

struct FullPath {
    std::vector<double> times;
    std::vector<State> states;
    bool exploded = false;
    double exit_time = 0.0;
};

/// Euler-Maruyama for the Galerkin system: Y_{k+1} = P_N(Y_k + L(Y_k) dt + sum_j A^j(Y_k) dW_k^j),
/// with P_N the truncation to the order of y0.
FullPath simulate_full(const SpdeModel& model, const State& y0, const SimConfig& cfg, std::size_t path = 0);

struct ReducedPath {
    std::vector<double> times;
    std::vector<ChartPoint> points;
    bool exited = false;
    double exit_time = 0.0;
};

/// Euler-Maruyama for dx = beta(x) dt + sum_j a^j(x) dW^j with coefficients from the tangency checker.
/// Stops, flagged, when x leaves the chart domain.
ReducedPath simulate_reduced(const SpdeModel& model, const Parametrization& param, std::span<const double> x0,
                             const SimConfig& cfg, std::size_t path = 0, const TangencyOptions& options = {});

struct TrajectoryRecord {
    std::size_t path = 0;
    std::vector<double> times;
    std::vector<State> full;
    std::vector<ChartPoint> reduced;
    std::vector<State> lifted;
    /// Nearest chart point and distance of the full state to the manifold.
    std::vector<ChartPoint> nearest;
    std::vector<double> distance;
    std::vector<bool> distance_converged;
    /// ||Y_t - phi(x_t)||_H.
    std::vector<double> coupled_error;
    bool exploded = false;
    bool exited = false;
    /// min(horizon, chart exit, explosion).
    double lifetime = 0.0;
};

struct CompareOptions {
    TangencyOptions tangency;
    GaussNewtonOptions gauss_newton;
    /// Skip the reduced run (negative controls); the coupled error is then empty.
    bool run_reduced = true;
};

struct CompareSummary {
    double max_distance = 0.0;
    double mean_distance = 0.0;
    double max_coupled_error = 0.0;
    double mean_coupled_error = 0.0;
    std::size_t exploded_paths = 0;
    std::size_t exited_paths = 0;
    std::size_t unconverged_distances = 0;
};

struct CoupledResult {
    std::vector<TrajectoryRecord> paths;
    CompareSummary summary;
};

/// Runs the full and reduced simulations from y0 = phi(x0) on shared increments for every path.
CoupledResult coupled_compare(const SpdeModel& model, const Parametrization& param, std::span<const double> x0,
                              const SimConfig& cfg, const CompareOptions& options = {});

/// Tidy CSV: one row per path per recorded time.
std::string trajectories_csv(const CoupledResult& result, double q);

}  // namespace spdeinv
