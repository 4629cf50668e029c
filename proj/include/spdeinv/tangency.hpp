#pragma once

#include "spdeinv/manifold.hpp"
#include "spdeinv/spde_models.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdeinv {

enum class DriftForm { bracket, stratonovich };

/// Raised when the bracket and Stratonovich forms of the drift condition disagree.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TangencyOptions {
    ManifoldOptions manifold;
    /// Working truncation order for Hermite states; components above it are spill.
    /// Negative means "the order of phi(x)".
    int working_order = -1;
    double threshold = 1e-6;
    /// Hermite models use max(threshold, spill_factor * spill).
    double spill_factor = 10.0;
    DaMode da_mode = DaMode::analytic;
    StratonovichOptions stratonovich;
    /// Step for the finite-difference derivative of x -> a^j(x) in the Stratonovich form.
    double coefficient_fd_step = 1e-4;
    /// Bracket and Stratonovich forms must agree to this (residuals and beta).
    double form_tolerance = 1e-4;
};

struct DiffusionCheck {
    /// a^j(x) = Dphi(x)^{-1} A^j(phi(x)), one row per j.
    std::vector<std::vector<double>> coefficients;
    /// Relative H-norm of the normal component of A^j(phi(x)).
    std::vector<double> residuals;
    /// Relative H-norm of the components of A^j above the working order.
    std::vector<double> spill;
};

struct DriftCheck {
    std::vector<double> beta;
    double residual = 0.0;
    double spill = 0.0;
    DriftForm form = DriftForm::bracket;
};

/// Diffusion tangency at a chart point: every A^j(phi(x)) must lie in the tangent space.
DiffusionCheck check_diffusion_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                        const TangencyOptions& options = {});

/// Drift tangency at a chart point, in bracket or Stratonovich form.
DriftCheck check_drift_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                DriftForm form, const TangencyOptions& options = {});
DriftCheck check_drift_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                const DiffusionCheck& diffusion, DriftForm form, const TangencyOptions& options = {});

/// Reduced coefficients a^j(x), beta(x) of the coordinate SDE dx = beta dt + sum_j a^j dW^j.
struct ReducedCoefficients {
    std::vector<std::vector<double>> a;
    std::vector<double> beta;
};

ReducedCoefficients reduced_coefficients(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                         const TangencyOptions& options = {});

struct SamplingSpec {
    enum class Kind { lattice, halton, points };
    Kind kind = Kind::lattice;
    /// Lattice points per axis; 0 picks the default 11 per axis for m <= 2.
    std::size_t points_per_axis = 0;
    /// Total points for Halton sampling; 0 picks 121.
    std::size_t count = 0;
    /// Explicit chart points for Kind::points.
    std::vector<ChartPoint> points;
};

/// Cell-centred lattice or Halton points strictly inside the chart domain, or
/// the explicit list. Throws when the spec yields no points.
std::vector<ChartPoint> sample_points(const ChartBox& box, const SamplingSpec& spec);

enum class Verdict { tangent, not_tangent, inconclusive };
std::string to_string(Verdict verdict);

struct PointResult {
    ChartPoint x;
    bool ok = true;
    std::string error;
    DiffusionCheck diffusion;
    DriftCheck drift;
    /// Drift check in the other form when both were requested.
    std::optional<DriftCheck> drift_alternate;
    double threshold = 0.0;
    double max_residual = 0.0;
};

struct TangencyReport {
    std::vector<PointResult> points;
    std::vector<std::string> forms;
    double base_threshold = 0.0;
    double spill_factor = 0.0;
    double max_diffusion_residual = 0.0;
    double max_drift_residual = 0.0;
    double max_residual = 0.0;
    double max_spill = 0.0;
    /// Largest |bracket - stratonovich| drift residual difference, when both forms ran.
    double max_form_disagreement = 0.0;
    std::size_t failed_points = 0;
    Verdict verdict = Verdict::inconclusive;

    nlohmann::json to_json() const;
    /// One row per sample point per noise index j.
    std::string to_csv() const;
};

struct SweepOptions {
    TangencyOptions tangency;
    bool both_forms = false;
    DriftForm form = DriftForm::bracket;
    /// Worker threads for the point sweep; results do not depend on it.
    unsigned threads = 1;
};

/// Runs both conditions at every sample point and aggregates a verdict.
TangencyReport sweep(const SpdeModel& model, const Parametrization& param, const SamplingSpec& sampling,
                     const SweepOptions& options = {});

}  // namespace spdeinv
