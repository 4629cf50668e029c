#pragma once

#include "spdeinv/function_space.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdeinv {

using ChartPoint = std::vector<double>;

/// Axis-aligned chart domain in R^m.
struct ChartBox {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    bool contains(std::span<const double> x, double margin = 0.0) const;
    ChartPoint clamp(ChartPoint x) const;
};

enum class ChartKind { translation_group, linear_span, custom };

std::string to_string(ChartKind kind);

/// Thrown when Dphi(x) loses rank.
class DegenerateChart : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Symmetric m x m array of second derivatives, stored row major.
struct Hessian {
    std::size_t m = 0;
    std::vector<State> entries;

    const State& operator()(std::size_t k, std::size_t l) const { return entries[k * m + l]; }
};

/// Local parametrization phi : V -> U cap M of a finite-dimensional submanifold.
class Parametrization {
public:
    virtual ~Parametrization() = default;

    virtual std::size_t dim() const = 0;
    virtual const ChartBox& domain() const = 0;
    virtual State eval(std::span<const double> x) const = 0;
    virtual ChartKind kind() const = 0;

    /// Analytic Dphi(x) as m tangent states; empty when not supplied.
    virtual std::optional<std::vector<State>> jacobian(std::span<const double>) const { return std::nullopt; }
    /// Analytic D^2 phi(x); empty when not supplied.
    virtual std::optional<Hessian> hessian(std::span<const double>) const { return std::nullopt; }

    virtual nlohmann::json to_json() const = 0;
};

/// phi(x) = sum_i x_i v_i.
class LinearSpanChart final : public Parametrization {
public:
    LinearSpanChart(std::vector<State> spanning, ChartBox domain);

    std::size_t dim() const override { return spanning_.size(); }
    const ChartBox& domain() const override { return domain_; }
    State eval(std::span<const double> x) const override;
    ChartKind kind() const override { return ChartKind::linear_span; }
    std::optional<std::vector<State>> jacobian(std::span<const double>) const override { return spanning_; }
    std::optional<Hessian> hessian(std::span<const double>) const override;
    nlohmann::json to_json() const override;

    const std::vector<State>& spanning() const { return spanning_; }

private:
    std::vector<State> spanning_;
    ChartBox domain_;
};

/// phi(x) = tau_x Phi for x in R^d, computed at the profile's truncation order.
///
/// The analytic derivatives are those of the truncated map, -D_i phi(x) and
/// D_k D_l phi(x) with D truncated at the working order. For d > 1 the truncated
/// derivatives do not commute exactly and the analytic frame is accurate only up
/// to the top-order band.
class TranslationChart final : public Parametrization {
public:
    TranslationChart(State profile, ChartBox domain);

    std::size_t dim() const override { return static_cast<std::size_t>(profile_.dim()); }
    const ChartBox& domain() const override { return domain_; }
    State eval(std::span<const double> x) const override;
    ChartKind kind() const override { return ChartKind::translation_group; }
    std::optional<std::vector<State>> jacobian(std::span<const double> x) const override;
    std::optional<Hessian> hessian(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    const State& profile() const { return profile_; }

private:
    State profile_;
    ChartBox domain_;
};

/// Chart supplied as callables; derivatives fall back to finite differences when absent.
class CustomChart final : public Parametrization {
public:
    using EvalFn = std::function<State(std::span<const double>)>;
    using JacobianFn = std::function<std::vector<State>(std::span<const double>)>;
    using HessianFn = std::function<Hessian(std::span<const double>)>;

    CustomChart(std::size_t m, ChartBox domain, EvalFn eval, JacobianFn jacobian = {}, HessianFn hessian = {});

    std::size_t dim() const override { return m_; }
    const ChartBox& domain() const override { return domain_; }
    State eval(std::span<const double> x) const override { return eval_(x); }
    ChartKind kind() const override { return ChartKind::custom; }
    std::optional<std::vector<State>> jacobian(std::span<const double> x) const override;
    std::optional<Hessian> hessian(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

private:
    std::size_t m_;
    ChartBox domain_;
    EvalFn eval_;
    JacobianFn jacobian_;
    HessianFn hessian_;
};

struct ManifoldOptions {
    /// Regularity of the inner product used for projections (the H level).
    double q = 0.5;
    double fd_jacobian_step = 1e-4;
    double fd_hessian_step = 1e-3;
    /// Degenerate when sigma_min / sigma_max falls below this (or sigma_max == 0).
    double rank_floor = 1e-10;
    double condition_warning = 1e10;
    /// Use analytic derivatives when the chart supplies them.
    bool prefer_analytic = true;
};

/// Tangent space T_{phi(x)}M spanned by the columns of Dphi(x).
class TangentFrame {
public:
    TangentFrame(ChartPoint base_point, std::vector<State> columns, double q, double rank_floor);

    const ChartPoint& base_point() const { return base_point_; }
    const std::vector<State>& columns() const { return columns_; }
    std::size_t dim() const { return columns_.size(); }
    double q() const { return q_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    double condition_number() const { return condition_; }
    double min_singular_value() const { return sigma_min_; }

    /// sum_k coords[k] * column_k.
    State apply(std::span<const double> coords) const;

private:
    ChartPoint base_point_;
    std::vector<State> columns_;
    double q_;
    Eigen::MatrixXd gram_;
    double condition_ = 1.0;
    double sigma_min_ = 0.0;
};

/// Dphi(x): analytic when available, otherwise central differences with step fd_jacobian_step.
TangentFrame jacobian(const Parametrization& param, std::span<const double> x, const ManifoldOptions& options = {});

/// Finite-difference Jacobian columns, regardless of analytic availability.
std::vector<State> fd_jacobian(const Parametrization& param, std::span<const double> x, double step);

/// D^2 phi(x): analytic when available, otherwise central differences with step fd_hessian_step.
Hessian hessian(const Parametrization& param, std::span<const double> x, const ManifoldOptions& options = {});

struct TangentCoordinates {
    std::vector<double> coords;
    /// ||v - Dphi coords|| in the frame's inner product.
    double residual = 0.0;
    /// ||v|| in the same inner product.
    double field_norm = 0.0;
    bool ill_conditioned = false;
};

/// Least-squares coordinates of `field_value` against the frame.
TangentCoordinates tangent_coordinates(const TangentFrame& frame, const State& field_value,
                                       double condition_warning = 1e10);

/// sum_{k,l} a_k b_l d^2 phi / dx_k dx_l (x).
State bracket(const Hessian& hess, std::span<const double> coords_a, std::span<const double> coords_b);
State bracket(const Parametrization& param, std::span<const double> x, std::span<const double> coords_a,
              std::span<const double> coords_b, const ManifoldOptions& options = {});

struct GaussNewtonOptions {
    int max_iterations = 50;
    double step_tolerance = 1e-12;
    /// Stationarity tolerance on the projected gradient, relative to ||y|| * ||Dphi||.
    double gradient_tolerance = 1e-8;
    /// Step-halving attempts per iteration.
    int max_halvings = 30;
};

struct DistanceResult {
    ChartPoint point;
    double distance = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// min over the chart domain of ||phi(x) - y||_q by damped Gauss-Newton from x0.
/// Iterates are clamped to the domain; a stationary point on the boundary with
/// outward gradient is reported as not converged.
DistanceResult distance_to_manifold(const Parametrization& param, const State& y, std::span<const double> x0,
                                    const ManifoldOptions& options = {}, const GaussNewtonOptions& gn = {});

/// Builds the weighted column matrix W^{1/2}[v_1 ... v_m] over a common index range.
Eigen::MatrixXd weighted_matrix(std::span<const State> columns, double q, std::size_t rows);
Eigen::VectorXd weighted_vector(const State& v, double q, std::size_t rows);

}  // namespace spdeinv
