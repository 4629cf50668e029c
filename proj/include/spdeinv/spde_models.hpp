#pragma once

#include "spdeinv/function_space.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spdeinv {

/// Coefficient pair (L, A) of an SPDE dY = L(Y) dt + sum_j A^j(Y) dW^j.
///
/// The Wiener process is truncated to `noise_dimension()` coordinates; the
/// remaining components of A are identically zero.
class SpdeModel {
public:
    virtual ~SpdeModel() = default;

    virtual State drift(const State& y) const = 0;
    virtual std::vector<State> diffusion(const State& y) const = 0;
    virtual std::size_t noise_dimension() const = 0;

    /// DA^j(y) u for every j, when an analytic derivative is available.
    virtual std::optional<std::vector<State>> diffusion_derivative(const State&, const State&) const { return std::nullopt; }

    /// Regularity of the middle space H, where tangency is measured.
    virtual double h_regularity() const { return 0.0; }

    virtual std::string kind() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

/// y -> offset + <dual, y>. The "constant" preset has a zero dual.
struct PairingFunctional {
    DualField dual;
    double offset = 0.0;

    double operator()(const State& y) const { return offset + pair(dual, y); }
    /// Derivative in direction u (the offset drops out).
    double linear_part(const State& u) const { return pair(dual, u); }

    static PairingFunctional constant(int dim, double value) { return {DualField::zero(dim, 0), value}; }
};

/// Ito-type coefficients on the Hermite-Sobolev scale:
///   L(y)   = 1/2 sum_{i,k} (S S^T)_{ik} d_i d_k y - sum_i <b_i, y> d_i y
///   A^j(y) = - sum_i <sigma_i^j, y> d_i y
/// with S_{ij} = <sigma_i^j, y>.
class ItoTypeModel final : public SpdeModel {
public:
    ItoTypeModel(int dim, double p, std::vector<PairingFunctional> b, std::vector<std::vector<PairingFunctional>> sigma);

    State drift(const State& y) const override;
    std::vector<State> diffusion(const State& y) const override;
    std::size_t noise_dimension() const override { return sigma_.size(); }
    std::optional<std::vector<State>> diffusion_derivative(const State& y, const State& u) const override;
    double h_regularity() const override { return scale_.q_h; }
    std::string kind() const override { return "ito"; }
    nlohmann::json to_json() const override;

    int dim() const { return dim_; }
    const NormScale& scale() const { return scale_; }
    /// sum_j sum_i ||sigma_i^j||^2 over the retained coefficients, at the dual order q_G.
    double sigma_square_sum() const;

private:
    int dim_;
    double p_;
    NormScale scale_;
    std::vector<PairingFunctional> b_;
    std::vector<std::vector<PairingFunctional>> sigma_;
};

/// A(y) = offset + scale * y: additive and multiplicative fields in one form.
struct AffineField {
    State offset;
    double scale = 0.0;

    State operator()(const State& y) const;
};

/// Stochastic p-Laplace equation on (0, 1) with homogeneous Dirichlet data,
/// discretised with face-centred gradients on a uniform grid of interior points.
class PLaplaceModel final : public SpdeModel {
public:
    PLaplaceModel(double p_exponent, std::size_t points, std::vector<AffineField> diffusion);

    State drift(const State& y) const override;
    std::vector<State> diffusion(const State& y) const override;
    std::size_t noise_dimension() const override { return diffusion_.size(); }
    std::optional<std::vector<State>> diffusion_derivative(const State& y, const State& u) const override;
    std::string kind() const override { return "plaplace"; }
    nlohmann::json to_json() const override;

    double exponent() const { return p_; }
    std::size_t points() const { return points_; }
    double spacing() const { return 1.0 / static_cast<double>(points_ + 1); }

    /// Discrete Dirichlet sine mode sin(k pi x_i) and its p = 2 eigenvalue -(2/h^2)(1 - cos(k pi h)).
    State sine_mode(int k) const;
    double laplacian_eigenvalue(int k) const;

private:
    double p_;
    std::size_t points_;
    std::vector<AffineField> diffusion_;
};

/// Linear drift with known eigenpairs (v_i, lambda_i).
class LinearEigenModel final : public SpdeModel {
public:
    using Operator = std::function<State(const State&)>;
    struct Eigenpair {
        State vector;
        double value = 0.0;
    };

    /// Throws when ||L v_i - lambda_i v_i|| / ||v_i|| exceeds `tolerance` for some pair.
    LinearEigenModel(Operator op, std::vector<Eigenpair> eigenpairs, std::vector<AffineField> diffusion,
                     double tolerance = 1e-10, std::string description = "linear");

    State drift(const State& y) const override { return op_(y); }
    std::vector<State> diffusion(const State& y) const override;
    std::size_t noise_dimension() const override { return diffusion_.size(); }
    std::optional<std::vector<State>> diffusion_derivative(const State& y, const State& u) const override;
    std::string kind() const override { return "linear_eigen"; }
    nlohmann::json to_json() const override;

    const std::vector<Eigenpair>& eigenpairs() const { return eigenpairs_; }
    const std::vector<double>& eigen_residuals() const { return residuals_; }

private:
    Operator op_;
    std::vector<Eigenpair> eigenpairs_;
    std::vector<AffineField> diffusion_;
    std::vector<double> residuals_;
    std::string description_;
};

/// Drift of `base` with the diffusion family replaced by fixed affine fields.
class ReplacedDiffusionModel final : public SpdeModel {
public:
    ReplacedDiffusionModel(std::shared_ptr<const SpdeModel> base, std::vector<AffineField> diffusion);

    State drift(const State& y) const override { return base_->drift(y); }
    std::vector<State> diffusion(const State& y) const override;
    std::size_t noise_dimension() const override { return diffusion_.size(); }
    std::optional<std::vector<State>> diffusion_derivative(const State& y, const State& u) const override;
    double h_regularity() const override { return base_->h_regularity(); }
    std::string kind() const override { return "replaced_diffusion"; }
    nlohmann::json to_json() const override;

private:
    std::shared_ptr<const SpdeModel> base_;
    std::vector<AffineField> diffusion_;
};

/// Discrete divergence of |grad y|^{p-2} grad y with zero Dirichlet values.
State plaplace_operator(const State& y, double p_exponent);

enum class DaMode { analytic, finite_difference };

struct StratonovichOptions {
    /// Relative step for the finite-difference directional derivative.
    double fd_step = 1e-4;
    /// Relative disagreement between steps h and h/2 above which the result is flagged.
    double sensitivity_tolerance = 1e-6;
};

struct StratonovichResult {
    /// sum_j DA^j(y) A^j(y).
    State value;
    double step_sensitivity = 0.0;
    bool step_sensitive = false;
};

/// sum_{j <= J} DA^j(y) A^j(y); the Stratonovich drift is L(y) - value / 2.
StratonovichResult stratonovich_correction(const SpdeModel& model, const State& y, DaMode mode,
                                           const StratonovichOptions& options = {});

/// DA^j(y) u by central differences with step `step`, for every j.
std::vector<State> fd_diffusion_derivative(const SpdeModel& model, const State& y, const State& u, double step);

}  // namespace spdeinv
