#include "spdeinv/spde_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdeinv {

namespace {

nlohmann::json functional_json(const PairingFunctional& f) {
    return {{"dual", to_json(f.dual.coefficients)}, {"offset", f.offset}};
}

nlohmann::json field_json(const AffineField& f) {
    return {{"offset", to_json(f.offset)}, {"scale", f.scale}};
}

State zero_like(const State& s) { return State(s.basis(), s.dim(), s.order()); }

}  // namespace

ItoTypeModel::ItoTypeModel(int dim, double p, std::vector<PairingFunctional> b,
                           std::vector<std::vector<PairingFunctional>> sigma)
    : dim_(dim), p_(p), scale_(NormScale::hermite_sobolev(p)), b_(std::move(b)), sigma_(std::move(sigma)) {
    if (dim_ < 1) throw std::invalid_argument("ito model: d must be positive");
    if (static_cast<int>(b_.size()) != dim_) throw std::invalid_argument("ito model: b must have d components");
    for (const auto& row : sigma_)
        if (static_cast<int>(row.size()) != dim_) throw std::invalid_argument("ito model: every sigma^j must have d components");
}

State ItoTypeModel::drift(const State& y) const {
    const int d = dim_;
    std::vector<std::vector<double>> s(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        for (const auto& row : sigma_) s[i].push_back(row[i](y));

    State out = State::hermite(d, y.order() + 2);
    std::vector<State> first;
    for (int i = 0; i < d; ++i) first.push_back(derivative(y, i));
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            double ssT = 0.0;
            for (std::size_t j = 0; j < sigma_.size(); ++j) ssT += s[i][j] * s[k][j];
            if (ssT != 0.0) out.add_scaled(0.5 * ssT, derivative(first[k], i));
        }
        const double beta = b_[i](y);
        if (beta != 0.0) out.add_scaled(-beta, first[i]);
    }
    return out;
}

std::vector<State> ItoTypeModel::diffusion(const State& y) const {
    std::vector<State> out;
    std::vector<State> first;
    for (int i = 0; i < dim_; ++i) first.push_back(derivative(y, i));
    for (const auto& row : sigma_) {
        State a = State::hermite(dim_, y.order() + 1);
        for (int i = 0; i < dim_; ++i) {
            const double s = row[i](y);
            if (s != 0.0) a.add_scaled(-s, first[i]);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::optional<std::vector<State>> ItoTypeModel::diffusion_derivative(const State& y, const State& u) const {
    // DA^j(y) u = - sum_i <sigma_i^j, u> d_i y - sum_i <sigma_i^j, y> d_i u
    std::vector<State> dy, du;
    for (int i = 0; i < dim_; ++i) {
        dy.push_back(derivative(y, i));
        du.push_back(derivative(u, i));
    }
    std::vector<State> out;
    for (const auto& row : sigma_) {
        State v = State::hermite(dim_, std::max(y.order(), u.order()) + 1);
        for (int i = 0; i < dim_; ++i) {
            v.add_scaled(-row[i].linear_part(u), dy[i]);
            v.add_scaled(-row[i](y), du[i]);
        }
        out.push_back(std::move(v));
    }
    return out;
}

double ItoTypeModel::sigma_square_sum() const {
    double sum = 0.0;
    for (const auto& row : sigma_)
        for (const auto& f : row) {
            const double n = level_norm(f.dual.coefficients, -scale_.q_g);
            sum += n * n + f.offset * f.offset;
        }
    return sum;
}

nlohmann::json ItoTypeModel::to_json() const {
    nlohmann::json b = nlohmann::json::array();
    for (const auto& f : b_) b.push_back(functional_json(f));
    nlohmann::json sigma = nlohmann::json::array();
    for (const auto& row : sigma_) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& f : row) r.push_back(functional_json(f));
        sigma.push_back(r);
    }
    return {{"kind", kind()}, {"d", dim_}, {"p", p_}, {"J", sigma_.size()}, {"b", b}, {"sigma", sigma}};
}

State AffineField::operator()(const State& y) const {
    State out = offset;
    if (scale != 0.0) out.add_scaled(scale, y);
    if (out.size() == 0) out = zero_like(y);
    return out;
}

State plaplace_operator(const State& y, double p_exponent) {
    if (y.basis() != Basis::sine_grid) throw std::invalid_argument("p-Laplacian acts on grid states");
    const std::size_t n = y.size();
    const double h = y.grid_spacing();
    auto value = [&](std::ptrdiff_t i) { return (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) ? 0.0 : y[static_cast<std::size_t>(i)]; };
    // Flux on face i - 1/2 between nodes i - 1 and i, for i = 0..n.
    std::vector<double> flux(n + 1);
    for (std::size_t f = 0; f <= n; ++f) {
        const auto i = static_cast<std::ptrdiff_t>(f);
        const double g = (value(i) - value(i - 1)) / h;
        flux[f] = p_exponent == 2.0 ? g : std::pow(std::abs(g), p_exponent - 2.0) * g;
    }
    State out = zero_like(y);
    for (std::size_t i = 0; i < n; ++i) out[i] = (flux[i + 1] - flux[i]) / h;
    return out;
}

PLaplaceModel::PLaplaceModel(double p_exponent, std::size_t points, std::vector<AffineField> diffusion)
    : p_(p_exponent), points_(points), diffusion_(std::move(diffusion)) {
    if (!(p_ >= 2.0)) throw std::invalid_argument("p-Laplace model: p must be at least 2");
    if (points_ == 0) throw std::invalid_argument("p-Laplace model: grid needs interior points");
    for (const auto& f : diffusion_)
        if (f.offset.basis() != Basis::sine_grid || f.offset.size() != points_)
            throw std::invalid_argument("p-Laplace model: diffusion offsets must be grid states of matching size");
}

State PLaplaceModel::drift(const State& y) const { return plaplace_operator(y, p_); }

std::vector<State> PLaplaceModel::diffusion(const State& y) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f(y));
    return out;
}

std::optional<std::vector<State>> PLaplaceModel::diffusion_derivative(const State&, const State& u) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f.scale * u);
    return out;
}

State PLaplaceModel::sine_mode(int k) const {
    State s = State::grid(points_);
    const double h = spacing();
    for (std::size_t i = 0; i < points_; ++i) s[i] = std::sin(k * std::numbers::pi * h * static_cast<double>(i + 1));
    return s;
}

double PLaplaceModel::laplacian_eigenvalue(int k) const {
    const double h = spacing();
    return -(2.0 / (h * h)) * (1.0 - std::cos(k * std::numbers::pi * h));
}

nlohmann::json PLaplaceModel::to_json() const {
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& f : diffusion_) fields.push_back(field_json(f));
    return {{"kind", kind()}, {"p", p_}, {"grid_points", points_}, {"J", diffusion_.size()}, {"diffusion", fields}};
}

LinearEigenModel::LinearEigenModel(Operator op, std::vector<Eigenpair> eigenpairs, std::vector<AffineField> diffusion,
                                   double tolerance, std::string description)
    : op_(std::move(op)), eigenpairs_(std::move(eigenpairs)), diffusion_(std::move(diffusion)), description_(std::move(description)) {
    if (!op_) throw std::invalid_argument("linear model needs an operator");
    for (const auto& [v, lambda] : eigenpairs_) {
        const State r = op_(v) - lambda * v;
        const double scale = level_norm(v, 0.0);
        const double rel = scale > 0.0 ? level_norm(r, 0.0) / scale : level_norm(r, 0.0);
        residuals_.push_back(rel);
        if (rel > tolerance)
            throw std::invalid_argument("linear model: eigenpair residual " + std::to_string(rel) + " exceeds tolerance");
    }
}

std::vector<State> LinearEigenModel::diffusion(const State& y) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f(y));
    return out;
}

std::optional<std::vector<State>> LinearEigenModel::diffusion_derivative(const State&, const State& u) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f.scale * u);
    return out;
}

nlohmann::json LinearEigenModel::to_json() const {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [v, lambda] : eigenpairs_) pairs.push_back({{"vector", spdeinv::to_json(v)}, {"value", lambda}});
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& f : diffusion_) fields.push_back(field_json(f));
    return {{"kind", kind()}, {"operator", description_}, {"eigenpairs", pairs}, {"J", diffusion_.size()}, {"diffusion", fields}};
}

ReplacedDiffusionModel::ReplacedDiffusionModel(std::shared_ptr<const SpdeModel> base, std::vector<AffineField> diffusion)
    : base_(std::move(base)), diffusion_(std::move(diffusion)) {
    if (!base_) throw std::invalid_argument("replaced diffusion model needs a base model");
}

std::vector<State> ReplacedDiffusionModel::diffusion(const State& y) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f(y));
    return out;
}

std::optional<std::vector<State>> ReplacedDiffusionModel::diffusion_derivative(const State&, const State& u) const {
    std::vector<State> out;
    for (const auto& f : diffusion_) out.push_back(f.scale * u);
    return out;
}

nlohmann::json ReplacedDiffusionModel::to_json() const {
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& f : diffusion_) fields.push_back(field_json(f));
    return {{"kind", kind()}, {"base", base_->to_json()}, {"J", diffusion_.size()}, {"diffusion", fields}};
}

std::vector<State> fd_diffusion_derivative(const SpdeModel& model, const State& y, const State& u, double step) {
    const auto plus = model.diffusion(y + step * u);
    const auto minus = model.diffusion(y - step * u);
    std::vector<State> out;
    for (std::size_t j = 0; j < plus.size(); ++j) {
        State d = plus[j] - minus[j];
        d *= 0.5 / step;
        out.push_back(std::move(d));
    }
    return out;
}

StratonovichResult stratonovich_correction(const SpdeModel& model, const State& y, DaMode mode,
                                           const StratonovichOptions& options) {
    const auto fields = model.diffusion(y);
    const double q = model.h_regularity();
    StratonovichResult result;
    result.value = zero_like(y);
    for (std::size_t j = 0; j < fields.size(); ++j) {
        const State& a = fields[j];
        if (a.is_zero()) continue;
        if (mode == DaMode::analytic) {
            auto da = model.diffusion_derivative(y, a);
            if (!da) throw std::invalid_argument("stratonovich_correction: model has no analytic diffusion derivative");
            result.value += (*da)[j];
            continue;
        }
        // Directions may be longer than y (Hermite fields gain an order); widen y to match.
        const State base = a.size() > y.size() ? y.resized(a.order()) : y;
        const double scale = std::max(level_norm(base, q), 1.0) / std::max(level_norm(a, q), 1e-300);
        const double h = options.fd_step * scale;
        const State coarse = fd_diffusion_derivative(model, base, a, h)[j];
        const State fine = fd_diffusion_derivative(model, base, a, 0.5 * h)[j];
        const double denom = std::max(level_norm(fine, q), 1e-300);
        const double sensitivity = level_norm(coarse - fine, q) / denom;
        result.step_sensitivity = std::max(result.step_sensitivity, sensitivity);
        result.value += fine;
    }
    result.step_sensitive = result.step_sensitivity > options.sensitivity_tolerance;
    return result;
}

}  // namespace spdeinv
