#include "spdeinv/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spdeinv {

bool ChartBox::contains(std::span<const double> x, double margin) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(x[i] >= lower[i] + margin && x[i] <= upper[i] - margin)) return false;
    return true;
}

ChartPoint ChartBox::clamp(ChartPoint x) const {
    for (std::size_t i = 0; i < dim(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
}

std::string to_string(ChartKind kind) {
    switch (kind) {
        case ChartKind::translation_group: return "translation_group";
        case ChartKind::linear_span: return "linear_span";
        case ChartKind::custom: return "custom";
    }
    return "custom";
}

namespace {

void validate_box(const ChartBox& box, std::size_t m) {
    if (box.lower.size() != m || box.upper.size() != m)
        throw std::invalid_argument("chart domain dimension does not match the chart dimension");
    for (std::size_t i = 0; i < m; ++i)
        if (!(box.lower[i] < box.upper[i])) throw std::invalid_argument("chart domain must have lower < upper");
}

nlohmann::json box_json(const ChartBox& box) { return {{"lower", box.lower}, {"upper", box.upper}}; }

State zero_like(const State& s) { return State(s.basis(), s.dim(), s.order()); }

}  // namespace

LinearSpanChart::LinearSpanChart(std::vector<State> spanning, ChartBox domain)
    : spanning_(std::move(spanning)), domain_(std::move(domain)) {
    if (spanning_.empty()) throw std::invalid_argument("linear span chart needs at least one vector");
    for (const auto& v : spanning_)
        if (!v.compatible_with(spanning_.front())) throw std::invalid_argument("linear span vectors are incompatible");
    validate_box(domain_, spanning_.size());
}

State LinearSpanChart::eval(std::span<const double> x) const {
    State out = zero_like(spanning_.front());
    for (std::size_t i = 0; i < spanning_.size(); ++i) out.add_scaled(x[i], spanning_[i]);
    return out;
}

std::optional<Hessian> LinearSpanChart::hessian(std::span<const double>) const {
    const std::size_t m = spanning_.size();
    Hessian h{m, std::vector<State>(m * m, zero_like(spanning_.front()))};
    return h;
}

nlohmann::json LinearSpanChart::to_json() const {
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& v : spanning_) anchors.push_back(spdeinv::to_json(v));
    return {{"m", dim()}, {"domain", box_json(domain_)}, {"kind_tag", "linear_span"}, {"anchors", anchors}};
}

TranslationChart::TranslationChart(State profile, ChartBox domain) : profile_(std::move(profile)), domain_(std::move(domain)) {
    if (profile_.basis() != Basis::hermite) throw std::invalid_argument("translation chart needs a hermite profile");
    validate_box(domain_, static_cast<std::size_t>(profile_.dim()));
}

State TranslationChart::eval(std::span<const double> x) const { return translate(profile_, x).state; }

std::optional<std::vector<State>> TranslationChart::jacobian(std::span<const double> x) const {
    const State y = eval(x);
    std::vector<State> cols;
    for (int i = 0; i < profile_.dim(); ++i) cols.push_back(-1.0 * truncated_derivative(y, i));
    return cols;
}

std::optional<Hessian> TranslationChart::hessian(std::span<const double> x) const {
    const State y = eval(x);
    const auto m = static_cast<std::size_t>(profile_.dim());
    std::vector<State> first;
    for (std::size_t i = 0; i < m; ++i) first.push_back(truncated_derivative(y, static_cast<int>(i)));
    Hessian h{m, std::vector<State>(m * m)};
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = k; l < m; ++l) {
            h.entries[k * m + l] = truncated_derivative(first[l], static_cast<int>(k));
            h.entries[l * m + k] = h.entries[k * m + l];
        }
    return h;
}

nlohmann::json TranslationChart::to_json() const {
    return {{"m", dim()}, {"domain", box_json(domain_)}, {"kind_tag", "translation_group"},
            {"anchors", nlohmann::json::array({spdeinv::to_json(profile_)})}};
}

CustomChart::CustomChart(std::size_t m, ChartBox domain, EvalFn eval, JacobianFn jacobian, HessianFn hessian)
    : m_(m), domain_(std::move(domain)), eval_(std::move(eval)), jacobian_(std::move(jacobian)), hessian_(std::move(hessian)) {
    if (m_ == 0) throw std::invalid_argument("custom chart needs positive dimension");
    if (!eval_) throw std::invalid_argument("custom chart needs an evaluation function");
    validate_box(domain_, m_);
}

std::optional<std::vector<State>> CustomChart::jacobian(std::span<const double> x) const {
    if (!jacobian_) return std::nullopt;
    return jacobian_(x);
}

std::optional<Hessian> CustomChart::hessian(std::span<const double> x) const {
    if (!hessian_) return std::nullopt;
    return hessian_(x);
}

nlohmann::json CustomChart::to_json() const {
    return {{"m", m_}, {"domain", box_json(domain_)}, {"kind_tag", "custom"}, {"anchors", nlohmann::json::array()}};
}

namespace {

std::vector<double> row_weights(Basis basis, int dim, std::size_t rows, double q, double grid_spacing) {
    std::vector<double> w(rows);
    if (basis == Basis::sine_grid) {
        std::fill(w.begin(), w.end(), std::sqrt(grid_spacing));
        return w;
    }
    int order = 0;
    auto idx = IndexSet::get(dim, order);
    while (idx->size() < rows) idx = IndexSet::get(dim, ++order);
    for (std::size_t k = 0; k < rows; ++k) w[k] = std::pow(2.0 * idx->order_at(k) + dim, q);
    return w;
}

}  // namespace

Eigen::MatrixXd weighted_matrix(std::span<const State> columns, double q, std::size_t rows) {
    const auto& ref = columns.front();
    const auto w = row_weights(ref.basis(), ref.dim(), rows, q, ref.grid_spacing());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
        for (std::size_t k = 0; k < std::min(rows, columns[c].size()); ++k)
            a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = w[k] * columns[c][k];
    return a;
}

Eigen::VectorXd weighted_vector(const State& v, double q, std::size_t rows) {
    const auto w = row_weights(v.basis(), v.dim(), rows, q, v.grid_spacing());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    for (std::size_t k = 0; k < std::min(rows, v.size()); ++k) b(static_cast<Eigen::Index>(k)) = w[k] * v[k];
    return b;
}

TangentFrame::TangentFrame(ChartPoint base_point, std::vector<State> columns, double q, double rank_floor)
    : base_point_(std::move(base_point)), columns_(std::move(columns)), q_(q) {
    if (columns_.empty()) throw std::invalid_argument("tangent frame needs at least one column");
    std::size_t rows = 0;
    for (const auto& c : columns_) {
        if (!c.compatible_with(columns_.front())) throw std::invalid_argument("tangent frame columns are incompatible");
        rows = std::max(rows, c.size());
    }
    const Eigen::MatrixXd a = weighted_matrix(columns_, q_, rows);
    gram_ = a.transpose() * a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    sigma_min_ = sv(sv.size() - 1);
    if (smax == 0.0 || static_cast<Eigen::Index>(columns_.size()) > a.rows() || sigma_min_ <= rank_floor * smax)
        throw DegenerateChart("degenerate chart: Dphi(x) is rank deficient (sigma_min = " + std::to_string(sigma_min_) + ")");
    condition_ = (smax / sigma_min_) * (smax / sigma_min_);
}

State TangentFrame::apply(std::span<const double> coords) const {
    State out = zero_like(columns_.front());
    for (std::size_t i = 0; i < columns_.size(); ++i) out.add_scaled(coords[i], columns_[i]);
    return out;
}

std::vector<State> fd_jacobian(const Parametrization& param, std::span<const double> x, double step) {
    std::vector<State> cols;
    ChartPoint xp(x.begin(), x.end());
    for (std::size_t i = 0; i < param.dim(); ++i) {
        ChartPoint xm = xp;
        ChartPoint xq = xp;
        xm[i] -= step;
        xq[i] += step;
        State col = param.eval(xq) - param.eval(xm);
        col *= 0.5 / step;
        cols.push_back(std::move(col));
    }
    return cols;
}

TangentFrame jacobian(const Parametrization& param, std::span<const double> x, const ManifoldOptions& options) {
    if (x.size() != param.dim()) throw std::invalid_argument("jacobian: chart point dimension mismatch");
    std::optional<std::vector<State>> cols;
    if (options.prefer_analytic) cols = param.jacobian(x);
    if (!cols) {
        if (!param.domain().contains(x, options.fd_jacobian_step))
            throw std::invalid_argument("jacobian: chart point too close to the domain boundary for finite differences");
        cols = fd_jacobian(param, x, options.fd_jacobian_step);
    }
    return TangentFrame(ChartPoint(x.begin(), x.end()), std::move(*cols), options.q, options.rank_floor);
}

Hessian hessian(const Parametrization& param, std::span<const double> x, const ManifoldOptions& options) {
    if (options.prefer_analytic)
        if (auto h = param.hessian(x)) return *h;
    const double s = options.fd_hessian_step;
    if (!param.domain().contains(x, s))
        throw std::invalid_argument("hessian: chart point too close to the domain boundary for finite differences");
    const std::size_t m = param.dim();
    ChartPoint base(x.begin(), x.end());
    const State center = param.eval(base);
    Hessian h{m, std::vector<State>(m * m)};
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        ChartPoint p = base;
        p[i] += di;
        p[j] += dj;
        return param.eval(p);
    };
    for (std::size_t k = 0; k < m; ++k) {
        State diag = at(k, s, k, 0.0) + at(k, -s, k, 0.0);
        diag.add_scaled(-2.0, center);
        diag *= 1.0 / (s * s);
        h.entries[k * m + k] = std::move(diag);
        for (std::size_t l = k + 1; l < m; ++l) {
            State off = at(k, s, l, s) - at(k, s, l, -s) - at(k, -s, l, s) + at(k, -s, l, -s);
            off *= 1.0 / (4.0 * s * s);
            h.entries[k * m + l] = off;
            h.entries[l * m + k] = std::move(off);
        }
    }
    return h;
}

TangentCoordinates tangent_coordinates(const TangentFrame& frame, const State& field_value, double condition_warning) {
    std::size_t rows = field_value.size();
    for (const auto& c : frame.columns()) {
        if (!c.compatible_with(field_value)) throw std::invalid_argument("tangent_coordinates: field incompatible with frame");
        rows = std::max(rows, c.size());
    }
    const Eigen::MatrixXd a = weighted_matrix(frame.columns(), frame.q(), rows);
    const Eigen::VectorXd b = weighted_vector(field_value, frame.q(), rows);
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);

    TangentCoordinates out;
    out.coords.assign(c.data(), c.data() + c.size());
    out.residual = (b - a * c).norm();
    out.field_norm = b.norm();
    if (out.residual > out.field_norm) out.residual = out.field_norm;
    out.ill_conditioned = frame.condition_number() > condition_warning;
    return out;
}

State bracket(const Hessian& hess, std::span<const double> coords_a, std::span<const double> coords_b) {
    if (coords_a.size() != hess.m || coords_b.size() != hess.m) throw std::invalid_argument("bracket: coordinate size mismatch");
    State out = zero_like(hess.entries.front());
    for (std::size_t k = 0; k < hess.m; ++k)
        for (std::size_t l = 0; l < hess.m; ++l) {
            // Symmetrized product keeps bracket(a, b) == bracket(b, a) bit for bit.
            const double w = 0.5 * (coords_a[k] * coords_b[l] + coords_b[k] * coords_a[l]);
            if (w != 0.0) out.add_scaled(w, hess(k, l));
        }
    return out;
}

State bracket(const Parametrization& param, std::span<const double> x, std::span<const double> coords_a,
              std::span<const double> coords_b, const ManifoldOptions& options) {
    return bracket(hessian(param, x, options), coords_a, coords_b);
}

DistanceResult distance_to_manifold(const Parametrization& param, const State& y, std::span<const double> x0,
                                    const ManifoldOptions& options, const GaussNewtonOptions& gn) {
    const auto& box = param.domain();
    if (!box.contains(x0)) throw std::invalid_argument("distance_to_manifold: initial guess outside the chart domain");

    auto objective = [&](const ChartPoint& x) { return level_norm(param.eval(x) - y, options.q); };

    DistanceResult result;
    result.point.assign(x0.begin(), x0.end());
    State residual = param.eval(result.point) - y;
    result.distance = level_norm(residual, options.q);
    const double scale = std::max(level_norm(y, options.q), 1.0);

    for (int it = 0; it < gn.max_iterations; ++it) {
        result.iterations = it + 1;
        std::optional<TangentFrame> frame;
        try {
            frame.emplace(jacobian(param, result.point, options));
        } catch (const std::exception&) {
            return result;
        }
        std::size_t rows = residual.size();
        for (const auto& c : frame->columns()) rows = std::max(rows, c.size());
        const Eigen::MatrixXd a = weighted_matrix(frame->columns(), options.q, rows);
        const Eigen::VectorXd r = weighted_vector(residual, options.q, rows);
        Eigen::VectorXd gradient = a.transpose() * r;

        const double tolerance = gn.gradient_tolerance * scale * std::max(a.norm(), 1e-300);
        // Projected gradient: components pushing out of an active bound do not count,
        // but a minimiser held in place by the boundary is not a converged distance.
        bool pinned = false;
        for (std::size_t i = 0; i < box.dim(); ++i) {
            const double xi = result.point[i];
            const auto ii = static_cast<Eigen::Index>(i);
            if ((xi <= box.lower[i] && gradient(ii) > 0.0) || (xi >= box.upper[i] && gradient(ii) < 0.0)) {
                pinned = pinned || std::abs(gradient(ii)) > tolerance;
                gradient(ii) = 0.0;
            }
        }
        if (gradient.norm() <= tolerance) {
            result.converged = !pinned;
            return result;
        }

        const Eigen::VectorXd step = a.colPivHouseholderQr().solve(-r);
        double factor = 1.0;
        bool improved = false;
        ChartPoint trial;
        double trial_value = result.distance;
        for (int h = 0; h <= gn.max_halvings; ++h, factor *= 0.5) {
            trial = result.point;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += factor * step(static_cast<Eigen::Index>(i));
            trial = box.clamp(std::move(trial));
            trial_value = objective(trial);
            if (trial_value < result.distance) {
                improved = true;
                break;
            }
        }
        // Stalled away from a stationary point, e.g. pinned at the boundary.
        if (!improved) return result;
        double moved = 0.0;
        for (std::size_t i = 0; i < trial.size(); ++i) moved = std::max(moved, std::abs(trial[i] - result.point[i]));
        result.point = std::move(trial);
        result.distance = trial_value;
        residual = param.eval(result.point) - y;
        if (moved <= gn.step_tolerance) {
            result.converged = true;
            return result;
        }
    }
    return result;
}

}  // namespace spdeinv
