#include "spdeinv/function_space.hpp"

#include "spdeinv/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace spdeinv {

int order_of(const MultiIndex& n) { return std::accumulate(n.begin(), n.end(), 0); }

namespace {

void enumerate_order(int dim, int remaining, MultiIndex& current, int axis, std::vector<MultiIndex>& out) {
    if (axis == dim - 1) {
        current[axis] = remaining;
        out.push_back(current);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        current[axis] = k;
        enumerate_order(dim, remaining - k, current, axis + 1, out);
    }
}

}  // namespace

IndexSet::IndexSet(int dim, int order) : dim_(dim), order_(order) {
    MultiIndex current(static_cast<std::size_t>(dim), 0);
    for (int k = 0; k <= order; ++k) {
        std::vector<MultiIndex> band;
        enumerate_order(dim, k, current, 0, band);
        std::sort(band.begin(), band.end());
        for (auto& n : band) {
            lookup_.emplace(n, indices_.size());
            indices_.push_back(std::move(n));
            orders_.push_back(k);
        }
    }
    neighbours_.resize(indices_.size());
    for (std::size_t k = 0; k < indices_.size(); ++k) {
        neighbours_[k].assign(2 * static_cast<std::size_t>(dim), -1);
        for (int axis = 0; axis < dim; ++axis) {
            MultiIndex n = indices_[k];
            if (n[axis] > 0) {
                --n[axis];
                neighbours_[k][2 * axis] = find(n);
                ++n[axis];
            }
            ++n[axis];
            neighbours_[k][2 * axis + 1] = find(n);
        }
    }
}

std::shared_ptr<const IndexSet> IndexSet::get(int dim, int order) {
    if (dim < 1) throw std::invalid_argument("IndexSet: dimension must be positive");
    if (order < 0) throw std::invalid_argument("IndexSet: order must be non-negative");
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const IndexSet>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{dim, order}];
    if (!slot) slot = std::shared_ptr<const IndexSet>(new IndexSet(dim, order));
    return slot;
}

std::ptrdiff_t IndexSet::find(const MultiIndex& n) const {
    auto it = lookup_.find(n);
    return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::size_t IndexSet::prefix_size(int order) const {
    if (order >= order_) return indices_.size();
    if (order < 0) return 0;
    return static_cast<std::size_t>(std::upper_bound(orders_.begin(), orders_.end(), order) - orders_.begin());
}

std::string to_string(Basis basis) { return basis == Basis::hermite ? "hermite" : "sine_grid"; }

Basis basis_from_string(const std::string& tag) {
    if (tag == "hermite") return Basis::hermite;
    if (tag == "sine_grid") return Basis::sine_grid;
    throw std::invalid_argument("unknown basis_tag '" + tag + "'");
}

State::State(Basis basis, int dim, int order)
    : basis_(basis), dim_(dim), order_(order), indices_(IndexSet::get(dim, order)), coefficients_(indices_->size(), 0.0) {
    if (basis == Basis::sine_grid && dim != 1) throw std::invalid_argument("grid states are one dimensional");
}

State::State(Basis basis, int dim, int order, std::vector<double> coefficients) : State(basis, dim, order) {
    if (coefficients.size() != coefficients_.size())
        throw std::invalid_argument("State: coefficient count does not match the index set");
    coefficients_ = std::move(coefficients);
}

State State::grid(std::size_t points) {
    if (points == 0) throw std::invalid_argument("grid state needs at least one interior point");
    return State(Basis::sine_grid, 1, static_cast<int>(points) - 1);
}

State State::hermite_basis(const MultiIndex& n, int order) {
    State s = hermite(static_cast<int>(n.size()), order);
    const auto k = s.indices().find(n);
    if (k < 0) throw std::invalid_argument("hermite_basis: index exceeds truncation order");
    s[static_cast<std::size_t>(k)] = 1.0;
    return s;
}

double State::coefficient(const MultiIndex& n) const {
    if (static_cast<int>(n.size()) != dim_) throw std::invalid_argument("coefficient: multi-index dimension mismatch");
    const auto k = indices_->find(n);
    return k < 0 ? 0.0 : coefficients_[static_cast<std::size_t>(k)];
}

double State::grid_spacing() const { return 1.0 / static_cast<double>(coefficients_.size() + 1); }

State State::resized(int order) const {
    if (basis_ == Basis::sine_grid && order != order_) throw std::invalid_argument("grid states cannot change size");
    State out(basis_, dim_, order);
    const std::size_t n = std::min(out.size(), size());
    std::copy_n(coefficients_.begin(), n, out.coefficients_.begin());
    return out;
}

bool State::compatible_with(const State& other) const {
    if (basis_ != other.basis_ || dim_ != other.dim_) return false;
    return basis_ == Basis::hermite || order_ == other.order_;
}

bool State::is_zero() const {
    return std::all_of(coefficients_.begin(), coefficients_.end(), [](double c) { return c == 0.0; });
}

void State::grow_to(int order) {
    if (order <= order_) return;
    indices_ = IndexSet::get(dim_, order);
    order_ = order;
    coefficients_.resize(indices_->size(), 0.0);
}

State& State::add_scaled(double factor, const State& other) {
    if (!indices_) *this = State(other.basis_, other.dim_, 0);
    if (!compatible_with(other)) throw std::invalid_argument("State arithmetic: incompatible basis, dimension or grid");
    grow_to(other.order_);
    for (std::size_t k = 0; k < other.size(); ++k) coefficients_[k] += factor * other.coefficients_[k];
    return *this;
}

State& State::operator+=(const State& other) { return add_scaled(1.0, other); }
State& State::operator-=(const State& other) { return add_scaled(-1.0, other); }

State& State::operator*=(double factor) {
    for (double& c : coefficients_) c *= factor;
    return *this;
}

bool operator==(const State& a, const State& b) {
    return a.basis_ == b.basis_ && a.dim_ == b.dim_ && a.order_ == b.order_ && a.coefficients_ == b.coefficients_;
}

DualField DualField::dirac(const std::vector<double>& z, int order) {
    const int dim = static_cast<int>(z.size());
    State s = State::hermite(dim, order);
    std::vector<std::vector<double>> per_axis;
    per_axis.reserve(z.size());
    for (double zi : z) per_axis.push_back(hermite_functions(order, zi));
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& n = s.indices().at(k);
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= per_axis[i][n[i]];
        s[k] = v;
    }
    return {std::move(s)};
}

namespace {

double hermite_weight(int order, int dim, double q) {
    return std::pow(2.0 * order + dim, 2.0 * q);
}

void require_hermite(const State& s, const char* what) {
    if (s.basis() != Basis::hermite) throw std::invalid_argument(std::string(what) + ": requires a hermite state");
}

}  // namespace

double norm_at(const State& state, double q) {
    require_hermite(state, "norm_at");
    return std::sqrt(inner_at(state, state, q));
}

double inner_at(const State& a, const State& b, double q) {
    if (!a.compatible_with(b)) throw std::invalid_argument("inner product: incompatible states");
    const std::size_t n = std::min(a.size(), b.size());
    double sum = 0.0;
    if (a.basis() == Basis::sine_grid) {
        for (std::size_t k = 0; k < n; ++k) sum += a[k] * b[k];
        return sum * a.grid_spacing();
    }
    const auto& idx = a.size() >= b.size() ? a.indices() : b.indices();
    for (std::size_t k = 0; k < n; ++k) sum += hermite_weight(idx.order_at(k), a.dim(), q) * a[k] * b[k];
    return sum;
}

double level_norm(const State& state, double q) { return std::sqrt(inner_at(state, state, q)); }

double grid_norm(const State& state) {
    if (state.basis() != Basis::sine_grid) throw std::invalid_argument("grid_norm: requires a grid state");
    return level_norm(state, 0.0);
}

double pair(const DualField& dual, const State& state) {
    const State& d = dual.coefficients;
    if (d.dim() != state.dim() || state.basis() != Basis::hermite)
        throw std::invalid_argument("pair: dimension or basis mismatch");
    const std::size_t n = std::min(d.size(), state.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += d[k] * state[k];
    return sum;
}

State derivative(const State& state, int axis) {
    require_hermite(state, "derivative");
    if (axis < 0 || axis >= state.dim()) throw std::invalid_argument("derivative: axis out of range");
    State out = State::hermite(state.dim(), state.order() + 1);
    const auto& in_idx = state.indices();
    const auto& out_idx = out.indices();
    for (std::size_t k = 0; k < state.size(); ++k) {
        const double c = state[k];
        if (c == 0.0) continue;
        const int nk = in_idx.at(k)[axis];
        // h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}
        if (nk > 0) {
            const auto down = out_idx.neighbour(k, axis, -1);
            out[static_cast<std::size_t>(down)] += std::sqrt(0.5 * nk) * c;
        }
        const auto up = out_idx.neighbour(k, axis, +1);
        out[static_cast<std::size_t>(up)] -= std::sqrt(0.5 * (nk + 1)) * c;
    }
    return out;
}

State second_derivative(const State& state, int axis_i, int axis_j) {
    return derivative(derivative(state, axis_i), axis_j);
}

State truncated_derivative(const State& state, int axis) { return derivative(state, axis).resized(state.order()); }

double spill_norm(const State& state, int order, double q) {
    if (state.basis() != Basis::hermite || state.order() <= order) return 0.0;
    double sum = 0.0;
    const auto& idx = state.indices();
    for (std::size_t k = idx.prefix_size(order); k < state.size(); ++k)
        sum += hermite_weight(idx.order_at(k), state.dim(), q) * state[k] * state[k];
    return std::sqrt(sum);
}

namespace {

double euclidean_norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

// generator(v) = -sum_i x_i D_i v with D_i truncated at the order of v.
void apply_generator(const State& v, std::span<const double> shift, State& out) {
    std::fill(out.coefficients().begin(), out.coefficients().end(), 0.0);
    const auto& idx = v.indices();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double c = v[k];
        if (c == 0.0) continue;
        for (int axis = 0; axis < v.dim(); ++axis) {
            const double x = shift[static_cast<std::size_t>(axis)];
            if (x == 0.0) continue;
            const int nk = idx.at(k)[axis];
            if (nk > 0) out[static_cast<std::size_t>(idx.neighbour(k, axis, -1))] -= x * std::sqrt(0.5 * nk) * c;
            const auto up = idx.neighbour(k, axis, +1);
            if (up >= 0) out[static_cast<std::size_t>(up)] += x * std::sqrt(0.5 * (nk + 1)) * c;
        }
    }
}

}  // namespace

Translated translate(const State& state, std::span<const double> shift, const TranslateOptions& options) {
    require_hermite(state, "translate");
    if (static_cast<int>(shift.size()) != state.dim()) throw std::invalid_argument("translate: shift dimension mismatch");

    Translated result{state, 0.0, false};
    double shift_l1 = 0.0;
    for (double x : shift) shift_l1 += std::abs(x);
    if (shift_l1 > 0.0) {
        // ||D_i|| <= sqrt(2 (N + 1)); sub-steps keep each Taylor argument below 1/2.
        const double bound = shift_l1 * std::sqrt(2.0 * (state.order() + 1));
        const int substeps = std::max(1, static_cast<int>(std::ceil(2.0 * bound)));
        std::vector<double> scaled(shift.begin(), shift.end());
        for (double& x : scaled) x /= substeps;

        State& v = result.state;
        State term(Basis::hermite, state.dim(), state.order());
        State next(Basis::hermite, state.dim(), state.order());
        for (int s = 0; s < substeps; ++s) {
            const double scale = std::max(euclidean_norm(v.coefficients()), 1e-300);
            term = v;
            State acc = v;
            for (int k = 1; k <= 60; ++k) {
                apply_generator(term, scaled, next);
                next *= 1.0 / k;
                std::swap(term, next);
                acc += term;
                if (euclidean_norm(term.coefficients()) <= 1e-18 * scale) break;
            }
            v = std::move(acc);
        }
    }

    const auto& idx = result.state.indices();
    const auto band_begin = idx.prefix_size(state.order() - 1);
    const double total = euclidean_norm(result.state.coefficients());
    const double band = euclidean_norm(result.state.coefficients().subspan(band_begin));
    result.tail_ratio = total > 0.0 ? band / total : 0.0;
    result.truncation_warning = result.tail_ratio > options.tail_threshold;
    return result;
}

EmbeddingReport check_embedding(const NormScale& scale, std::span<const State> states) {
    if (!scale.valid()) throw std::invalid_argument("check_embedding: norm scale must satisfy q_G >= q_H >= q_K");
    EmbeddingReport report;
    for (const auto& s : states) {
        const double nk = norm_at(s, scale.q_k);
        const double nh = norm_at(s, scale.q_h);
        const double ng = norm_at(s, scale.q_g);
        const double r1 = nh > 0.0 ? nk / nh : 0.0;
        const double r2 = ng > 0.0 ? nh / ng : 0.0;
        report.max_ratio_k_over_h = std::max(report.max_ratio_k_over_h, r1);
        report.max_ratio_h_over_g = std::max(report.max_ratio_h_over_g, r2);
        if (r1 > 1.0 || r2 > 1.0) ++report.violations;
    }
    report.empirical_constant = std::max(report.max_ratio_k_over_h, report.max_ratio_h_over_g);
    report.passed = report.violations == 0;
    return report;
}

PathIntegral integrate_path(std::span<const State> samples, double dt, const NormScale& scale) {
    if (samples.empty()) throw std::invalid_argument("integrate_path: empty path");
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_path: dt must be positive");
    PathIntegral out;
    out.integral = State(samples[0].basis(), samples[0].dim(), samples[0].order());
    State coarse = out.integral;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        out.integral.add_scaled(dt, samples[k]);
        if (k % 2 == 0) coarse.add_scaled(2.0 * dt, samples[k]);
    }
    if (samples.size() % 2 == 1) coarse.add_scaled(-dt, samples.back());
    const State diff = out.integral - coarse;
    out.refinement_residual_h = level_norm(diff, scale.q_h);
    out.refinement_residual_k = level_norm(diff, scale.q_k);
    return out;
}

double evaluate(const State& state, std::span<const double> point) {
    require_hermite(state, "evaluate");
    if (static_cast<int>(point.size()) != state.dim()) throw std::invalid_argument("evaluate: point dimension mismatch");
    std::vector<std::vector<double>> per_axis;
    for (double x : point) per_axis.push_back(hermite_functions(state.order(), x));
    double sum = 0.0;
    for (std::size_t k = 0; k < state.size(); ++k) {
        const auto& n = state.indices().at(k);
        double v = state[k];
        for (int i = 0; i < state.dim(); ++i) v *= per_axis[i][n[i]];
        sum += v;
    }
    return sum;
}

nlohmann::json to_json(const State& state) {
    std::vector<std::size_t> order(state.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return state.indices().at(a) < state.indices().at(b);
    });
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t k : order) {
        if (state[k] == 0.0) continue;
        entries.push_back(nlohmann::json::array({state.indices().at(k), state[k]}));
    }
    return {{"d", state.dim()}, {"N", state.order()}, {"basis_tag", to_string(state.basis())}, {"entries", entries}};
}

State state_from_json(const nlohmann::json& doc) {
    const int dim = doc.at("d").get<int>();
    const int order = doc.at("N").get<int>();
    State s(basis_from_string(doc.at("basis_tag").get<std::string>()), dim, order);
    for (const auto& e : doc.at("entries")) {
        const auto n = e.at(0).get<MultiIndex>();
        if (static_cast<int>(n.size()) != dim) throw std::invalid_argument("state entry has wrong multi-index dimension");
        if (std::any_of(n.begin(), n.end(), [](int v) { return v < 0; }))
            throw std::invalid_argument("state entry has a negative multi-index");
        const auto k = s.indices().find(n);
        if (k < 0) throw std::invalid_argument("state entry exceeds truncation order N");
        s[static_cast<std::size_t>(k)] = e.at(1).get<double>();
    }
    return s;
}

}  // namespace spdeinv
