#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spdeinv {

/// Tuple of d non-negative integers indexing a tensor Hermite function.
using MultiIndex = std::vector<int>;

int order_of(const MultiIndex& n);

/// All multi-indices of dimension d with |n| <= order, graded then lexicographic.
///
/// Index sets are shared between states of the same (d, order); use `get`.
class IndexSet {
public:
    static std::shared_ptr<const IndexSet> get(int dim, int order);

    int dim() const { return dim_; }
    int order() const { return order_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& at(std::size_t k) const { return indices_[k]; }
    int order_at(std::size_t k) const { return orders_[k]; }

    /// Position of `n`, or -1 when |n| exceeds the order.
    std::ptrdiff_t find(const MultiIndex& n) const;

    /// Position of at(k) + step * e_axis, or -1 when it leaves the set.
    std::ptrdiff_t neighbour(std::size_t k, int axis, int step) const { return neighbours_[k][2 * axis + (step > 0 ? 1 : 0)]; }

    /// Number of leading entries with |n| <= order (entries are graded).
    std::size_t prefix_size(int order) const;

private:
    IndexSet(int dim, int order);

    int dim_;
    int order_;
    std::vector<MultiIndex> indices_;
    std::vector<int> orders_;
    std::map<MultiIndex, std::size_t> lookup_;
    std::vector<std::vector<std::ptrdiff_t>> neighbours_;
};

enum class Basis { hermite, sine_grid };

std::string to_string(Basis basis);
Basis basis_from_string(const std::string& tag);

/// Truncated coefficient vector over a declared basis.
///
/// Hermite states hold coefficients for every |n| <= order. Grid states hold
/// nodal values at the `order + 1` interior points of a uniform Dirichlet grid
/// on (0, 1); they are always one dimensional.
class State {
public:
    State() = default;
    State(Basis basis, int dim, int order);
    State(Basis basis, int dim, int order, std::vector<double> coefficients);

    static State hermite(int dim, int order) { return State(Basis::hermite, dim, order); }
    static State grid(std::size_t points);
    /// Single Hermite function h_n at truncation `order`.
    static State hermite_basis(const MultiIndex& n, int order);

    Basis basis() const { return basis_; }
    int dim() const { return dim_; }
    int order() const { return order_; }
    std::size_t size() const { return coefficients_.size(); }
    const IndexSet& indices() const { return *indices_; }

    std::span<const double> coefficients() const { return coefficients_; }
    std::span<double> coefficients() { return coefficients_; }
    double operator[](std::size_t k) const { return coefficients_[k]; }
    double& operator[](std::size_t k) { return coefficients_[k]; }

    /// Coefficient of `n`; indices beyond the truncation read as zero.
    double coefficient(const MultiIndex& n) const;

    /// Grid spacing h = 1 / (points + 1); only meaningful for grid states.
    double grid_spacing() const;

    /// Copy at a different truncation: drops |n| > order, pads with zeros.
    State resized(int order) const;

    bool compatible_with(const State& other) const;
    bool is_zero() const;

    State& operator+=(const State& other);
    State& operator-=(const State& other);
    State& operator*=(double factor);
    /// this += factor * other, padding this when other is longer.
    State& add_scaled(double factor, const State& other);

    friend State operator+(State a, const State& b) { return a += b; }
    friend State operator-(State a, const State& b) { return a -= b; }
    friend State operator*(double s, State a) { return a *= s; }
    friend State operator*(State a, double s) { return a *= s; }
    friend bool operator==(const State& a, const State& b);

private:
    void grow_to(int order);

    Basis basis_ = Basis::hermite;
    int dim_ = 1;
    int order_ = 0;
    std::shared_ptr<const IndexSet> indices_;
    std::vector<double> coefficients_;
};

/// Element of the dual scale S_{-q}, paired with states coefficient-wise.
struct DualField {
    State coefficients;

    /// Truncated Dirac functional: coefficients (h_n(z))_{|n| <= order}.
    static DualField dirac(const std::vector<double>& z, int order);
    static DualField zero(int dim, int order) { return {State::hermite(dim, order)}; }
};

/// Regularity orders of the embedded triple (G, H, K).
struct NormScale {
    double q_g = 1.0;
    double q_h = 0.5;
    double q_k = 0.0;

    /// (p + 1, p + 1/2, p), the Hermite-Sobolev triple.
    static NormScale hermite_sobolev(double p) { return {p + 1.0, p + 0.5, p}; }
    bool valid() const { return q_g >= q_h && q_h >= q_k; }
};

/// Hermite-Sobolev norm sqrt(sum (2|n|+d)^{2q} c_n^2). Rejects grid states.
double norm_at(const State& state, double q);

/// Inner product at regularity q for Hermite states; discrete L2 (h-weighted) for grid states.
double inner_at(const State& a, const State& b, double q);
/// Norm matching `inner_at`.
double level_norm(const State& state, double q);
/// Discrete L2 norm sqrt(h * sum y_i^2) of a grid state.
double grid_norm(const State& state);

/// sum_n dual_n * state_n with the shorter operand zero padded.
double pair(const DualField& dual, const State& state);

/// Hermite ladder derivative along `axis`; output order is input order + 1.
State derivative(const State& state, int axis);
/// derivative along i then j; output order is input order + 2.
State second_derivative(const State& state, int axis_i, int axis_j);
/// Same as `derivative` but with the result truncated back to the input order.
State truncated_derivative(const State& state, int axis);

/// Norm at regularity q of the components with |n| > order.
double spill_norm(const State& state, int order, double q);

struct TranslateOptions {
    /// Warn when ||top-order band|| / ||result|| exceeds this.
    double tail_threshold = 1e-8;
};

struct Translated {
    State state;
    double tail_ratio = 0.0;
    bool truncation_warning = false;
};

/// tau_x applied in coefficient space as exp(-sum_i x_i D_i) with D_i the
/// derivative truncated at the state's order. Exact identity at x = 0.
Translated translate(const State& state, std::span<const double> shift, const TranslateOptions& options = {});

struct EmbeddingReport {
    double max_ratio_k_over_h = 0.0;
    double max_ratio_h_over_g = 0.0;
    /// Empirical embedding constant: max of the two ratios.
    double empirical_constant = 0.0;
    std::size_t violations = 0;
    bool passed = true;
};

/// Checks ||s||_K <= ||s||_H <= ||s||_G for every state (zero states give ratio 0).
EmbeddingReport check_embedding(const NormScale& scale, std::span<const State> states);

struct PathIntegral {
    State integral;
    /// Difference between the dt and 2*dt Riemann sums, measured in H and in K.
    double refinement_residual_h = 0.0;
    double refinement_residual_k = 0.0;
};

/// Left-endpoint Riemann sum of a uniformly sampled path over [0, samples.size() * dt].
PathIntegral integrate_path(std::span<const State> samples, double dt, const NormScale& scale);

/// Value of a Hermite state at a spatial point.
double evaluate(const State& state, std::span<const double> point);

nlohmann::json to_json(const State& state);
State state_from_json(const nlohmann::json& doc);

}  // namespace spdeinv
