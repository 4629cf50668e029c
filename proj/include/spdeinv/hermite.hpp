#pragma once

#include <cstddef>
#include <vector>

namespace spdeinv {

/// Values h_0(x), ..., h_order(x) of the L2-normalized Hermite functions
/// h_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2).
std::vector<double> hermite_functions(int order, double x);

/// Gauss-Hermite rule prepared for projections onto Hermite functions.
///
/// `weights` are the classical weights multiplied by exp(x^2), so that
/// sum_k weights[k] * f(x_k) * g(x_k) integrates f*g exactly whenever
/// f*g = polynomial * exp(-x^2) of degree < 2 * size().
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Golub-Welsch nodes with Christoffel-function weights 1 / sum_n h_n(x_k)^2,
/// which stay accurate far into the tails where exp(-x^2) underflows.
GaussHermiteRule gauss_hermite(std::size_t points);

}  // namespace spdeinv
