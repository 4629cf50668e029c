#include "spdeinv/hermite.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdeinv {

std::vector<double> hermite_functions(int order, double x) {
    if (order < 0) throw std::invalid_argument("hermite_functions: negative order");
    std::vector<double> h(static_cast<std::size_t>(order) + 1);
    h[0] = std::exp(-0.5 * x * x) / std::pow(std::numbers::pi, 0.25);
    if (order >= 1) h[1] = std::sqrt(2.0) * x * h[0];
    for (int n = 1; n < order; ++n) {
        const double np1 = n + 1.0;
        h[n + 1] = std::sqrt(2.0 / np1) * x * h[n] - std::sqrt(n / np1) * h[n - 1];
    }
    return h;
}

GaussHermiteRule gauss_hermite(std::size_t points) {
    if (points == 0) throw std::invalid_argument("gauss_hermite: need at least one node");
    const auto n = static_cast<Eigen::Index>(points);
    // Jacobi matrix of the orthonormal Hermite recurrence: x p_k = b_k p_{k-1} + b_{k+1} p_{k+1}, b_k = sqrt(k/2).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);

    GaussHermiteRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    const int top = static_cast<int>(points) - 1;
    for (std::size_t k = 0; k < points; ++k) {
        double x = solver.eigenvalues()[static_cast<Eigen::Index>(k)];
        // Newton polish on h_points(x) = 0 using h' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}.
        for (int it = 0; it < 3; ++it) {
            const auto h = hermite_functions(top + 2, x);
            const double np = static_cast<double>(points);
            const double dh = std::sqrt(np / 2.0) * h[points - 1] - std::sqrt((np + 1.0) / 2.0) * h[points + 1];
            if (dh == 0.0) break;
            x -= h[points] / dh;
        }
        const auto h = hermite_functions(top, x);
        double sum = 0.0;
        for (double v : h) sum += v * v;
        rule.nodes[k] = x;
        rule.weights[k] = 1.0 / sum;
    }
    return rule;
}

}  // namespace spdeinv
