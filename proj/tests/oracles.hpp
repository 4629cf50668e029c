#pragma once

/// Reference computations used by the tests. They avoid the library's own
/// ladder, quadrature and translation code paths on purpose.

#include "spdeinv/function_space.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// h_n(x) by the physicists' polynomial recurrence in long double, then scaled.
/// Fine for the moderate n and |x| used in tests.
inline double hermite(int n, double x) {
    long double hm1 = 0.0L, h = 1.0L;  // H_{-1}, H_0
    for (int k = 0; k < n; ++k) {
        const long double next = 2.0L * x * h - 2.0L * k * hm1;
        hm1 = h;
        h = next;
    }
    long double norm = std::sqrt(std::numbers::pi_v<long double>);
    for (int k = 1; k <= n; ++k) norm *= 2.0L * k;
    return static_cast<double>(h / std::sqrt(norm) * std::exp(-0.5L * x * x));
}

/// Value of a one-dimensional coefficient vector at x.
inline double eval1d(const spdeinv::State& s, double x) {
    double v = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) v += s[k] * hermite(static_cast<int>(k), x);
    return v;
}

/// <h_n, f> by the trapezoid rule on [-L, L]; spectrally accurate for smooth decaying f.
inline double project(const std::function<double(double)>& f, int n, double half_width = 16.0, int panels = 4000) {
    const double dx = 2.0 * half_width / panels;
    double sum = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double x = -half_width + i * dx;
        const double w = (i == 0 || i == panels) ? 0.5 : 1.0;
        sum += w * f(x) * hermite(n, x);
    }
    return sum * dx;
}

/// Coefficients of h_0(. - x): exp(-x^2/4) (x / sqrt 2)^n / sqrt(n!).
inline double shifted_ground_state(int n, double x) {
    double c = std::exp(-0.25 * x * x);
    for (int k = 1; k <= n; ++k) c *= (x / std::sqrt(2.0)) / std::sqrt(static_cast<double>(k));
    return c;
}

/// Random Hermite state with coefficients decaying like (1 + |n|)^{-decay}.
inline spdeinv::State random_state(std::mt19937_64& rng, int dim, int order, double decay = 1.0) {
    std::normal_distribution<double> gauss;
    auto s = spdeinv::State::hermite(dim, order);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = gauss(rng) / std::pow(1.0 + s.indices().order_at(k), decay);
    return s;
}

inline double max_abs_diff(const spdeinv::State& a, const spdeinv::State& b) {
    const std::size_t n = std::max(a.size(), b.size());
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = k < a.size() ? a[k] : 0.0;
        const double y = k < b.size() ? b[k] : 0.0;
        m = std::max(m, std::abs(x - y));
    }
    return m;
}

}  // namespace oracle
