#include "oracles.hpp"

#include "spdeinv/function_space.hpp"
#include "spdeinv/hermite.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace spdeinv;

TEST_CASE("hermite functions match the polynomial recurrence") {
    for (double x : {-3.7, -1.0, 0.0, 0.4, 2.5}) {
        const auto h = hermite_functions(30, x);
        for (int n = 0; n <= 30; ++n) CHECK(h[n] == doctest::Approx(oracle::hermite(n, x)).epsilon(1e-12).scale(1.0));
    }
    CHECK(hermite_functions(0, 0.0)[0] == doctest::Approx(std::pow(std::numbers::pi, -0.25)));
}

TEST_CASE("gauss-hermite rule integrates products of hermite functions exactly") {
    const int order = 24;
    const auto rule = gauss_hermite(2 * order + 1);
    REQUIRE(rule.size() == 2 * order + 1);
    for (int m = 0; m <= order; m += 3) {
        for (int n = 0; n <= order; n += 4) {
            double sum = 0.0;
            for (std::size_t k = 0; k < rule.size(); ++k) sum += rule.weights[k] * oracle::hermite(m, rule.nodes[k]) * oracle::hermite(n, rule.nodes[k]);
            CHECK(sum == doctest::Approx(m == n ? 1.0 : 0.0).scale(1.0).epsilon(1e-11));
        }
    }
}

TEST_CASE("index sets are graded so lower orders form a prefix") {
    const auto set = IndexSet::get(2, 3);
    CHECK(set->size() == 10);
    CHECK(set->at(0) == MultiIndex{0, 0});
    CHECK(set->prefix_size(1) == 3);
    for (std::size_t k = 1; k < set->size(); ++k) CHECK(set->order_at(k - 1) <= set->order_at(k));
    CHECK(set->find({1, 2}) >= 0);
    CHECK(set->find({2, 2}) == -1);
    const auto k = static_cast<std::size_t>(set->find({1, 1}));
    CHECK(set->neighbour(k, 0, +1) == set->find({2, 1}));
    CHECK(set->neighbour(k, 1, -1) == set->find({1, 0}));
    CHECK(IndexSet::get(2, 3) == set);
}

TEST_CASE("ladder derivative agrees with finite differences on a grid") {
    std::mt19937_64 rng(7);
    const auto s = oracle::random_state(rng, 1, 20, 1.5);
    const auto ds = derivative(s, 0);
    CHECK(ds.order() == 21);
    const double h = 1e-4;
    double worst = 0.0;
    for (double x = -6.0; x <= 6.0; x += 0.05) {
        const double fd = (oracle::eval1d(s, x + h) - oracle::eval1d(s, x - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - oracle::eval1d(ds, x)));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("second derivative of h0 is (x^2 - 1) h0") {
    const auto d2 = second_derivative(State::hermite_basis({0}, 0), 0, 0);
    CHECK(d2.order() == 2);
    for (double x : {-1.5, 0.0, 0.7}) CHECK(oracle::eval1d(d2, x) == doctest::Approx((x * x - 1.0) * oracle::hermite(0, x)));
}

TEST_CASE("derivative spill is the component above the input order") {
    const auto s = State::hermite_basis({5}, 5);
    const auto ds = derivative(s, 0);
    // h5' = sqrt(5/2) h4 - sqrt(3) h6, so the spill at order 5 is sqrt(3) * weight(6).
    CHECK(spill_norm(ds, 5, 0.0) == doctest::Approx(std::sqrt(3.0)));
    CHECK(spill_norm(ds, 5, 0.5) == doctest::Approx(std::sqrt(3.0) * std::sqrt(13.0)));
    CHECK(truncated_derivative(s, 0).order() == 5);
}

TEST_CASE("translation by zero is the identity") {
    std::mt19937_64 rng(3);
    const auto s = oracle::random_state(rng, 2, 12);
    const std::vector<double> zero{0.0, 0.0};
    const auto t = translate(s, zero);
    CHECK(t.state == s);
}

TEST_CASE("translation matches the grid shift and reprojection oracle") {
    for (int order : {40, 64}) {
        const double shift = 0.3;
        const auto s = State::hermite_basis({0}, order);
        const std::vector<double> x{shift};
        const auto t = translate(s, x);
        // Shift by exact interpolation in the basis, then re-project on a Gauss-Hermite grid.
        const auto rule = gauss_hermite(2 * order + 1);
        double worst = 0.0;
        for (int n = 0; n <= order; ++n) {
            double c = 0.0;
            for (std::size_t k = 0; k < rule.size(); ++k)
                c += rule.weights[k] * oracle::eval1d(s, rule.nodes[k] - shift) * oracle::hermite(n, rule.nodes[k]);
            worst = std::max(worst, std::abs(c - t.state[n]));
        }
        CHECK(worst <= 1e-6);
        CHECK(t.tail_ratio < 1e-8);
    }
}

TEST_CASE("translation of h0 reproduces the closed-form coefficients") {
    const std::vector<double> x{1.3};
    const auto t = translate(State::hermite_basis({0}, 48), x);
    for (int n = 0; n <= 40; ++n) CHECK(t.state[n] == doctest::Approx(oracle::shifted_ground_state(n, 1.3)).scale(1.0).epsilon(1e-10));
}

TEST_CASE("translation in two dimensions factorises over axes") {
    const std::vector<double> x{0.4, -0.7};
    const auto t = translate(State::hermite_basis({0, 0}, 30), x);
    for (const MultiIndex& n : {MultiIndex{0, 0}, MultiIndex{2, 1}, MultiIndex{1, 3}, MultiIndex{4, 0}}) {
        const double expected = oracle::shifted_ground_state(n[0], 0.4) * oracle::shifted_ground_state(n[1], -0.7);
        CHECK(t.state.coefficient(n) == doctest::Approx(expected).scale(1.0).epsilon(1e-10));
    }
}

TEST_CASE("large shifts at low order raise the tail warning") {
    const std::vector<double> x{3.0};
    const auto t = translate(State::hermite_basis({0}, 8), x);
    CHECK(t.truncation_warning);
    CHECK(t.tail_ratio > 1e-8);
}

TEST_CASE("hermite-sobolev norms use the (2|n|+d) weights") {
    CHECK(norm_at(State::hermite_basis({3}, 5), 0.5) == doctest::Approx(std::sqrt(7.0)));
    CHECK(norm_at(State::hermite_basis({1, 2}, 4), 1.0) == doctest::Approx(8.0));
    std::mt19937_64 rng(11);
    const auto s = oracle::random_state(rng, 1, 30);
    double prev = 0.0;
    for (double q = -1.0; q <= 2.0; q += 0.25) {
        const double n = norm_at(s, q);
        CHECK(n >= prev);
        prev = n;
    }
    CHECK_THROWS(norm_at(State::grid(5), 0.0));
}

TEST_CASE("embedding check on random states") {
    std::mt19937_64 rng(2024);
    std::vector<State> states;
    for (int i = 0; i < 1000; ++i) states.push_back(oracle::random_state(rng, 1 + i % 2, 10 + i % 7, 0.5));
    states.push_back(State::hermite(1, 4));
    const auto report = check_embedding(NormScale::hermite_sobolev(0.0), states);
    CHECK(report.passed);
    CHECK(report.violations == 0);
    CHECK(report.empirical_constant <= 1.0);
    CHECK(report.empirical_constant > 0.0);
    CHECK_THROWS(check_embedding(NormScale{0.0, 0.5, 1.0}, states));
}

TEST_CASE("dirac duals pair to point values") {
    const auto d0 = DualField::dirac({0.0}, 10);
    CHECK(pair(d0, State::hermite_basis({0}, 10)) == doctest::Approx(std::pow(std::numbers::pi, -0.25)));
    std::mt19937_64 rng(5);
    const auto s = oracle::random_state(rng, 1, 25);
    const auto dz = DualField::dirac({0.8}, 25);
    CHECK(pair(dz, s) == doctest::Approx(oracle::eval1d(s, 0.8)));
    const std::vector<double> p{0.8};
    CHECK(evaluate(s, p) == doctest::Approx(oracle::eval1d(s, 0.8)));
    // A shorter dual pairs as if zero padded.
    CHECK(pair(DualField::dirac({0.8}, 3), s) == doctest::Approx(pair({dz.coefficients.resized(3)}, s)));
}

TEST_CASE("grid states use the h-weighted discrete L2 structure") {
    auto g = State::grid(9);
    CHECK(g.grid_spacing() == doctest::Approx(0.1));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0;
    CHECK(grid_norm(g) == doctest::Approx(std::sqrt(0.9)));
    CHECK(level_norm(g, 0.5) == doctest::Approx(std::sqrt(0.9)));
    CHECK_THROWS(g.resized(3));
}

TEST_CASE("arithmetic pads to the longer operand") {
    auto a = State::hermite_basis({1}, 2);
    const auto b = State::hermite_basis({4}, 4);
    a += b;
    CHECK(a.order() == 4);
    CHECK(a[1] == 1.0);
    CHECK(a[4] == 1.0);
    State empty;
    empty.add_scaled(2.0, b);
    CHECK(empty[4] == 2.0);
    CHECK((a - a).is_zero());
}

TEST_CASE("path integrals report the dt refinement gap") {
    const auto s = State::hermite_basis({2}, 3);
    std::vector<State> constant(10, s);
    auto r = integrate_path(constant, 0.1, NormScale{});
    CHECK(r.integral[2] == doctest::Approx(1.0));
    CHECK(r.refinement_residual_h == doctest::Approx(0.0).scale(1.0));

    std::vector<State> ramp;
    for (int k = 0; k < 10; ++k) ramp.push_back(static_cast<double>(k) * s);
    r = integrate_path(ramp, 0.1, NormScale{});
    CHECK(r.integral[2] == doctest::Approx(0.1 * 45.0));
    // Coarse sum 0.2 * (0 + 2 + 4 + 6 + 8) = 4.0 against 4.5.
    CHECK(r.refinement_residual_k == doctest::Approx(0.5));
    CHECK(r.refinement_residual_h == doctest::Approx(0.5 * std::sqrt(5.0)));
    CHECK_THROWS(integrate_path(std::vector<State>{}, 0.1, NormScale{}));
}

TEST_CASE("state json round trip keeps nonzero entries") {
    std::mt19937_64 rng(9);
    auto s = oracle::random_state(rng, 2, 6);
    s[3] = 0.0;
    const auto doc = to_json(s);
    CHECK(doc.at("entries").size() == s.size() - 1);
    CHECK(state_from_json(doc) == s);
    CHECK_THROWS(state_from_json(nlohmann::json{{"d", 1}, {"N", 2}, {"basis_tag", "hermite"}, {"entries", {{{5}, 1.0}}}}));
}
