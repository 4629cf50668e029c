#include "oracles.hpp"

#include "spdeinv/simulate.hpp"

#include <doctest.h>

#include <cmath>

using namespace spdeinv;

namespace {

double heat_error(double dt) {
    const PLaplaceModel model(2.0, 15, {});
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = dt;
    const auto v = model.sine_mode(1);
    const double lambda = model.laplacian_eigenvalue(1);
    const auto path = simulate_full(model, v, cfg);
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const auto exact = std::exp(lambda * path.times[k]) * v;
        worst = std::max(worst, grid_norm(path.states[k] - exact));
        scale = std::max(scale, grid_norm(exact));
    }
    return worst / scale;
}

}  // namespace

TEST_CASE("noise stream is a pure function of its key") {
    const NoiseStream a(42), b(42), c(43);
    CHECK(a.normal(3, 100, 1) == b.normal(3, 100, 1));
    CHECK(a.normal(3, 100, 1) != c.normal(3, 100, 1));
    CHECK(a.normal(3, 100, 1) != a.normal(3, 100, 2));
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double z = a.normal(0, static_cast<std::uint64_t>(k), 0);
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("substepped increments share the Brownian path of the finer grid") {
    const NoiseStream noise(7);
    SimConfig coarse, fine;
    coarse.dt = 0.01;
    coarse.noise_substeps = 2;
    fine.dt = 0.005;
    for (std::size_t k = 0; k < 10; ++k) {
        const double dw = wiener_increment(noise, coarse, 0, k, 0);
        const double sum = wiener_increment(noise, fine, 0, 2 * k, 0) + wiener_increment(noise, fine, 0, 2 * k + 1, 0);
        CHECK(dw == doctest::Approx(sum).epsilon(1e-14));
    }
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg.dt = 0.3;
    cfg.horizon = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg.dt = 0.25;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.steps() == 4);
}

TEST_CASE("zero coefficients give a constant path") {
    const ItoTypeModel model(1, 0.0, {PairingFunctional::constant(1, 0.0)}, {});
    const auto y0 = State::hermite_basis({2}, 8);
    SimConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 0.01;
    const auto path = simulate_full(model, y0, cfg);
    CHECK(path.states.size() == 11);
    for (const auto& y : path.states) CHECK(y == y0);
    CHECK_FALSE(path.exploded);
}

TEST_CASE("heat equation matches exponential decay at first order") {
    const double e1 = heat_error(1e-3);
    const double e2 = heat_error(5e-4);
    CHECK(e1 <= 5e-3);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("reduced path for a linear eigen model follows the scalar ODEs") {
    const PLaplaceModel lap(2.0, 31, {});
    const LinearEigenModel model([](const State& y) { return plaplace_operator(y, 2.0); },
                                 {{lap.sine_mode(1), lap.laplacian_eigenvalue(1)}, {lap.sine_mode(2), lap.laplacian_eigenvalue(2)}},
                                 {});
    const LinearSpanChart chart({lap.sine_mode(1), lap.sine_mode(2)}, {{-2.0, -2.0}, {2.0, 2.0}});
    SimConfig cfg;
    cfg.horizon = 0.05;
    cfg.dt = 1e-4;
    const std::vector<double> x0{1.0, 0.5};
    const auto path = simulate_reduced(model, chart, x0, cfg);
    CHECK_FALSE(path.exited);
    const double t = path.times.back();
    CHECK(path.points.back()[0] == doctest::Approx(std::exp(lap.laplacian_eigenvalue(1) * t)).epsilon(2e-3));
    CHECK(path.points.back()[1] == doctest::Approx(0.5 * std::exp(lap.laplacian_eigenvalue(2) * t)).epsilon(1e-2));
}

TEST_CASE("explosion and chart exit are flagged, not thrown") {
    const PLaplaceModel lap(2.0, 7, {});
    const LinearEigenModel growth([](const State& y) { return 50.0 * y; }, {{lap.sine_mode(1), 50.0}}, {});
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 1e-3;
    cfg.explosion_ceiling = 10.0;
    const auto full = simulate_full(growth, lap.sine_mode(1), cfg);
    CHECK(full.exploded);
    CHECK(full.exit_time < 1.0);

    const LinearSpanChart chart({lap.sine_mode(1)}, {{-2.0}, {2.0}});
    const std::vector<double> x0{1.0};
    const auto reduced = simulate_reduced(growth, chart, x0, cfg);
    CHECK(reduced.exited);
    CHECK(reduced.exit_time == doctest::Approx(std::log(2.0) / 50.0).epsilon(0.1));
}

TEST_CASE("coupled comparison with transport drift converges at first order") {
    // L = -b d/dx, A = 0 on the translation manifold: both paths are deterministic.
    const ItoTypeModel model(1, 0.0, {PairingFunctional::constant(1, 0.8)}, {});
    const TranslationChart chart(State::hermite_basis({0}, 40), {{-2.0}, {2.0}});
    const std::vector<double> x0{-0.5};
    auto error_at = [&](double dt) {
        SimConfig cfg;
        cfg.horizon = 0.5;
        cfg.dt = dt;
        const auto r = coupled_compare(model, chart, x0, cfg);
        return r.summary.max_coupled_error;
    };
    const double e1 = error_at(2e-3), e2 = error_at(1e-3);
    CHECK(e1 < 1e-2);
    CHECK(std::log2(e1 / e2) >= 0.9);
}

TEST_CASE("tangent ito case stays near the manifold and is thread independent") {
    const int order = 40;
    const ItoTypeModel model(1, 0.0, {{DualField::dirac({0.0}, order), 0.0}}, {{{DualField::dirac({0.0}, order), 0.0}}});
    const TranslationChart chart(State::hermite_basis({0}, order), {{-2.0}, {2.0}});
    const std::vector<double> x0{0.0};
    SimConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 1e-3;
    cfg.paths = 4;
    cfg.seed = 5;
    cfg.record_every = 10;
    const auto one = coupled_compare(model, chart, x0, cfg);
    cfg.threads = 3;
    const auto three = coupled_compare(model, chart, x0, cfg);
    CHECK(trajectories_csv(one, 0.5) == trajectories_csv(three, 0.5));
    CHECK(one.summary.max_distance < 0.05);
    CHECK(one.summary.unconverged_distances == 0);
    for (const auto& rec : one.paths) {
        CHECK(rec.times.size() == 11);
        CHECK(rec.distance.size() == rec.times.size());
        CHECK(rec.coupled_error.size() == rec.times.size());
    }

    cfg.coupling = false;
    const auto uncoupled = coupled_compare(model, chart, x0, cfg);
    CHECK(uncoupled.summary.max_coupled_error > one.summary.max_coupled_error);
}
