#include "spdeinv/simulate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace spdeinv {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) {
    // 53 random bits mapped to (0, 1].
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

constexpr std::uint64_t uncoupled_tag = 1ULL << 63;

bool record_step(std::size_t k, std::size_t steps, std::size_t every) { return k % every == 0 || k == steps; }

}  // namespace

double NoiseStream::normal(std::uint64_t path, std::uint64_t step, std::uint64_t j) const {
    std::uint64_t key = splitmix(seed_);
    key = splitmix(key ^ path);
    key = splitmix(key ^ step);
    key = splitmix(key ^ j);
    const double u1 = unit_open(key);
    const double u2 = unit_open(splitmix(key));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t SimConfig::steps() const {
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("simulation config: dt must be positive");
    if (!(horizon >= dt)) throw std::invalid_argument("simulation config: horizon must be at least dt");
    if (paths < 1) throw std::invalid_argument("simulation config: need at least one path");
    if (noise_substeps < 1) throw std::invalid_argument("simulation config: noise_substeps must be positive");
    if (record_every < 1) throw std::invalid_argument("simulation config: record_every must be positive");
    const double n = horizon / dt;
    if (std::abs(n - std::round(n)) > 1e-9 * n) throw std::invalid_argument("simulation config: horizon must be a multiple of dt");
}

double wiener_increment(const NoiseStream& noise, const SimConfig& cfg, std::size_t path, std::size_t step, std::size_t j) {
    const auto k = static_cast<std::size_t>(cfg.noise_substeps);
    const double scale = std::sqrt(cfg.dt / static_cast<double>(k));
    double sum = 0.0;
    for (std::size_t s = 0; s < k; ++s) sum += noise.normal(path, step * k + s, j);
    return scale * sum;
}

FullPath simulate_full(const SpdeModel& model, const State& y0, const SimConfig& cfg, std::size_t path) {
    cfg.validate();
    const NoiseStream noise(cfg.seed);
    const std::size_t steps = cfg.steps();
    const std::size_t noise_dim = model.noise_dimension();
    const double q = model.h_regularity();

    FullPath out;
    State y = y0;
    out.times.push_back(0.0);
    out.states.push_back(y);
    out.exit_time = cfg.horizon;
    for (std::size_t k = 0; k < steps; ++k) {
        State next = y;
        next.add_scaled(cfg.dt, model.drift(y));
        if (noise_dim > 0) {
            const auto fields = model.diffusion(y);
            for (std::size_t j = 0; j < noise_dim; ++j) {
                const double dw = wiener_increment(noise, cfg, path, k, j);
                next.add_scaled(dw, fields[j]);
            }
        }
        if (next.basis() == Basis::hermite) next = next.resized(y0.order());
        y = std::move(next);
        const double t = static_cast<double>(k + 1) * cfg.dt;
        const double norm = level_norm(y, q);
        if (!std::isfinite(norm) || norm > cfg.explosion_ceiling) {
            out.exploded = true;
            out.exit_time = t;
            break;
        }
        if (record_step(k + 1, steps, cfg.record_every)) {
            out.times.push_back(t);
            out.states.push_back(y);
        }
    }
    return out;
}

ReducedPath simulate_reduced(const SpdeModel& model, const Parametrization& param, std::span<const double> x0,
                             const SimConfig& cfg, std::size_t path, const TangencyOptions& options) {
    cfg.validate();
    if (!param.domain().contains(x0)) throw std::invalid_argument("simulate_reduced: x0 outside the chart domain");
    const NoiseStream noise(cfg.seed);
    const std::size_t steps = cfg.steps();
    const std::uint64_t stream = cfg.coupling ? path : (path | uncoupled_tag);

    ReducedPath out;
    ChartPoint x(x0.begin(), x0.end());
    out.times.push_back(0.0);
    out.points.push_back(x);
    out.exit_time = cfg.horizon;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto coeffs = reduced_coefficients(model, param, x, options);
        ChartPoint next = x;
        for (std::size_t i = 0; i < x.size(); ++i) next[i] += coeffs.beta[i] * cfg.dt;
        for (std::size_t j = 0; j < coeffs.a.size(); ++j) {
            const double dw = wiener_increment(noise, cfg, stream, k, j);
            for (std::size_t i = 0; i < x.size(); ++i) next[i] += coeffs.a[j][i] * dw;
        }
        const double t = static_cast<double>(k + 1) * cfg.dt;
        if (!param.domain().contains(next)) {
            out.exited = true;
            out.exit_time = t;
            break;
        }
        x = std::move(next);
        if (record_step(k + 1, steps, cfg.record_every)) {
            out.times.push_back(t);
            out.points.push_back(x);
        }
    }
    return out;
}

namespace {

TrajectoryRecord run_path(const SpdeModel& model, const Parametrization& param, std::span<const double> x0,
                          const State& y0, const SimConfig& cfg, const CompareOptions& options, std::size_t path) {
    TrajectoryRecord rec;
    rec.path = path;
    const double q = model.h_regularity();
    const FullPath full = simulate_full(model, y0, cfg, path);
    rec.exploded = full.exploded;
    rec.lifetime = full.exit_time;

    std::size_t length = full.times.size();
    ReducedPath reduced;
    if (options.run_reduced) {
        reduced = simulate_reduced(model, param, x0, cfg, path, options.tangency);
        rec.exited = reduced.exited;
        rec.lifetime = std::min(rec.lifetime, reduced.exit_time);
        length = std::min(length, reduced.times.size());
    }

    ManifoldOptions mo = options.tangency.manifold;
    mo.q = q;
    ChartPoint guess(x0.begin(), x0.end());
    for (std::size_t k = 0; k < length; ++k) {
        rec.times.push_back(full.times[k]);
        rec.full.push_back(full.states[k]);
        if (options.run_reduced) {
            rec.reduced.push_back(reduced.points[k]);
            rec.lifted.push_back(param.eval(reduced.points[k]));
            rec.coupled_error.push_back(level_norm(full.states[k] - rec.lifted.back(), q));
            guess = reduced.points[k];
        }
        const auto d = distance_to_manifold(param, full.states[k], guess, mo, options.gauss_newton);
        rec.nearest.push_back(d.point);
        rec.distance.push_back(d.distance);
        rec.distance_converged.push_back(d.converged);
        if (!options.run_reduced) guess = d.point;
    }
    return rec;
}

}  // namespace

CoupledResult coupled_compare(const SpdeModel& model, const Parametrization& param, std::span<const double> x0,
                              const SimConfig& cfg, const CompareOptions& options) {
    cfg.validate();
    const State y0 = param.eval(x0);
    CoupledResult result;
    result.paths.resize(cfg.paths);
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.paths)));
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t)
            workers.emplace_back([&, t] {
                for (std::size_t p = t; p < cfg.paths; p += threads)
                    result.paths[p] = run_path(model, param, x0, y0, cfg, options, p);
            });
    }

    auto& s = result.summary;
    double dist_sum = 0.0, err_sum = 0.0;
    std::size_t dist_count = 0, err_count = 0;
    for (const auto& rec : result.paths) {
        if (rec.exploded) ++s.exploded_paths;
        if (rec.exited) ++s.exited_paths;
        for (std::size_t k = 0; k < rec.distance.size(); ++k) {
            s.max_distance = std::max(s.max_distance, rec.distance[k]);
            dist_sum += rec.distance[k];
            ++dist_count;
            if (!rec.distance_converged[k]) ++s.unconverged_distances;
        }
        for (double e : rec.coupled_error) {
            s.max_coupled_error = std::max(s.max_coupled_error, e);
            err_sum += e;
            ++err_count;
        }
    }
    s.mean_distance = dist_count > 0 ? dist_sum / static_cast<double>(dist_count) : 0.0;
    s.mean_coupled_error = err_count > 0 ? err_sum / static_cast<double>(err_count) : 0.0;
    return result;
}

std::string trajectories_csv(const CoupledResult& result, double q) {
    std::size_t m = 0;
    for (const auto& rec : result.paths)
        if (!rec.nearest.empty()) m = rec.nearest.front().size();
    const bool with_reduced = std::any_of(result.paths.begin(), result.paths.end(),
                                          [](const TrajectoryRecord& r) { return !r.reduced.empty(); });
    std::ostringstream out;
    out << "path,time";
    if (with_reduced)
        for (std::size_t i = 0; i < m; ++i) out << ",x" << i;
    for (std::size_t i = 0; i < m; ++i) out << ",nearest" << i;
    out << ",distance,distance_converged";
    if (with_reduced) out << ",coupled_error";
    out << ",full_norm\n";
    for (const auto& rec : result.paths) {
        for (std::size_t k = 0; k < rec.times.size(); ++k) {
            out << rec.path << ',' << fmt::format("{:.17g}", rec.times[k]);
            if (with_reduced)
                for (std::size_t i = 0; i < m; ++i) out << ',' << fmt::format("{:.17g}", rec.reduced[k][i]);
            for (std::size_t i = 0; i < m; ++i) out << ',' << fmt::format("{:.17g}", rec.nearest[k][i]);
            out << ',' << fmt::format("{:.17g}", rec.distance[k]) << ',' << (rec.distance_converged[k] ? 1 : 0);
            if (with_reduced) out << ',' << fmt::format("{:.17g}", rec.coupled_error[k]);
            out << ',' << fmt::format("{:.17g}", level_norm(rec.full[k], q)) << '\n';
        }
    }
    return out.str();
}

}  // namespace spdeinv
