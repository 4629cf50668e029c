#include "spdeinv/tangency.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace spdeinv {

namespace {

ManifoldOptions frame_options(const SpdeModel& model, const TangencyOptions& options) {
    ManifoldOptions mo = options.manifold;
    mo.q = model.h_regularity();
    return mo;
}

int working_order(const State& y, const TangencyOptions& options) {
    return options.working_order >= 0 ? options.working_order : y.order();
}

double relative(double part, double whole) { return whole > 0.0 ? part / whole : 0.0; }

struct PointContext {
    State y;
    TangentFrame frame;
    int order;
};

PointContext context_at(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                        const TangencyOptions& options) {
    State y = param.eval(x);
    TangentFrame frame = jacobian(param, x, frame_options(model, options));
    const int order = working_order(y, options);
    return {std::move(y), std::move(frame), order};
}

DiffusionCheck diffusion_at(const SpdeModel& model, const PointContext& ctx, const TangencyOptions& options) {
    const double q = model.h_regularity();
    DiffusionCheck out;
    for (const auto& field : model.diffusion(ctx.y)) {
        const auto tc = tangent_coordinates(ctx.frame, field, options.manifold.condition_warning);
        out.coefficients.push_back(tc.coords);
        out.residuals.push_back(relative(tc.residual, tc.field_norm));
        out.spill.push_back(relative(spill_norm(field, ctx.order, q), tc.field_norm));
    }
    return out;
}

DriftCheck drift_bracket(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                         const PointContext& ctx, const DiffusionCheck& diffusion, const TangencyOptions& options) {
    const double q = model.h_regularity();
    const State l = model.drift(ctx.y);
    State correction(l.basis(), l.dim(), l.basis() == Basis::sine_grid ? l.order() : 0);
    if (!diffusion.coefficients.empty()) {
        const Hessian hess = hessian(param, x, frame_options(model, options));
        for (const auto& a : diffusion.coefficients) correction += bracket(hess, a, a);
    }
    State v = l;
    v.add_scaled(-0.5, correction);
    const auto tc = tangent_coordinates(ctx.frame, v, options.manifold.condition_warning);
    const double denom = level_norm(l, q) + 0.5 * level_norm(correction, q);
    DriftCheck out;
    out.form = DriftForm::bracket;
    out.beta = tc.coords;
    out.residual = relative(tc.residual, denom);
    out.spill = relative(spill_norm(v, ctx.order, q), denom);
    return out;
}

DriftCheck drift_stratonovich(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                              const PointContext& ctx, const DiffusionCheck& diffusion, const TangencyOptions& options) {
    const double q = model.h_regularity();
    const State l = model.drift(ctx.y);
    const auto corr = stratonovich_correction(model, ctx.y, options.da_mode, options.stratonovich);
    State v = l;
    v.add_scaled(-0.5, corr.value);
    const auto tc = tangent_coordinates(ctx.frame, v, options.manifold.condition_warning);
    const double denom = level_norm(l, q) + 0.5 * level_norm(corr.value, q);

    // Dphi(Da a) + D^2phi(a, a) = DA A, so beta = coords(L - DA A / 2) + (Da a) / 2.
    DriftCheck out;
    out.form = DriftForm::stratonovich;
    out.beta = tc.coords;
    const std::size_t m = param.dim();
    const double h = options.coefficient_fd_step;
    if (!diffusion.coefficients.empty()) {
        if (!param.domain().contains(x, h))
            throw std::invalid_argument("stratonovich form: chart point too close to the boundary for d a^j / dx");
        std::vector<DiffusionCheck> plus, minus;
        for (std::size_t k = 0; k < m; ++k) {
            ChartPoint xp(x.begin(), x.end());
            ChartPoint xm = xp;
            xp[k] += h;
            xm[k] -= h;
            plus.push_back(diffusion_at(model, context_at(model, param, xp, options), options));
            minus.push_back(diffusion_at(model, context_at(model, param, xm, options), options));
        }
        for (std::size_t j = 0; j < diffusion.coefficients.size(); ++j) {
            const auto& a = diffusion.coefficients[j];
            for (std::size_t i = 0; i < m; ++i) {
                double da_a = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    da_a += a[k] * (plus[k].coefficients[j][i] - minus[k].coefficients[j][i]) / (2.0 * h);
                out.beta[i] += 0.5 * da_a;
            }
        }
    }
    out.residual = relative(tc.residual, denom);
    out.spill = relative(spill_norm(v, ctx.order, q), denom);
    return out;
}

}  // namespace

DiffusionCheck check_diffusion_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                        const TangencyOptions& options) {
    return diffusion_at(model, context_at(model, param, x, options), options);
}

DriftCheck check_drift_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                const DiffusionCheck& diffusion, DriftForm form, const TangencyOptions& options) {
    const auto ctx = context_at(model, param, x, options);
    return form == DriftForm::bracket ? drift_bracket(model, param, x, ctx, diffusion, options)
                                      : drift_stratonovich(model, param, x, ctx, diffusion, options);
}

DriftCheck check_drift_tangency(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                DriftForm form, const TangencyOptions& options) {
    const auto ctx = context_at(model, param, x, options);
    const auto diffusion = diffusion_at(model, ctx, options);
    return form == DriftForm::bracket ? drift_bracket(model, param, x, ctx, diffusion, options)
                                      : drift_stratonovich(model, param, x, ctx, diffusion, options);
}

ReducedCoefficients reduced_coefficients(const SpdeModel& model, const Parametrization& param, std::span<const double> x,
                                         const TangencyOptions& options) {
    const auto ctx = context_at(model, param, x, options);
    auto diffusion = diffusion_at(model, ctx, options);
    auto drift = drift_bracket(model, param, x, ctx, diffusion, options);
    return {std::move(diffusion.coefficients), std::move(drift.beta)};
}

std::vector<ChartPoint> sample_points(const ChartBox& box, const SamplingSpec& spec) {
    const std::size_t m = box.dim();
    if (m == 0) throw std::invalid_argument("sampling spec invalid: chart has no dimensions");
    std::vector<ChartPoint> points;
    if (spec.kind == SamplingSpec::Kind::points) {
        if (spec.points.empty()) throw std::invalid_argument("sampling spec invalid: empty point list");
        for (const auto& x : spec.points)
            if (!box.contains(x)) throw std::invalid_argument("sampling spec invalid: point outside the chart domain");
        return spec.points;
    }
    const bool lattice = spec.kind == SamplingSpec::Kind::lattice && (spec.points_per_axis > 0 || m <= 2);
    if (lattice) {
        const std::size_t k = spec.points_per_axis > 0 ? spec.points_per_axis : 11;
        std::vector<std::size_t> counter(m, 0);
        while (true) {
            ChartPoint x(m);
            for (std::size_t i = 0; i < m; ++i)
                x[i] = box.lower[i] + (static_cast<double>(counter[i]) + 0.5) * (box.upper[i] - box.lower[i]) / static_cast<double>(k);
            points.push_back(std::move(x));
            std::size_t axis = 0;
            while (axis < m && ++counter[axis] == k) counter[axis++] = 0;
            if (axis == m) break;
        }
        return points;
    }
    // m > 2 without an explicit lattice size falls back to Halton points.
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (m > std::size(primes)) throw std::invalid_argument("sampling spec invalid: Halton sampling supports up to 16 dimensions");
    const std::size_t count = spec.count > 0 ? spec.count : 121;
    for (std::size_t n = 1; n <= count; ++n) {
        ChartPoint x(m);
        for (std::size_t i = 0; i < m; ++i) {
            double f = 1.0, r = 0.0;
            for (std::size_t v = n; v > 0; v /= static_cast<std::size_t>(primes[i])) {
                f /= primes[i];
                r += f * static_cast<double>(v % static_cast<std::size_t>(primes[i]));
            }
            x[i] = box.lower[i] + r * (box.upper[i] - box.lower[i]);
        }
        points.push_back(std::move(x));
    }
    return points;
}

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::tangent: return "tangent";
        case Verdict::not_tangent: return "not_tangent";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

PointResult evaluate_point(const SpdeModel& model, const Parametrization& param, const ChartPoint& x,
                           const SweepOptions& options) {
    PointResult r;
    r.x = x;
    const auto& topt = options.tangency;
    try {
        const auto ctx = context_at(model, param, x, topt);
        r.diffusion = diffusion_at(model, ctx, topt);
        const DriftForm primary = options.both_forms ? DriftForm::bracket : options.form;
        r.drift = primary == DriftForm::bracket ? drift_bracket(model, param, x, ctx, r.diffusion, topt)
                                                : drift_stratonovich(model, param, x, ctx, r.diffusion, topt);
        if (options.both_forms) {
            r.drift_alternate = drift_stratonovich(model, param, x, ctx, r.diffusion, topt);
            const double gap = std::abs(r.drift.residual - r.drift_alternate->residual);
            double beta_gap = 0.0;
            for (std::size_t i = 0; i < r.drift.beta.size(); ++i)
                beta_gap = std::max(beta_gap, std::abs(r.drift.beta[i] - r.drift_alternate->beta[i]) /
                                                  std::max(1.0, std::abs(r.drift.beta[i])));
            if (gap > topt.form_tolerance || beta_gap > topt.form_tolerance)
                throw ConsistencyError(fmt::format(
                    "bracket and stratonovich forms disagree (residual gap {:.3e}, beta gap {:.3e}, spill {:.3e})", gap,
                    beta_gap, std::max(r.drift.spill, r.drift_alternate->spill)));
        }
        double spill = r.drift.spill;
        for (double s : r.diffusion.spill) spill = std::max(spill, s);
        r.threshold = ctx.y.basis() == Basis::hermite ? std::max(topt.threshold, topt.spill_factor * spill) : topt.threshold;
        r.max_residual = r.drift.residual;
        if (r.drift_alternate) r.max_residual = std::max(r.max_residual, r.drift_alternate->residual);
        for (double v : r.diffusion.residuals) r.max_residual = std::max(r.max_residual, v);
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

}  // namespace

TangencyReport sweep(const SpdeModel& model, const Parametrization& param, const SamplingSpec& sampling,
                     const SweepOptions& options) {
    const auto points = sample_points(param.domain(), sampling);
    if (points.empty()) throw std::invalid_argument("sampling spec invalid: no sample points");

    TangencyReport report;
    report.points.resize(points.size());
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(points.size())));
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t)
            workers.emplace_back([&, t] {
                for (std::size_t k = t; k < points.size(); k += threads)
                    report.points[k] = evaluate_point(model, param, points[k], options);
            });
    }

    report.base_threshold = options.tangency.threshold;
    report.spill_factor = options.tangency.spill_factor;
    if (options.both_forms) report.forms = {"bracket", "stratonovich"};
    else report.forms = {options.form == DriftForm::bracket ? "bracket" : "stratonovich"};

    bool exceeded = false;
    for (const auto& p : report.points) {
        if (!p.ok) {
            ++report.failed_points;
            continue;
        }
        for (double v : p.diffusion.residuals) report.max_diffusion_residual = std::max(report.max_diffusion_residual, v);
        report.max_drift_residual = std::max(report.max_drift_residual, p.drift.residual);
        for (double s : p.diffusion.spill) report.max_spill = std::max(report.max_spill, s);
        report.max_spill = std::max(report.max_spill, p.drift.spill);
        if (p.drift_alternate) {
            report.max_drift_residual = std::max(report.max_drift_residual, p.drift_alternate->residual);
            report.max_form_disagreement =
                std::max(report.max_form_disagreement, std::abs(p.drift.residual - p.drift_alternate->residual));
        }
        report.max_residual = std::max(report.max_residual, p.max_residual);
        if (p.max_residual > p.threshold) exceeded = true;
    }
    if (report.failed_points == report.points.size()) report.verdict = Verdict::inconclusive;
    else if (exceeded) report.verdict = Verdict::not_tangent;
    else if (report.failed_points > 0) report.verdict = Verdict::inconclusive;
    else report.verdict = Verdict::tangent;
    return report;
}

namespace {

nlohmann::json drift_json(const DriftCheck& d) {
    return {{"form", d.form == DriftForm::bracket ? "bracket" : "stratonovich"},
            {"beta", d.beta},
            {"residual", d.residual},
            {"spill", d.spill}};
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

nlohmann::json TangencyReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        nlohmann::json j = {{"x", p.x}, {"ok", p.ok}};
        if (!p.ok) {
            j["error"] = p.error;
        } else {
            j["diffusion"] = {{"a", p.diffusion.coefficients}, {"residuals", p.diffusion.residuals}, {"spill", p.diffusion.spill}};
            j["drift"] = drift_json(p.drift);
            if (p.drift_alternate) j["drift_alternate"] = drift_json(*p.drift_alternate);
            j["threshold"] = p.threshold;
            j["max_residual"] = p.max_residual;
        }
        pts.push_back(std::move(j));
    }
    return {{"verdict", to_string(verdict)},
            {"forms", forms},
            {"thresholds", {{"base", base_threshold}, {"spill_factor", spill_factor}}},
            {"summary",
             {{"max_diffusion_residual", max_diffusion_residual},
              {"max_drift_residual", max_drift_residual},
              {"max_residual", max_residual},
              {"max_spill", max_spill},
              {"max_form_disagreement", max_form_disagreement},
              {"failed_points", failed_points},
              {"sample_points", points.size()}}},
            {"points", pts}};
}

std::string TangencyReport::to_csv() const {
    std::size_t m = 0;
    std::size_t mcoef = 0;
    for (const auto& p : points) {
        m = std::max(m, p.x.size());
        if (p.ok) mcoef = std::max(mcoef, p.drift.beta.size());
    }
    std::ostringstream out;
    out << "point";
    for (std::size_t i = 0; i < m; ++i) out << ",x" << i;
    out << ",j,rho_j,spill_j";
    for (std::size_t i = 0; i < mcoef; ++i) out << ",a" << i;
    out << ",rho_L";
    for (std::size_t i = 0; i < mcoef; ++i) out << ",beta" << i;
    out << ",threshold,status\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        const std::size_t rows = p.ok ? std::max<std::size_t>(1, p.diffusion.residuals.size()) : 1;
        for (std::size_t j = 0; j < rows; ++j) {
            out << k;
            for (std::size_t i = 0; i < m; ++i) out << ',' << num(p.x[i]);
            const bool has_j = p.ok && j < p.diffusion.residuals.size();
            if (has_j) out << ',' << j << ',' << num(p.diffusion.residuals[j]) << ',' << num(p.diffusion.spill[j]);
            else out << ",,,";
            for (std::size_t i = 0; i < mcoef; ++i) out << ',' << (has_j ? num(p.diffusion.coefficients[j][i]) : "");
            out << ',' << (p.ok ? num(p.drift.residual) : "");
            for (std::size_t i = 0; i < mcoef; ++i) out << ',' << (p.ok ? num(p.drift.beta[i]) : "");
            out << ',' << (p.ok ? num(p.threshold) : "") << ',';
            if (!p.ok) out << "error";
            else out << (p.max_residual <= p.threshold ? "tangent" : "not_tangent");
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace spdeinv
