#include "spdeinv/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace spdeinv {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Field access with key paths in the diagnostics.

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key, "missing required key");
    return *it;
}

double number(const json& obj, const std::string& key, const std::string& path, std::optional<double> fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (fallback) return *fallback;
        throw ConfigError(path + "." + key, "missing required key");
    }
    if (!it->is_number()) throw ConfigError(path + "." + key, "expected a number");
    return it->get<double>();
}

long long integer(const json& obj, const std::string& key, const std::string& path, std::optional<long long> fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (fallback) return *fallback;
        throw ConfigError(path + "." + key, "missing required key");
    }
    if (!it->is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
    return it->get<long long>();
}

std::string text(const json& obj, const std::string& key, const std::string& path, std::optional<std::string> fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (fallback) return *fallback;
        throw ConfigError(path + "." + key, "missing required key");
    }
    if (!it->is_string()) throw ConfigError(path + "." + key, "expected a string");
    return it->get<std::string>();
}

bool boolean(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_boolean()) throw ConfigError(path + "." + key, "expected true or false");
    return it->get<bool>();
}

std::vector<double> numbers(const json& value, const std::string& path) {
    if (!value.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : value) {
        if (!v.is_number()) throw ConfigError(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(path + "." + key, "unknown key");
}

// ---------------------------------------------------------------------------
// State space of a model: where state specs are materialised.

struct Space {
    Basis basis = Basis::hermite;
    int dim = 1;
    int order = 0;
    std::size_t grid_points = 0;
};

Space model_space(const json& model) {
    const auto kind = model.at("kind").get<std::string>();
    if (kind == "ito") return {Basis::hermite, model.at("d").get<int>(), model.at("N").get<int>(), 0};
    const auto points = model.at("grid_points").get<std::size_t>();
    return {Basis::sine_grid, 1, static_cast<int>(points) - 1, points};
}

json normalize_state_spec(const json& spec, const Space& space, const std::string& path) {
    if (!spec.is_object()) throw ConfigError(path, "expected a state spec object");
    const auto kind = text(spec, "kind", path);
    if (kind == "zero") {
        reject_unknown(spec, {"kind"}, path);
        return {{"kind", "zero"}};
    }
    if (kind == "hermite") {
        if (space.basis != Basis::hermite) throw ConfigError(path + ".kind", "hermite state on a grid model");
        reject_unknown(spec, {"kind", "index", "amplitude"}, path);
        const auto& idx = require(spec, "index", path);
        if (!idx.is_array() || static_cast<int>(idx.size()) != space.dim)
            throw ConfigError(path + ".index", "expected a multi-index of length d");
        int total = 0;
        for (const auto& v : idx) {
            if (!v.is_number_integer() || v.get<int>() < 0) throw ConfigError(path + ".index", "entries must be non-negative integers");
            total += v.get<int>();
        }
        if (total > space.order) throw ConfigError(path + ".index", "order exceeds the model truncation N");
        return {{"kind", "hermite"}, {"index", idx}, {"amplitude", number(spec, "amplitude", path, 1.0)}};
    }
    if (kind == "coefficients") {
        if (space.basis != Basis::hermite) throw ConfigError(path + ".kind", "coefficient state on a grid model");
        reject_unknown(spec, {"kind", "entries"}, path);
        const auto& entries = require(spec, "entries", path);
        try {
            json doc = {{"d", space.dim}, {"N", space.order}, {"basis_tag", "hermite"}, {"entries", entries}};
            return {{"kind", "coefficients"}, {"entries", to_json(state_from_json(doc)).at("entries")}};
        } catch (const std::exception& e) {
            throw ConfigError(path + ".entries", e.what());
        }
    }
    if (kind == "sine_mode") {
        if (space.basis != Basis::sine_grid) throw ConfigError(path + ".kind", "sine mode on a hermite model");
        reject_unknown(spec, {"kind", "k", "amplitude"}, path);
        const auto k = integer(spec, "k", path);
        if (k < 1) throw ConfigError(path + ".k", "mode number must be at least 1");
        return {{"kind", "sine_mode"}, {"k", k}, {"amplitude", number(spec, "amplitude", path, 1.0)}};
    }
    if (kind == "values") {
        if (space.basis != Basis::sine_grid) throw ConfigError(path + ".kind", "grid values on a hermite model");
        reject_unknown(spec, {"kind", "values"}, path);
        auto values = numbers(require(spec, "values", path), path + ".values");
        if (values.size() != space.grid_points) throw ConfigError(path + ".values", "length must equal grid_points");
        return {{"kind", "values"}, {"values", values}};
    }
    throw ConfigError(path + ".kind", "unknown state kind '" + kind + "'");
}

State make_state(const json& spec, const Space& space) {
    const auto kind = spec.at("kind").get<std::string>();
    State s = space.basis == Basis::hermite ? State::hermite(space.dim, space.order) : State::grid(space.grid_points);
    if (kind == "hermite") {
        s = State::hermite_basis(spec.at("index").get<MultiIndex>(), space.order);
        s *= spec.at("amplitude").get<double>();
    } else if (kind == "coefficients") {
        s = state_from_json({{"d", space.dim}, {"N", space.order}, {"basis_tag", "hermite"}, {"entries", spec.at("entries")}});
    } else if (kind == "sine_mode") {
        const double h = 1.0 / static_cast<double>(space.grid_points + 1);
        const auto k = spec.at("k").get<double>();
        const double amp = spec.at("amplitude").get<double>();
        for (std::size_t i = 0; i < space.grid_points; ++i)
            s[i] = amp * std::sin(k * std::numbers::pi * h * static_cast<double>(i + 1));
    } else if (kind == "values") {
        const auto values = spec.at("values").get<std::vector<double>>();
        for (std::size_t i = 0; i < values.size(); ++i) s[i] = values[i];
    }
    return s;
}

json normalize_functional(const json& spec, const Space& space, const std::string& path) {
    if (!spec.is_object()) throw ConfigError(path, "expected a pairing functional object");
    const auto kind = text(spec, "kind", path);
    if (kind == "zero") {
        reject_unknown(spec, {"kind"}, path);
        return {{"kind", "zero"}};
    }
    if (kind == "constant") {
        reject_unknown(spec, {"kind", "value"}, path);
        return {{"kind", "constant"}, {"value", number(spec, "value", path)}};
    }
    if (kind == "dirac") {
        reject_unknown(spec, {"kind", "z", "scale"}, path);
        auto z = numbers(require(spec, "z", path), path + ".z");
        if (static_cast<int>(z.size()) != space.dim) throw ConfigError(path + ".z", "point must have d coordinates");
        return {{"kind", "dirac"}, {"z", z}, {"scale", number(spec, "scale", path, 1.0)}};
    }
    if (kind == "hermite_coefficients") {
        reject_unknown(spec, {"kind", "entries"}, path);
        auto state = normalize_state_spec({{"kind", "coefficients"}, {"entries", require(spec, "entries", path)}}, space, path);
        return {{"kind", "hermite_coefficients"}, {"entries", state.at("entries")}};
    }
    throw ConfigError(path + ".kind", "unknown pairing kind '" + kind + "'");
}

PairingFunctional make_functional(const json& spec, const Space& space) {
    const auto kind = spec.at("kind").get<std::string>();
    if (kind == "constant") return PairingFunctional::constant(space.dim, spec.at("value").get<double>());
    if (kind == "dirac") {
        auto d = DualField::dirac(spec.at("z").get<std::vector<double>>(), space.order);
        d.coefficients *= spec.at("scale").get<double>();
        return {std::move(d), 0.0};
    }
    if (kind == "hermite_coefficients")
        return {{make_state({{"kind", "coefficients"}, {"entries", spec.at("entries")}}, space)}, 0.0};
    return {DualField::zero(space.dim, space.order), 0.0};
}

json normalize_field(const json& spec, const Space& space, const std::string& path) {
    if (!spec.is_object()) throw ConfigError(path, "expected a diffusion field object");
    reject_unknown(spec, {"offset", "scale"}, path);
    json offset = spec.contains("offset") ? normalize_state_spec(spec.at("offset"), space, path + ".offset") : json{{"kind", "zero"}};
    return {{"offset", offset}, {"scale", number(spec, "scale", path, 0.0)}};
}

std::vector<AffineField> make_fields(const json& list, const Space& space) {
    std::vector<AffineField> out;
    for (const auto& f : list) out.push_back({make_state(f.at("offset"), space), f.at("scale").get<double>()});
    return out;
}

json normalize_fields(const json& obj, const std::string& key, const Space& space, const std::string& path) {
    json out = json::array();
    if (!obj.contains(key)) return out;
    const auto& list = obj.at(key);
    if (!list.is_array()) throw ConfigError(path + "." + key, "expected an array of diffusion fields");
    for (std::size_t j = 0; j < list.size(); ++j) out.push_back(normalize_field(list[j], space, fmt::format("{}.{}[{}]", path, key, j)));
    return out;
}

json normalize_model(const json& model) {
    const std::string path = "model";
    if (!model.is_object()) throw ConfigError(path, "expected an object");
    const auto kind = text(model, "kind", path);
    json out;
    Space space;
    if (kind == "ito") {
        reject_unknown(model, {"kind", "d", "N", "p", "J", "b", "sigma", "diffusion_override"}, path);
        const auto d = integer(model, "d", path, 1);
        const auto n = integer(model, "N", path, 32);
        if (d < 1) throw ConfigError(path + ".d", "must be positive");
        if (n < 1) throw ConfigError(path + ".N", "must be positive");
        space = {Basis::hermite, static_cast<int>(d), static_cast<int>(n), 0};
        out = {{"kind", "ito"}, {"d", d}, {"N", n}, {"p", number(model, "p", path, 0.0)}};
        json b = json::array();
        if (model.contains("b")) {
            const auto& list = model.at("b");
            if (!list.is_array() || static_cast<long long>(list.size()) != d) throw ConfigError(path + ".b", "expected d pairing functionals");
            for (std::size_t i = 0; i < list.size(); ++i) b.push_back(normalize_functional(list[i], space, fmt::format("{}.b[{}]", path, i)));
        } else {
            for (long long i = 0; i < d; ++i) b.push_back({{"kind", "zero"}});
        }
        json sigma = json::array();
        if (model.contains("sigma")) {
            const auto& rows = model.at("sigma");
            if (!rows.is_array()) throw ConfigError(path + ".sigma", "expected a list of d-tuples");
            for (std::size_t j = 0; j < rows.size(); ++j) {
                if (!rows[j].is_array() || static_cast<long long>(rows[j].size()) != d)
                    throw ConfigError(fmt::format("{}.sigma[{}]", path, j), "expected d pairing functionals");
                json row = json::array();
                for (std::size_t i = 0; i < rows[j].size(); ++i)
                    row.push_back(normalize_functional(rows[j][i], space, fmt::format("{}.sigma[{}][{}]", path, j, i)));
                sigma.push_back(row);
            }
        }
        const auto j_total = integer(model, "J", path, static_cast<long long>(sigma.size()));
        if (j_total < static_cast<long long>(sigma.size())) throw ConfigError(path + ".J", "smaller than the number of sigma rows");
        while (static_cast<long long>(sigma.size()) < j_total) {
            json row = json::array();
            for (long long i = 0; i < d; ++i) row.push_back({{"kind", "zero"}});
            sigma.push_back(row);
        }
        out["J"] = j_total;
        out["b"] = b;
        out["sigma"] = sigma;
    } else if (kind == "plaplace" || kind == "linear_eigen") {
        const std::set<std::string> common = {"kind", "grid_points", "diffusion", "diffusion_override"};
        std::set<std::string> allowed = common;
        if (kind == "plaplace") allowed.insert("p");
        else allowed.insert({"operator", "modes", "tolerance"});
        reject_unknown(model, allowed, path);
        const auto points = integer(model, "grid_points", path);
        if (points < 1) throw ConfigError(path + ".grid_points", "must be positive");
        space = {Basis::sine_grid, 1, static_cast<int>(points) - 1, static_cast<std::size_t>(points)};
        out = {{"kind", kind}, {"grid_points", points}, {"diffusion", normalize_fields(model, "diffusion", space, path)}};
        if (kind == "plaplace") {
            const double p = number(model, "p", path, 2.0);
            if (!(p >= 2.0)) throw ConfigError(path + ".p", "p-Laplace exponent must be at least 2");
            out["p"] = p;
        } else {
            const auto op = text(model, "operator", path, std::string("laplacian"));
            if (op != "laplacian") throw ConfigError(path + ".operator", "only 'laplacian' is available from config");
            out["operator"] = op;
            const auto& modes = require(model, "modes", path);
            if (!modes.is_array() || modes.empty()) throw ConfigError(path + ".modes", "expected a non-empty list of mode numbers");
            for (const auto& k : modes)
                if (!k.is_number_integer() || k.get<int>() < 1) throw ConfigError(path + ".modes", "mode numbers must be positive integers");
            out["modes"] = modes;
            out["tolerance"] = number(model, "tolerance", path, 1e-10);
        }
    } else {
        throw ConfigError(path + ".kind", "unknown model kind '" + kind + "'");
    }
    if (model.contains("diffusion_override")) {
        const auto& list = model.at("diffusion_override");
        if (!list.is_null()) out["diffusion_override"] = normalize_fields(model, "diffusion_override", space, path);
    }
    return out;
}

json normalize_box(const json& obj, std::size_t m, const std::string& path) {
    const auto& box = require(obj, "domain", path);
    reject_unknown(box, {"lower", "upper"}, path + ".domain");
    auto lower = numbers(require(box, "lower", path + ".domain"), path + ".domain.lower");
    auto upper = numbers(require(box, "upper", path + ".domain"), path + ".domain.upper");
    if (lower.size() != m || upper.size() != m) throw ConfigError(path + ".domain", fmt::format("expected {} bounds per side", m));
    for (std::size_t i = 0; i < m; ++i)
        if (!(lower[i] < upper[i])) throw ConfigError(path + ".domain", "lower must be below upper");
    return {{"lower", lower}, {"upper", upper}};
}

json normalize_manifold(const json& manifold, const json& model) {
    const std::string path = "manifold";
    if (!manifold.is_object()) throw ConfigError(path, "expected an object");
    const Space space = model_space(model);
    const auto kind = text(manifold, "kind", path);
    if (kind == "translation_group") {
        if (space.basis != Basis::hermite) throw ConfigError(path + ".kind", "translation manifolds need a hermite model");
        reject_unknown(manifold, {"kind", "profile", "domain"}, path);
        return {{"kind", kind},
                {"profile", normalize_state_spec(require(manifold, "profile", path), space, path + ".profile")},
                {"domain", normalize_box(manifold, static_cast<std::size_t>(space.dim), path)}};
    }
    if (kind == "linear_span") {
        reject_unknown(manifold, {"kind", "vectors", "domain"}, path);
        const auto& list = require(manifold, "vectors", path);
        if (!list.is_array() || list.empty()) throw ConfigError(path + ".vectors", "expected a non-empty list of states");
        json vectors = json::array();
        for (std::size_t i = 0; i < list.size(); ++i)
            vectors.push_back(normalize_state_spec(list[i], space, fmt::format("{}.vectors[{}]", path, i)));
        return {{"kind", kind}, {"vectors", vectors}, {"domain", normalize_box(manifold, list.size(), path)}};
    }
    throw ConfigError(path + ".kind", "unknown manifold kind '" + kind + "'");
}

CheckSettings parse_check(const json& obj) {
    const std::string path = "check";
    CheckSettings c;
    if (obj.is_null()) return c;
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(obj, {"form", "da_mode", "threshold", "spill_factor", "form_tolerance", "sampling"}, path);
    c.form = text(obj, "form", path, c.form);
    if (c.form != "bracket" && c.form != "stratonovich" && c.form != "both")
        throw ConfigError(path + ".form", "expected bracket, stratonovich or both");
    c.da_mode = text(obj, "da_mode", path, c.da_mode);
    if (c.da_mode != "analytic" && c.da_mode != "finite_difference")
        throw ConfigError(path + ".da_mode", "expected analytic or finite_difference");
    c.threshold = number(obj, "threshold", path, c.threshold);
    c.spill_factor = number(obj, "spill_factor", path, c.spill_factor);
    c.form_tolerance = number(obj, "form_tolerance", path, c.form_tolerance);
    if (!(c.threshold > 0.0)) throw ConfigError(path + ".threshold", "must be positive");
    if (obj.contains("sampling")) {
        const auto& s = obj.at("sampling");
        const std::string sp = path + ".sampling";
        if (!s.is_object()) throw ConfigError(sp, "expected an object");
        reject_unknown(s, {"kind", "points_per_axis", "count", "points"}, sp);
        const auto kind = text(s, "kind", sp, std::string("lattice"));
        if (kind == "lattice") c.sampling.kind = SamplingSpec::Kind::lattice;
        else if (kind == "halton") c.sampling.kind = SamplingSpec::Kind::halton;
        else if (kind == "points") c.sampling.kind = SamplingSpec::Kind::points;
        else throw ConfigError(sp + ".kind", "expected lattice, halton or points");
        const auto ppa = integer(s, "points_per_axis", sp, 0);
        const auto count = integer(s, "count", sp, 0);
        if (ppa < 0 || count < 0) throw ConfigError(sp, "point counts must be non-negative");
        c.sampling.points_per_axis = static_cast<std::size_t>(ppa);
        c.sampling.count = static_cast<std::size_t>(count);
        if (s.contains("points")) {
            const auto& pts = s.at("points");
            if (!pts.is_array()) throw ConfigError(sp + ".points", "expected a list of chart points");
            for (std::size_t i = 0; i < pts.size(); ++i) c.sampling.points.push_back(numbers(pts[i], fmt::format("{}.points[{}]", sp, i)));
        }
        if (c.sampling.kind == SamplingSpec::Kind::points && c.sampling.points.empty())
            throw ConfigError(sp + ".points", "sampling spec invalid: empty point list");
    }
    return c;
}

SimulateSettings parse_simulate(const json& obj, std::size_t chart_dim) {
    const std::string path = "simulate";
    SimulateSettings s;
    s.x0.assign(chart_dim, 0.0);
    if (obj.is_null()) return s;
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(obj, {"T", "dt", "paths", "seed", "noise_substeps", "coupling", "run_reduced", "record_every",
                         "explosion_ceiling", "x0"},
                   path);
    s.horizon = number(obj, "T", path, s.horizon);
    s.dt = number(obj, "dt", path, s.dt);
    const auto paths = integer(obj, "paths", path, 1);
    if (paths < 1) throw ConfigError(path + ".paths", "must be at least 1");
    s.paths = static_cast<std::size_t>(paths);
    if (obj.contains("seed")) {
        const auto& seed = obj.at("seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
            throw ConfigError(path + ".seed", "expected a non-negative integer");
        s.seed = seed.get<std::uint64_t>();
    }
    s.noise_substeps = static_cast<int>(integer(obj, "noise_substeps", path, 1));
    s.coupling = boolean(obj, "coupling", path, true);
    s.run_reduced = boolean(obj, "run_reduced", path, true);
    const auto every = integer(obj, "record_every", path, 1);
    if (every < 1) throw ConfigError(path + ".record_every", "must be at least 1");
    s.record_every = static_cast<std::size_t>(every);
    s.explosion_ceiling = number(obj, "explosion_ceiling", path, s.explosion_ceiling);
    if (obj.contains("x0")) {
        s.x0 = numbers(obj.at("x0"), path + ".x0");
        if (s.x0.size() != chart_dim) throw ConfigError(path + ".x0", fmt::format("expected {} chart coordinates", chart_dim));
    }
    SimConfig probe{s.horizon, s.dt, s.paths, s.seed, s.noise_substeps, s.coupling, s.record_every, s.explosion_ceiling, 1};
    try {
        probe.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
    return s;
}

json sampling_json(const SamplingSpec& s) {
    const char* kind = s.kind == SamplingSpec::Kind::lattice ? "lattice" : s.kind == SamplingSpec::Kind::halton ? "halton" : "points";
    return {{"kind", kind}, {"points_per_axis", s.points_per_axis}, {"count", s.count}, {"points", s.points}};
}

// ---------------------------------------------------------------------------
// Presets.

json hermite_state(int n, double amplitude = 1.0) { return {{"kind", "hermite"}, {"index", {n}}, {"amplitude", amplitude}}; }
json sine(int k, double amplitude = 1.0) { return {{"kind", "sine_mode"}, {"k", k}, {"amplitude", amplitude}}; }
json dirac0() { return {{"kind", "dirac"}, {"z", {0.0}}}; }

json ito_translation() {
    return {{"model", {{"kind", "ito"}, {"d", 1}, {"N", 64}, {"p", 0.0}, {"b", {dirac0()}}, {"sigma", {{dirac0()}}}}},
            {"manifold", {{"kind", "translation_group"}, {"profile", hermite_state(0)}, {"domain", {{"lower", {-2.0}}, {"upper", {2.0}}}}}},
            {"check", {{"form", "both"}, {"da_mode", "analytic"}}},
            {"simulate", {{"T", 0.5}, {"dt", 1e-3}, {"paths", 64}, {"seed", 1}, {"record_every", 10}, {"x0", {0.0}}}}};
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"ito_translation_d1", "ito_translation_offtangent", "negative_control", "plaplace_p2_eigen",
            "linear_eigen_p2", "plaplace_p4_span", "heat_equation", "zero_coefficients"};
}

json preset(const std::string& name) {
    if (name == "ito_translation_d1") return ito_translation();
    if (name == "ito_translation_offtangent") {
        json p = ito_translation();
        p["model"]["diffusion_override"] = {{{"offset", hermite_state(32)}, {"scale", 0.0}}};
        p["check"] = {{"form", "bracket"}};
        p["simulate"]["run_reduced"] = false;
        return p;
    }
    if (name == "negative_control") {
        return {{"model", {{"kind", "ito"}, {"d", 1}, {"N", 16}, {"p", 0.0}, {"diffusion_override", {{{"offset", hermite_state(8)}, {"scale", 0.0}}}}}},
                {"manifold", {{"kind", "linear_span"}, {"vectors", {hermite_state(0), hermite_state(1)}},
                              {"domain", {{"lower", {-2.0, -2.0}}, {"upper", {2.0, 2.0}}}}}},
                {"check", {{"form", "bracket"}}},
                {"simulate", {{"T", 0.1}, {"dt", 1e-3}, {"paths", 4}, {"seed", 1}, {"record_every", 10}, {"x0", {0.5, 0.0}},
                              {"run_reduced", false}}}};
    }
    if (name == "plaplace_p2_eigen" || name == "linear_eigen_p2") {
        json model = {{"grid_points", 256},
                      {"diffusion", {{{"offset", sine(1, 0.3)}, {"scale", 0.0}}, {{"offset", {{"kind", "zero"}}}, {"scale", 0.5}}}}};
        if (name == "plaplace_p2_eigen") {
            model["kind"] = "plaplace";
            model["p"] = 2.0;
        } else {
            model["kind"] = "linear_eigen";
            model["operator"] = "laplacian";
            model["modes"] = {1, 2};
        }
        return {{"model", model},
                {"manifold", {{"kind", "linear_span"}, {"vectors", {sine(1), sine(2)}}, {"domain", {{"lower", {-2.0, -2.0}}, {"upper", {2.0, 2.0}}}}}},
                {"check", {{"form", "both"}}},
                {"simulate", {{"T", 5e-3}, {"dt", 5e-6}, {"paths", 4}, {"seed", 1}, {"record_every", 50}, {"x0", {1.0, 0.5}}}}};
    }
    if (name == "plaplace_p4_span") {
        return {{"model", {{"kind", "plaplace"}, {"grid_points", 64}, {"p", 4.0}}},
                {"manifold", {{"kind", "linear_span"}, {"vectors", {sine(1)}}, {"domain", {{"lower", {-2.0}}, {"upper", {2.0}}}}}},
                {"check", {{"form", "bracket"}}},
                {"simulate", {{"T", 1e-3}, {"dt", 1e-5}, {"paths", 1}, {"seed", 1}, {"record_every", 10}, {"x0", {0.5}}}}};
    }
    if (name == "heat_equation") {
        return {{"model", {{"kind", "plaplace"}, {"grid_points", 15}, {"p", 2.0}}},
                {"manifold", {{"kind", "linear_span"}, {"vectors", {sine(1)}}, {"domain", {{"lower", {-2.0}}, {"upper", {2.0}}}}}},
                {"check", {{"form", "bracket"}}},
                {"simulate", {{"T", 1.0}, {"dt", 1e-3}, {"paths", 1}, {"seed", 1}, {"record_every", 1}, {"x0", {1.0}}}}};
    }
    if (name == "zero_coefficients") {
        return {{"model", {{"kind", "ito"}, {"d", 1}, {"N", 16}, {"p", 0.0}}},
                {"manifold", {{"kind", "translation_group"}, {"profile", hermite_state(0)}, {"domain", {{"lower", {-2.0}}, {"upper", {2.0}}}}}},
                {"check", {{"form", "bracket"}}},
                {"simulate", {{"T", 0.1}, {"dt", 1e-2}, {"paths", 2}, {"seed", 1}, {"record_every", 1}, {"x0", {0.5}}}}};
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

Config parse_config(const json& input) {
    if (!input.is_object()) throw ConfigError("<root>", "expected a JSON object");
    reject_unknown(input, {"preset", "preset_name", "model", "manifold", "check", "simulate", "threads"}, "<root>");
    json doc = input;
    Config config;
    // Serialised configs carry the preset they came from as a label only.
    if (input.contains("preset_name")) {
        config.preset = text(input, "preset_name", "<root>");
        doc.erase("preset_name");
    }
    if (input.contains("preset")) {
        config.preset = text(input, "preset", "<root>");
        doc = preset(config.preset);
        json patch = input;
        patch.erase("preset");
        doc.merge_patch(patch);
    }
    config.model = normalize_model(require(doc, "model", "<root>"));
    config.manifold = normalize_manifold(require(doc, "manifold", "<root>"), config.model);
    config.check = parse_check(doc.value("check", json()));
    const std::size_t chart_dim = config.manifold.at("domain").at("lower").size();
    config.simulate = parse_simulate(doc.value("simulate", json()), chart_dim);
    const auto threads = integer(doc, "threads", "<root>", 1);
    if (threads < 1) throw ConfigError("threads", "must be at least 1");
    config.threads = static_cast<unsigned>(threads);
    return config;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const Config& c) {
    json out = {{"model", c.model},
                {"manifold", c.manifold},
                {"check",
                 {{"form", c.check.form},
                  {"da_mode", c.check.da_mode},
                  {"threshold", c.check.threshold},
                  {"spill_factor", c.check.spill_factor},
                  {"form_tolerance", c.check.form_tolerance},
                  {"sampling", sampling_json(c.check.sampling)}}},
                {"simulate",
                 {{"T", c.simulate.horizon},
                  {"dt", c.simulate.dt},
                  {"paths", c.simulate.paths},
                  {"seed", c.simulate.seed},
                  {"noise_substeps", c.simulate.noise_substeps},
                  {"coupling", c.simulate.coupling},
                  {"run_reduced", c.simulate.run_reduced},
                  {"record_every", c.simulate.record_every},
                  {"explosion_ceiling", c.simulate.explosion_ceiling},
                  {"x0", c.simulate.x0}}},
                {"threads", c.threads}};
    // The preset name is informational; the expanded blocks above are authoritative.
    if (!c.preset.empty()) out["preset_name"] = c.preset;
    return out;
}

Problem build(const Config& config) {
    const json& m = config.model;
    const Space space = model_space(m);
    const auto kind = m.at("kind").get<std::string>();

    std::shared_ptr<const SpdeModel> model;
    if (kind == "ito") {
        std::vector<PairingFunctional> b;
        for (const auto& f : m.at("b")) b.push_back(make_functional(f, space));
        std::vector<std::vector<PairingFunctional>> sigma;
        for (const auto& row : m.at("sigma")) {
            std::vector<PairingFunctional> r;
            for (const auto& f : row) r.push_back(make_functional(f, space));
            sigma.push_back(std::move(r));
        }
        model = std::make_shared<ItoTypeModel>(space.dim, m.at("p").get<double>(), std::move(b), std::move(sigma));
    } else if (kind == "plaplace") {
        model = std::make_shared<PLaplaceModel>(m.at("p").get<double>(), space.grid_points, make_fields(m.at("diffusion"), space));
    } else {
        const PLaplaceModel laplace(2.0, space.grid_points, {});
        std::vector<LinearEigenModel::Eigenpair> pairs;
        for (const auto& k : m.at("modes")) pairs.push_back({laplace.sine_mode(k.get<int>()), laplace.laplacian_eigenvalue(k.get<int>())});
        model = std::make_shared<LinearEigenModel>([](const State& y) { return plaplace_operator(y, 2.0); }, std::move(pairs),
                                                   make_fields(m.at("diffusion"), space), m.at("tolerance").get<double>(),
                                                   "laplacian");
    }
    if (m.contains("diffusion_override")) model = std::make_shared<ReplacedDiffusionModel>(model, make_fields(m.at("diffusion_override"), space));

    const json& mf = config.manifold;
    ChartBox box{mf.at("domain").at("lower").get<std::vector<double>>(), mf.at("domain").at("upper").get<std::vector<double>>()};
    std::shared_ptr<const Parametrization> chart;
    if (mf.at("kind") == "translation_group") {
        chart = std::make_shared<TranslationChart>(make_state(mf.at("profile"), space), std::move(box));
    } else {
        std::vector<State> vectors;
        for (const auto& v : mf.at("vectors")) vectors.push_back(make_state(v, space));
        chart = std::make_shared<LinearSpanChart>(std::move(vectors), std::move(box));
    }

    Problem p;
    p.model = model;
    p.chart = chart;
    auto& t = p.sweep.tangency;
    t.threshold = config.check.threshold;
    t.spill_factor = config.check.spill_factor;
    t.form_tolerance = config.check.form_tolerance;
    t.da_mode = config.check.da_mode == "analytic" ? DaMode::analytic : DaMode::finite_difference;
    p.sweep.both_forms = config.check.form == "both";
    p.sweep.form = config.check.form == "stratonovich" ? DriftForm::stratonovich : DriftForm::bracket;
    p.sweep.threads = config.threads;
    p.sampling = config.check.sampling;

    const auto& s = config.simulate;
    p.sim = SimConfig{s.horizon, s.dt, s.paths, s.seed, s.noise_substeps, s.coupling, s.record_every, s.explosion_ceiling, config.threads};
    p.compare.tangency = t;
    p.compare.run_reduced = s.run_reduced;
    p.x0 = s.x0;
    if (!chart->domain().contains(p.x0)) throw ConfigError("simulate.x0", "initial chart point outside the manifold domain");
    return p;
}

std::string content_hash(const json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace spdeinv
