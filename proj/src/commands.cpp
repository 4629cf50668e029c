#include "spdeinv/commands.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <vector>

namespace spdeinv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string pretty(const json& doc) { return doc.dump(2) + "\n"; }

/// Wall-clock stamps live in a side log so the manifest and data files stay byte-stable.
void write_log(const fs::path& path, const std::string& command, std::chrono::system_clock::time_point start) {
    const auto end = std::chrono::system_clock::now();
    const auto seconds = std::chrono::duration<double>(end - start).count();
    write_file(path, fmt::format("command={}\nstarted={:%Y-%m-%dT%H:%M:%S}Z\nfinished={:%Y-%m-%dT%H:%M:%S}Z\nelapsed_s={:.3f}\n", command,
                                 std::chrono::floor<std::chrono::seconds>(start), std::chrono::floor<std::chrono::seconds>(end),
                                 seconds));
}

json manifest_base(const std::string& command, const Config& config, const json& canonical) {
    return {{"command", command},
            {"version", artifact_version},
            {"config", canonical},
            {"config_hash", content_hash(canonical)},
            {"model_hash", content_hash(config.model)},
            {"manifold_hash", content_hash(config.manifold)},
            {"seed", config.simulate.seed}};
}

fs::path prepare_out_dir(const RunRequest& request) {
    fs::path dir = request.out_dir.empty() ? default_output_root() : request.out_dir;
    fs::create_directories(dir);
    return dir;
}

/// Shared error funnel: every failure becomes a one-line diagnostic and exit code 1.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return exit_error;
}

}  // namespace

fs::path default_output_root() {
    if (const char* env = std::getenv("SPDE_MANIFOLD_OUT"); env != nullptr && *env != '\0') return fs::path(env);
    return fs::path("spde_manifold_out");
}

Config resolve_config(const RunRequest& request) {
    Config config;
    if (!request.config_path.empty()) {
        config = load_config(request.config_path);
    } else if (!request.preset.empty()) {
        config = parse_config(json{{"preset", request.preset}});
    } else {
        throw ConfigError("--config", "no config file or preset given");
    }
    if (request.seed) config.simulate.seed = *request.seed;
    if (request.threads) {
        if (*request.threads < 1) throw ConfigError("--threads", "must be at least 1");
        config.threads = *request.threads;
    }
    return config;
}

int cmd_check(const RunRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = std::chrono::system_clock::now();
        const Config config = resolve_config(request);
        const Problem problem = build(config);
        const TangencyReport report = sweep(*problem.model, *problem.chart, problem.sampling, problem.sweep);

        const json canonical = to_json(config);
        const std::string stem = "check-" + content_hash(canonical);
        const fs::path dir = prepare_out_dir(request);
        write_file(dir / (stem + ".report.json"), pretty(report.to_json()));
        write_file(dir / (stem + ".report.csv"), report.to_csv());

        json manifest = manifest_base("check", config, canonical);
        manifest["outputs"] = {stem + ".report.json", stem + ".report.csv", stem + ".log"};
        manifest["verdict"] = to_string(report.verdict);
        manifest["summary"] = {{"max_residual", report.max_residual},
                               {"max_diffusion_residual", report.max_diffusion_residual},
                               {"max_drift_residual", report.max_drift_residual},
                               {"max_spill", report.max_spill},
                               {"max_form_disagreement", report.max_form_disagreement},
                               {"failed_points", report.failed_points},
                               {"points", report.points.size()}};
        write_file(dir / (stem + ".manifest.json"), pretty(manifest));
        write_log(dir / (stem + ".log"), "check", start);

        out << fmt::format("verdict: {} (max residual {:.3e}, max spill {:.3e}, {} points)\n", to_string(report.verdict),
                           report.max_residual, report.max_spill, report.points.size());
        for (const auto& p : report.points)
            if (!p.ok) err << "point failed: " << p.error << '\n';
        out << "wrote " << (dir / (stem + ".manifest.json")).string() << '\n';
        switch (report.verdict) {
        case Verdict::tangent:
            return exit_ok;
        case Verdict::not_tangent:
            return exit_not_tangent;
        default:
            return exit_error;
        }
    });
}

int cmd_simulate(const RunRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = std::chrono::system_clock::now();
        const Config config = resolve_config(request);
        Problem problem = build(config);
        const TangencyReport report = sweep(*problem.model, *problem.chart, problem.sampling, problem.sweep);
        // The reduced SDE only means something on a tangent manifold.
        const bool reduced = config.simulate.run_reduced && report.verdict == Verdict::tangent;
        problem.compare.run_reduced = reduced;
        const CoupledResult result = coupled_compare(*problem.model, *problem.chart, problem.x0, problem.sim, problem.compare);

        const json canonical = to_json(config);
        const std::string stem = fmt::format("simulate-{}-{}", config.simulate.seed, content_hash(canonical));
        const fs::path dir = prepare_out_dir(request);
        write_file(dir / (stem + ".csv"), trajectories_csv(result, problem.model->h_regularity()));

        const auto& s = result.summary;
        json manifest = manifest_base("simulate", config, canonical);
        manifest["outputs"] = {stem + ".csv", stem + ".log"};
        manifest["verdict"] = to_string(report.verdict);
        manifest["reduced_run"] = reduced;
        manifest["summary"] = {{"max_residual", report.max_residual},
                               {"max_spill", report.max_spill},
                               {"max_distance", s.max_distance},
                               {"mean_distance", s.mean_distance},
                               {"max_coupled_error", s.max_coupled_error},
                               {"mean_coupled_error", s.mean_coupled_error},
                               {"exploded_paths", s.exploded_paths},
                               {"exited_paths", s.exited_paths},
                               {"unconverged_distances", s.unconverged_distances},
                               {"paths", result.paths.size()}};
        write_file(dir / (stem + ".manifest.json"), pretty(manifest));
        write_log(dir / (stem + ".log"), "simulate", start);

        out << fmt::format("verdict: {}; {} paths, max distance {:.3e}", to_string(report.verdict), result.paths.size(),
                           s.max_distance);
        if (reduced) out << fmt::format(", max coupled error {:.3e}", s.max_coupled_error);
        out << '\n';
        if (s.exploded_paths > 0) err << s.exploded_paths << " path(s) exploded\n";
        out << "wrote " << (dir / (stem + ".manifest.json")).string() << '\n';
        return exit_ok;
    });
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!fs::is_directory(run_dir)) {
            err << "error: '" << run_dir.string() << "' is not a directory\n";
            return exit_error;
        }
        std::vector<fs::path> manifests;
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            const auto name = entry.path().filename().string();
            if (entry.is_regular_file() && name.size() > 14 && name.ends_with(".manifest.json")) manifests.push_back(entry.path());
        }
        if (manifests.empty()) {
            err << "error: no run manifests in '" << run_dir.string() << "'\n";
            return exit_error;
        }
        std::sort(manifests.begin(), manifests.end());

        const auto field = [](const json& obj, const char* key) -> std::string {
            if (!obj.contains(key)) return "";
            const auto& v = obj.at(key);
            if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
            if (v.is_string()) return v.get<std::string>();
            return v.dump();
        };

        std::string csv =
            "manifest,command,preset,model_kind,N,grid_points,config_hash,seed,verdict,max_residual,max_spill,max_distance,"
            "mean_distance,max_coupled_error,exploded_paths,exited_paths\n";
        for (const auto& path : manifests) {
            std::ifstream in(path);
            json m;
            try {
                m = json::parse(in);
            } catch (const json::parse_error& e) {
                err << "skipping " << path.filename().string() << ": " << e.what() << '\n';
                continue;
            }
            const json config = m.value("config", json::object());
            const json model = config.value("model", json::object());
            const json summary = m.value("summary", json::object());
            csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", path.filename().string(), field(m, "command"),
                               field(config, "preset_name"), field(model, "kind"), field(model, "N"),
                               field(model, "grid_points"), field(m, "config_hash"), field(m, "seed"), field(m, "verdict"),
                               field(summary, "max_residual"), field(summary, "max_spill"), field(summary, "max_distance"),
                               field(summary, "mean_distance"), field(summary, "max_coupled_error"),
                               field(summary, "exploded_paths"), field(summary, "exited_paths"));
        }
        write_file(run_dir / "summary.csv", csv);
        out << "wrote " << (run_dir / "summary.csv").string() << " (" << manifests.size() << " runs)\n";
        return exit_ok;
    });
}

}  // namespace spdeinv
