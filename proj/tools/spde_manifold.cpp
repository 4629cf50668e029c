#include "spdeinv/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Local invariance checks and coupled simulations for finite-dimensional manifolds of SPDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", spdeinv::artifact_version);

    spdeinv::RunRequest request;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    const auto add_run_flags = [&](CLI::App* cmd) {
        auto* cfg = cmd->add_option("--config", config_path, "JSON config file");
        auto* preset = cmd->add_option("--preset", request.preset, "built-in preset name");
        cfg->excludes(preset);
        cmd->add_option("--out", out_dir, "output directory (default: $SPDE_MANIFOLD_OUT or ./spde_manifold_out)");
        cmd->add_option("--seed", seed, "noise seed, overrides the config");
        cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* check = app.add_subcommand("check", "evaluate the tangency conditions over a chart sample");
    add_run_flags(check);
    auto* simulate = app.add_subcommand("simulate", "run the full and reduced simulations on coupled noise");
    add_run_flags(simulate);

    std::string run_dir;
    auto* report = app.add_subcommand("report", "aggregate run manifests into summary.csv");
    report->add_option("dir", run_dir, "directory holding *.manifest.json")->required();

    auto* presets = app.add_subcommand("presets", "list built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 maps --help to success and everything else to a nonzero code; keep 1 for errors.
        const int code = app.exit(e);
        return code == 0 ? 0 : spdeinv::exit_error;
    }

    request.config_path = config_path;
    request.out_dir = out_dir;
    for (auto* cmd : {check, simulate}) {
        if (!cmd->parsed()) continue;
        if (cmd->count("--seed") > 0) request.seed = seed;
        if (cmd->count("--threads") > 0) request.threads = threads;
    }

    if (check->parsed()) return spdeinv::cmd_check(request, std::cout, std::cerr);
    if (simulate->parsed()) return spdeinv::cmd_simulate(request, std::cout, std::cerr);
    if (report->parsed()) return spdeinv::cmd_report(run_dir, std::cout, std::cerr);
    if (presets->parsed()) {
        for (const auto& name : spdeinv::preset_names()) std::cout << name << '\n';
        return spdeinv::exit_ok;
    }
    return spdeinv::exit_error;
}
