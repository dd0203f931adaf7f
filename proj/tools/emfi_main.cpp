// Command-line entry point: seeded fault-injection campaigns against the
// simulated bench, plus analysis and mitigation evaluation over their logs.

#include <CLI11.hpp>
#include <iostream>

#include "emfi/cli.hpp"
#include "emfi/types.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic EMFI fault-response characterization toolkit"};
    app.require_subcommand(1);

    emfi::CliOptions options;
    app.add_option("--config", options.config_path, "campaign config file");
    app.add_option("--calibration", options.calibration_path,
                   "fault-surface calibration file (default: built-in)");
    uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed (overrides config)");
    app.add_option("--out", options.out_dir, "output directory")->capture_default_str();

    auto* baseline = app.add_subcommand("baseline", "unperturbed accuracy per model");
    auto* explore = app.add_subcommand("explore", "sampler-driven parameter search");
    auto* spot = app.add_subcommand("spot", "fixed-parameter repeated-trial campaign");
    auto* analyze = app.add_subcommand("analyze", "classify a trial log and emit reports");
    analyze->add_option("log", options.inputs, "trial-log CSV")->required();
    auto* mitigate = app.add_subcommand("mitigate", "evaluate mitigation coverage on episodes");
    mitigate->add_option("episodes", options.inputs, "episode-stream CSV")->required();
    auto* repeat = app.add_subcommand("repeat", "two same-config campaigns, distinct seeds");
    for (auto* sub : {baseline, explore, spot, analyze, mitigate, repeat}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) options.seed = seed_value;

    try {
        if (*baseline) return emfi::cmd_baseline(options);
        if (*explore) return emfi::cmd_explore(options);
        if (*spot) return emfi::cmd_spot(options);
        if (*analyze) return emfi::cmd_analyze(options);
        if (*mitigate) return emfi::cmd_mitigate(options);
        if (*repeat) return emfi::cmd_repeat(options);
    } catch (const emfi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return emfi::kExitConfigError;
    } catch (const emfi::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return emfi::kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
