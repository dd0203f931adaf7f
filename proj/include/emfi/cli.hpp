#pragma once

#include <optional>
#include <string>
#include <vector>

namespace emfi {

// Options shared by all subcommands; --seed overrides the config file's
// master_seed.
struct CliOptions {
    std::string config_path;
    std::string calibration_path;
    std::optional<uint64_t> seed;
    std::string out_dir = "out";
    std::vector<std::string> inputs;  // positional files (analyze, mitigate)
};

int cmd_baseline(const CliOptions& options);
int cmd_spot(const CliOptions& options);
int cmd_explore(const CliOptions& options);
int cmd_analyze(const CliOptions& options);
int cmd_mitigate(const CliOptions& options);
int cmd_repeat(const CliOptions& options);

// exit codes
constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

}  // namespace emfi
