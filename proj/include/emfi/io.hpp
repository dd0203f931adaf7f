#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emfi/campaign.hpp"
#include "emfi/kv.hpp"
#include "emfi/mitigation.hpp"
#include "emfi/record.hpp"

namespace emfi {

// Shortest round-trip decimal formatting; identical inputs always yield
// identical bytes.
std::string format_double(double v);
std::string format_u64(uint64_t v);

// Atomic file write (temp-then-rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// --- trial log CSV (`emfi-trials v1`) ---

extern const char* const kTrialCsvHeader;

std::string trial_log_to_csv(std::span<const TrialRecord> records, const std::string& manifest_id);
std::vector<TrialRecord> trial_log_from_csv(const std::string& text, const std::string& origin);
std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path);

// --- episode stream CSV (`emfi-episodes v1`) ---

std::string episodes_to_csv(std::span<const Episode> episodes, const std::string& manifest_id);
std::vector<Episode> episodes_from_csv(const std::string& text, const std::string& origin);
std::vector<Episode> read_episodes(const std::filesystem::path& path);

// --- coverage report CSV ---

std::string coverage_report_to_csv(const std::string& strategy, const CoverageReport& report);

// --- rate summary CSV ---

struct GroupedRates {
    std::string model;
    Timing timing = Timing::During;
    Mode mode = Mode::Sync;
    RateSummary rates;
};

std::vector<GroupedRates> group_rates(std::span<const TrialRecord> records);
std::string rates_to_csv(std::span<const GroupedRates> groups);

// --- run manifest ---

struct RunManifest {
    std::string tool_version;
    std::string command;
    uint64_t calibration_hash = 0;
    uint64_t config_hash = 0;
    uint64_t master_seed = 0;
    std::vector<std::string> outputs;

    // stable id derived from the fields above; artifacts reference it
    std::string id() const;
    std::string to_text() const;
};

extern const char* const kToolVersion;

// --- campaign / mitigation config files (`emfi-config v1`) ---

struct MitigationConfig {
    WatchdogPolicy watchdog;
    ReferenceCheckPolicy reference;
    RedundancyPolicy redundancy;
};

struct RunConfig {
    CampaignConfig campaign;
    MitigationConfig mitigation;
    std::vector<std::string> baseline_models;  // cmd_baseline targets
    int histogram_bins = 50;
};

RunConfig parse_run_config(const KeyValueFile& kv);
RunConfig load_run_config(const std::string& path);

}  // namespace emfi
