#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emfi/types.hpp"

namespace emfi {

// One campaign trial, as logged to the trial CSV. A failed device produces
// no accuracy; completed trials always carry top1.
struct TrialRecord {
    int64_t trial_id = 0;
    double timestamp = 0.0;  // simulated seconds since campaign start
    std::string model;
    Timing timing = Timing::During;
    Mode mode = Mode::Sync;
    std::string probe;
    double x_mm = 0.0, y_mm = 0.0, z_mm = 0.0;
    double voltage_v = 0.0;
    double width_ns = 160.0;
    double delay_s = 1.0;
    int n_images = 0;
    std::optional<double> top1;
    std::optional<double> top5;
    std::optional<double> followup_top1;  // persistence probe
    bool device_failed = false;
    bool recovered_by_power_cycle = false;
    OutcomeClass outcome_class = OutcomeClass::C0;
    double elapsed_s = 0.0;
    uint64_t seed = 0;

    bool operator==(const TrialRecord&) const = default;
};

// Labeled fault episode consumed by the mitigation evaluator; produced by
// the campaign engine alongside the trial log.
struct Episode {
    int64_t episode_id = 0;
    OutcomeClass label = OutcomeClass::C0;
    Subregime subregime = Subregime::PartialCollapse;  // C2 only
    std::string model;
    int n_images = 0;
    int flip_count = 0;  // C1 only
    uint64_t seed = 0;

    bool operator==(const Episode&) const = default;
};

}  // namespace emfi
