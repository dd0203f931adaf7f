#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emfi/analysis.hpp"
#include "emfi/device.hpp"
#include "emfi/record.hpp"
#include "emfi/surface.hpp"
#include "emfi/tpe.hpp"
#include "emfi/types.hpp"

namespace emfi {

enum class Phase { Explore, Spot };
enum class SamplerKind { Tpe, Uniform };

struct CampaignConfig {
    Phase phase = Phase::Spot;
    std::string model = "ResNet-50";
    Mode mode = Mode::Sync;
    std::string probe = "1mm-CCW";
    int n_trials = 256;
    int n_images = 512;
    double watchdog_timeout_s = 5.0;
    double delay_s = 1.0;  // signed; sign selects before/during timing
    double width_ns = 160.0;

    // Spot phase: the one fixed pulse point.
    double x_mm = 123.4, y_mm = 155.1, z_mm = 0.25;
    double voltage_v = 348.0;

    // Explore phase: searched box, selection strategy, optional pinned
    // voltage for randomized surface scans.
    ParamBounds bounds;
    SamplerKind sampler = SamplerKind::Tpe;
    TpeOptions tpe;
    std::optional<double> constant_voltage;

    uint64_t master_seed = 42;
    ClassificationThresholds thresholds;
    int golden_retries = 3;

    Timing timing() const { return delay_s > 0 ? Timing::During : Timing::Before; }
    PulseConfig spot_pulse() const {
        return PulseConfig(x_mm, y_mm, z_mm, voltage_v, probe_by_name(probe), width_ns, delay_s);
    }
    void validate() const;
};

// Per-trial bookkeeping threaded through run_trial.
struct TrialContext {
    int64_t trial_id = 0;
    uint64_t seed = 0;       // logged with the record
    double clock_s = 0.0;    // simulated campaign clock, advanced by the trial
    double baseline_top1 = 0.0;  // measured clean reference for classification
    Rng* campaign_rng = nullptr; // trigger-jitter draws (Async mode)
};

// Executes one trial: load, golden check (discard + power-cycle + retry on
// failure), position, arm, fire at the configured delay, collect the
// workload result or take the watchdog path, run the persistence probe,
// classify, and leave the device ready for the next trial's reload.
TrialRecord run_trial(const CampaignConfig& config, const PulseConfig& pulse, Bench bench,
                      TrialContext& ctx);

// Fixed-parameter repeated-trial campaign; the model is reloaded between
// trials. Deterministic given master_seed.
std::vector<TrialRecord> run_spot(const CampaignConfig& config, Bench bench);

// Sampler-driven parameter search. The objective reported to the sampler is
// the absolute top-1 deviation from the clean baseline; device-failure
// trials report 0 and are flagged.
std::vector<TrialRecord> run_exploration(const CampaignConfig& config, Sampler& sampler,
                                         Bench bench);

// Clean reference accuracy for the campaign's model and workload size,
// measured on the freshly loaded device.
double measure_clean_baseline(const CampaignConfig& config, Bench bench);

}  // namespace emfi
