#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emfi/record.hpp"
#include "emfi/types.hpp"
#include "emfi/workload.hpp"

namespace emfi {

struct ClassificationThresholds {
    double theta_minor = 0.01;
    double theta_major = 0.50;

    void validate() const {
        if (!(0.0 < theta_minor && theta_minor < theta_major && theta_major < 1.0))
            throw ConfigError("thresholds must satisfy 0 < theta_minor < theta_major < 1");
    }
};

// Assigns the four-class outcome: C3 on device failure; otherwise by the
// baseline deviation delta = baseline - top1. A collapse beyond theta_major
// is C2 only when the persistence probe confirms it; a severe but
// transient collapse is C1. Accuracy increases beyond theta_minor are
// informative and classify C1.
OutcomeClass classify_trial(const TrialRecord& record, double baseline_top1,
                            const ClassificationThresholds& thresholds);

// Batch classification over a record span (OpenMP + serial reference).
void classify_records(std::span<const TrialRecord> records, double baseline_top1,
                      const ClassificationThresholds& thresholds, OutcomeClass* out);
void classify_records_serial(std::span<const TrialRecord> records, double baseline_top1,
                             const ClassificationThresholds& thresholds, OutcomeClass* out);

// Campaign-level rates. Counts are exact; r_mis is computed only over
// completed trials and is absent when none completed.
struct RateSummary {
    int64_t n_c0 = 0, n_c1 = 0, n_c2 = 0, n_c3 = 0;
    int64_t n_trial = 0;
    std::optional<double> r_mis;
    double r_fail = 0.0;
    double r_persist = 0.0;
};

RateSummary compute_rates_from_counts(int64_t c0, int64_t c1, int64_t c2, int64_t c3);
RateSummary compute_rates(std::span<const TrialRecord> records);

// Per-trial top-1 histogram over [0, 1] with the bimodality verdict: true
// when the intermediate band (baseline - theta_major, baseline - theta_minor)
// holds fewer than 5% of completed trials while both end modes are occupied.
struct HistogramReport {
    std::vector<int64_t> bins;
    double bin_width = 0.0;
    int64_t completed = 0;
    int64_t intermediate = 0;
    int64_t low_mode = 0;
    int64_t high_mode = 0;
    double intermediate_fraction = 0.0;
    bool bimodal = false;
};

HistogramReport accuracy_histogram(std::span<const TrialRecord> records, int n_bins,
                                   double baseline_top1, const ClassificationThresholds& thresholds);

// Sub-regime verdict from a post-pulse logit trace: saturated when any
// logit reaches the ceiling (within epsilon 0.5) and the trace has a single
// distinct argmax. A trace with neither saturation nor argmax collapse is
// flagged as a suspect input.
struct SubregimeVerdict {
    Subregime subregime = Subregime::PartialCollapse;
    bool suspect_clean_trace = false;
};

SubregimeVerdict detect_subregime(std::span<const LogitVector> trace, double ceiling);

// Lateral outcome map. Cells cover [origin + i*cell, origin + (i+1)*cell).
struct SpatialCell {
    std::array<int64_t, 4> class_counts{};
    int64_t total = 0;
    OutcomeClass dominant = OutcomeClass::C0;
};

struct SpatialMap {
    double x_origin = 0.0, y_origin = 0.0;
    double cell_mm = 1.0;
    int nx = 0, ny = 0;
    std::vector<SpatialCell> cells;  // row-major, [iy * nx + ix]

    const SpatialCell* cell_at(double x, double y) const;
};

SpatialMap spatial_map(std::span<const TrialRecord> records, double cell_mm);

// Per-class count deltas between two equal-length campaigns.
struct RepeatabilityReport {
    std::array<int64_t, 4> counts_a{};
    std::array<int64_t, 4> counts_b{};
    std::array<int64_t, 4> abs_delta{};
    int64_t max_delta = 0;
};

RepeatabilityReport repeatability_compare(std::span<const TrialRecord> run_a,
                                          std::span<const TrialRecord> run_b);
RepeatabilityReport repeatability_compare_counts(const std::array<int64_t, 4>& a,
                                                 const std::array<int64_t, 4>& b);

std::array<int64_t, 4> class_counts(std::span<const TrialRecord> records);

// Reconstructs the exact clean reference the fixed evaluation subset
// yields for this model and workload size.
double expected_clean_top1(const ModelProfile& profile, int n_images);

}  // namespace emfi
