#include "emfi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace emfi {

OutcomeClass classify_trial(const TrialRecord& record, double baseline_top1,
                            const ClassificationThresholds& thresholds) {
    thresholds.validate();
    if (baseline_top1 <= 0.0 || baseline_top1 > 1.0)
        throw DataError("baseline_top1 must be in (0, 1]");
    if (record.device_failed) return OutcomeClass::C3;
    if (!record.top1)
        throw DataError("trial " + std::to_string(record.trial_id) +
                        ": completed trial without top1");

    const double delta = baseline_top1 - *record.top1;
    if (std::abs(delta) <= thresholds.theta_minor) return OutcomeClass::C0;
    if (delta < 0.0) return OutcomeClass::C1;  // accuracy increase, informative
    if (delta <= thresholds.theta_major) return OutcomeClass::C1;

    // major collapse: C2 needs the persistence probe to confirm it
    if (!record.followup_top1)
        throw DataError("trial " + std::to_string(record.trial_id) +
                        ": collapse beyond theta_major without a persistence probe");
    const double followup_delta = baseline_top1 - *record.followup_top1;
    return followup_delta > thresholds.theta_major ? OutcomeClass::C2 : OutcomeClass::C1;
}

void classify_records(std::span<const TrialRecord> records, double baseline_top1,
                      const ClassificationThresholds& thresholds, OutcomeClass* out) {
    const int64_t n = static_cast<int64_t>(records.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) out[i] = classify_trial(records[i], baseline_top1, thresholds);
}

void classify_records_serial(std::span<const TrialRecord> records, double baseline_top1,
                             const ClassificationThresholds& thresholds, OutcomeClass* out) {
    for (size_t i = 0; i < records.size(); ++i)
        out[i] = classify_trial(records[i], baseline_top1, thresholds);
}

RateSummary compute_rates_from_counts(int64_t c0, int64_t c1, int64_t c2, int64_t c3) {
    RateSummary s;
    s.n_c0 = c0;
    s.n_c1 = c1;
    s.n_c2 = c2;
    s.n_c3 = c3;
    s.n_trial = c0 + c1 + c2 + c3;
    const int64_t completed = c0 + c1 + c2;
    if (completed > 0)
        s.r_mis = static_cast<double>(c1 + c2) / static_cast<double>(completed);
    if (s.n_trial > 0) {
        s.r_fail = static_cast<double>(c3) / static_cast<double>(s.n_trial);
        s.r_persist = static_cast<double>(c2) / static_cast<double>(s.n_trial);
    }
    return s;
}

std::array<int64_t, 4> class_counts(std::span<const TrialRecord> records) {
    std::array<int64_t, 4> counts{};
    for (const auto& r : records) counts[static_cast<int>(r.outcome_class)]++;
    return counts;
}

RateSummary compute_rates(std::span<const TrialRecord> records) {
    const auto c = class_counts(records);
    return compute_rates_from_counts(c[0], c[1], c[2], c[3]);
}

HistogramReport accuracy_histogram(std::span<const TrialRecord> records, int n_bins,
                                   double baseline_top1,
                                   const ClassificationThresholds& thresholds) {
    thresholds.validate();
    if (n_bins <= 0) throw ConfigError("histogram needs at least one bin");
    HistogramReport report;
    report.bins.assign(n_bins, 0);
    report.bin_width = 1.0 / n_bins;

    const double band_lo = baseline_top1 - thresholds.theta_major;
    const double band_hi = baseline_top1 - thresholds.theta_minor;
    for (const auto& r : records) {
        if (r.device_failed || !r.top1) continue;
        const double a = *r.top1;
        report.completed++;
        int bin = static_cast<int>(a * n_bins);
        bin = std::clamp(bin, 0, n_bins - 1);
        report.bins[bin]++;
        if (a > band_lo && a < band_hi)
            report.intermediate++;
        else if (a <= band_lo)
            report.low_mode++;
        else
            report.high_mode++;
    }
    if (report.completed > 0)
        report.intermediate_fraction =
            static_cast<double>(report.intermediate) / static_cast<double>(report.completed);
    report.bimodal = report.completed > 0 && report.intermediate_fraction < 0.05 &&
                     report.low_mode > 0 && report.high_mode > 0;
    return report;
}

SubregimeVerdict detect_subregime(std::span<const LogitVector> trace, double ceiling) {
    if (trace.empty()) throw DataError("empty logit trace");
    constexpr double kEpsilon = 0.5;

    bool saturated_value = false;
    std::map<int, int64_t> argmax_freq;
    for (const auto& v : trace) {
        if (v.values.empty()) throw DataError("empty logit vector in trace");
        argmax_freq[v.argmax()]++;
        for (double x : v.values)
            if (std::abs(x) >= ceiling - kEpsilon) saturated_value = true;
    }

    SubregimeVerdict verdict;
    if (saturated_value && argmax_freq.size() == 1) {
        verdict.subregime = Subregime::SaturatedSingleClass;
    } else {
        verdict.subregime = Subregime::PartialCollapse;
        // without saturation, a collapse should still concentrate argmaxes
        // on a modal class; a flat spread looks like a clean trace
        int64_t modal = 0;
        for (const auto& [cls, count] : argmax_freq) modal = std::max(modal, count);
        const double modal_share = static_cast<double>(modal) / static_cast<double>(trace.size());
        verdict.suspect_clean_trace = !saturated_value && trace.size() >= 16 && modal_share < 0.04;
    }
    return verdict;
}

const SpatialCell* SpatialMap::cell_at(double x, double y) const {
    const int ix = static_cast<int>(std::floor((x - x_origin) / cell_mm));
    const int iy = static_cast<int>(std::floor((y - y_origin) / cell_mm));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return nullptr;
    return &cells[static_cast<size_t>(iy) * nx + ix];
}

SpatialMap spatial_map(std::span<const TrialRecord> records, double cell_mm) {
    if (cell_mm <= 0) throw ConfigError("cell size must be positive");
    SpatialMap map;
    map.cell_mm = cell_mm;
    if (records.empty()) return map;

    double x_lo = records[0].x_mm, x_hi = records[0].x_mm;
    double y_lo = records[0].y_mm, y_hi = records[0].y_mm;
    for (const auto& r : records) {
        x_lo = std::min(x_lo, r.x_mm);
        x_hi = std::max(x_hi, r.x_mm);
        y_lo = std::min(y_lo, r.y_mm);
        y_hi = std::max(y_hi, r.y_mm);
    }
    map.x_origin = std::floor(x_lo / cell_mm) * cell_mm;
    map.y_origin = std::floor(y_lo / cell_mm) * cell_mm;
    map.nx = std::max(1, static_cast<int>(std::floor((x_hi - map.x_origin) / cell_mm)) + 1);
    map.ny = std::max(1, static_cast<int>(std::floor((y_hi - map.y_origin) / cell_mm)) + 1);
    map.cells.assign(static_cast<size_t>(map.nx) * map.ny, SpatialCell{});

    for (const auto& r : records) {
        const int ix = static_cast<int>(std::floor((r.x_mm - map.x_origin) / cell_mm));
        const int iy = static_cast<int>(std::floor((r.y_mm - map.y_origin) / cell_mm));
        auto& cell = map.cells[static_cast<size_t>(iy) * map.nx + ix];
        cell.class_counts[static_cast<int>(r.outcome_class)]++;
        cell.total++;
    }
    // Dominant class per cell; ties rank C2 > C3 > C1 > C0, matching the
    // rendering order that keeps rare persistent events visible.
    static const OutcomeClass precedence[] = {OutcomeClass::C2, OutcomeClass::C3, OutcomeClass::C1,
                                              OutcomeClass::C0};
    for (auto& cell : map.cells) {
        int64_t best = -1;
        for (OutcomeClass c : precedence) {
            const int64_t count = cell.class_counts[static_cast<int>(c)];
            if (count > best) {
                best = count;
                cell.dominant = c;
            }
        }
    }
    return map;
}

RepeatabilityReport repeatability_compare_counts(const std::array<int64_t, 4>& a,
                                                 const std::array<int64_t, 4>& b) {
    RepeatabilityReport r;
    r.counts_a = a;
    r.counts_b = b;
    for (int i = 0; i < 4; ++i) {
        r.abs_delta[i] = std::abs(a[i] - b[i]);
        r.max_delta = std::max(r.max_delta, r.abs_delta[i]);
    }
    return r;
}

RepeatabilityReport repeatability_compare(std::span<const TrialRecord> run_a,
                                          std::span<const TrialRecord> run_b) {
    if (run_a.size() != run_b.size())
        throw DataError("repeatability comparison needs equal trial counts (" +
                        std::to_string(run_a.size()) + " vs " + std::to_string(run_b.size()) + ")");
    return repeatability_compare_counts(class_counts(run_a), class_counts(run_b));
}

double expected_clean_top1(const ModelProfile& profile, int n_images) {
    return static_cast<double>(clean_correct_count(profile, n_images)) /
           static_cast<double>(n_images);
}

}  // namespace emfi
