#include <doctest.h>

#include <vector>

#include "emfi/analysis.hpp"
#include "emfi/calibration.hpp"
#include "emfi/mitigation.hpp"
#include "emfi/workload.hpp"

// The OpenMP kernels must agree with their serial references bit-for-bit;
// results cannot depend on thread count or scheduling.

using namespace emfi;

TEST_CASE("image flagging: parallel equals serial") {
    Rng rng(1);
    for (int n : {1, 7, 512, 4096, 100003}) {
        std::vector<uint64_t> hashes(n);
        for (auto& h : hashes) h = rng.next_u64();
        const uint64_t tau1 = rng.next_u64();
        const uint64_t tau5 = tau1 + (UINT64_MAX - tau1) / 2;
        std::vector<uint8_t> flags_s(n), flags_p(n);
        const auto cs = kernels::flag_images_serial(hashes, tau1, tau5, flags_s.data());
        const auto cp = kernels::flag_images(hashes, tau1, tau5, flags_p.data());
        CHECK(cs.top1 == cp.top1);
        CHECK(cs.top5 == cp.top5);
        CHECK(flags_s == flags_p);
    }
}

TEST_CASE("surface grid evaluation: parallel equals serial") {
    const FaultSurface& surf = default_calibration().surface;
    std::vector<double> xs, ys;
    for (double x = 113.0; x <= 127.0; x += 0.25) xs.push_back(x);
    for (double y = 148.0; y <= 160.0; y += 0.25) ys.push_back(y);
    std::vector<std::array<double, 4>> grid_s(xs.size() * ys.size());
    std::vector<std::array<double, 4>> grid_p(xs.size() * ys.size());
    const ProbeGeometry& probe = probe_by_name("1mm-CCW");
    probability_grid_serial(surf, "VGG-11", Timing::During, Mode::Sync, probe, 0.25, 348.0, xs, ys,
                            grid_s.data());
    probability_grid(surf, "VGG-11", Timing::During, Mode::Sync, probe, 0.25, 348.0, xs, ys,
                     grid_p.data());
    CHECK(grid_s == grid_p);
}

TEST_CASE("record classification: parallel equals serial") {
    Rng rng(2);
    std::vector<TrialRecord> records;
    for (int i = 0; i < 40000; ++i) {
        TrialRecord r;
        r.trial_id = i;
        r.n_images = 512;
        const double u = rng.next_double();
        if (u < 0.15) {
            r.device_failed = true;
        } else {
            r.top1 = u < 0.5 ? rng.uniform(0.0, 0.05) : rng.uniform(0.7, 0.8);
            r.followup_top1 = *r.top1;
        }
        records.push_back(r);
    }
    std::vector<OutcomeClass> out_s(records.size()), out_p(records.size());
    const ClassificationThresholds thresholds;
    classify_records_serial(records, 400.0 / 512.0, thresholds, out_s.data());
    classify_records(records, 400.0 / 512.0, thresholds, out_p.data());
    CHECK(out_s == out_p);
}

TEST_CASE("mitigation evaluators: parallel equals serial") {
    const ProfileTable& profiles = default_calibration().profiles;
    std::vector<Episode> episodes;
    Rng rng(3);
    for (int i = 0; i < 3000; ++i) {
        Episode e;
        e.episode_id = i;
        e.model = i % 2 ? "ResNet-50" : "VGG-11";
        e.n_images = 128;
        e.seed = rng.next_u64();
        const double u = rng.next_double();
        if (u < 0.3) {
            e.label = OutcomeClass::C0;
        } else if (u < 0.5) {
            e.label = OutcomeClass::C1;
            e.flip_count = 1 + static_cast<int>(rng.next_below(8));
        } else if (u < 0.85) {
            e.label = OutcomeClass::C2;
            e.subregime = u < 0.65 ? Subregime::PartialCollapse : Subregime::SaturatedSingleClass;
        } else {
            e.label = OutcomeClass::C3;
        }
        episodes.push_back(e);
    }

    auto reports_equal = [](const CoverageReport& a, const CoverageReport& b) {
        for (int c = 0; c < 4; ++c) {
            if (a.per_class[c].episodes != b.per_class[c].episodes) return false;
            if (a.per_class[c].detected != b.per_class[c].detected) return false;
            if (a.per_class[c].mean_latency_inferences != b.per_class[c].mean_latency_inferences)
                return false;
            if (a.per_class[c].max_latency_inferences != b.per_class[c].max_latency_inferences)
                return false;
        }
        return a.false_alarm_rate == b.false_alarm_rate &&
               a.saturated_differing_inferences == b.saturated_differing_inferences &&
               a.saturated_flagged_inferences == b.saturated_flagged_inferences;
    };

    ReferenceCheckPolicy reference;
    reference.k_references = 2;
    Rng ra(77), rb(77);
    CHECK(reports_equal(evaluate_reference_check(reference, episodes, profiles, ra),
                        evaluate_reference_check_serial(reference, episodes, profiles, rb)));

    RedundancyPolicy redundancy;
    Rng rc(78), rd(78);
    CHECK(reports_equal(evaluate_redundancy(redundancy, episodes, profiles, rc),
                        evaluate_redundancy_serial(redundancy, episodes, profiles, rd)));
}
