#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "emfi/record.hpp"
#include "emfi/rng.hpp"
#include "emfi/types.hpp"
#include "emfi/workload.hpp"

namespace emfi {

// Host-side liveness watchdog: catches every hang, nothing else.
struct WatchdogPolicy {
    double timeout_s = 5.0;
    enum class Recovery { PowerCycleThenReload };
    Recovery recovery = Recovery::PowerCycleThenReload;

    void validate() const {
        if (timeout_s <= 0) throw ConfigError("watchdog timeout must be positive");
    }
};

// Periodic reference-image cross-check against stored golden outputs.
struct ReferenceCheckPolicy {
    int k_references = 1;
    int interval_inferences = 32;
    enum class CompareMode { Top1Label, LogitDistance };
    CompareMode compare_mode = CompareMode::Top1Label;
    double logit_threshold = 5.0;   // LogitDistance only (L-inf)
    double correlation = 0.0;       // inter-reference detection correlation

    void validate() const {
        if (k_references < 1) throw ConfigError("k_references must be >= 1");
        if (interval_inferences < 1) throw ConfigError("interval_inferences must be >= 1");
        if (correlation < 0 || correlation > 1)
            throw ConfigError("correlation must be in [0, 1]");
    }
};

// Redundant inference across independent accelerators: two replicas flag
// disagreement, three or more vote.
struct RedundancyPolicy {
    int n_replicas = 2;
    enum class Rule { DisagreementFlag, MajorityVote };
    Rule rule = Rule::DisagreementFlag;

    void validate() const {
        if (n_replicas < 2) throw ConfigError("redundancy needs at least 2 replicas");
        if (rule == Rule::MajorityVote && n_replicas < 3)
            throw ConfigError("majority voting needs at least 3 replicas");
    }
};

struct ClassCoverage {
    int64_t episodes = 0;
    int64_t detected = 0;
    double mean_latency_inferences = 0.0;
    int64_t max_latency_inferences = 0;

    double detection_rate() const {
        return episodes ? static_cast<double>(detected) / static_cast<double>(episodes) : 0.0;
    }
};

struct CoverageReport {
    std::array<ClassCoverage, 4> per_class{};  // indexed by OutcomeClass
    double false_alarm_rate = 0.0;             // alarms on clean (C0) episodes
    double overhead_per_inference = 0.0;       // extra inferences per workload inference
    double max_latency_s = 0.0;                // watchdog detection bound

    // redundancy only: saturated-C2 inferences whose corrupt output differs
    // from the clean label, and how many of those raised a flag
    int64_t saturated_differing_inferences = 0;
    int64_t saturated_flagged_inferences = 0;

    const ClassCoverage& coverage(OutcomeClass c) const {
        return per_class[static_cast<int>(c)];
    }
};

CoverageReport evaluate_watchdog(const WatchdogPolicy& policy, std::span<const Episode> episodes);

CoverageReport evaluate_reference_check(const ReferenceCheckPolicy& policy,
                                        std::span<const Episode> episodes,
                                        const ProfileTable& profiles, Rng& rng);
CoverageReport evaluate_reference_check_serial(const ReferenceCheckPolicy& policy,
                                               std::span<const Episode> episodes,
                                               const ProfileTable& profiles, Rng& rng);

CoverageReport evaluate_redundancy(const RedundancyPolicy& policy,
                                   std::span<const Episode> episodes,
                                   const ProfileTable& profiles, Rng& rng);
CoverageReport evaluate_redundancy_serial(const RedundancyPolicy& policy,
                                          std::span<const Episode> episodes,
                                          const ProfileTable& profiles, Rng& rng);

}  // namespace emfi
