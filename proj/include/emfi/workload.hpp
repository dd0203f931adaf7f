#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emfi/rng.hpp"
#include "emfi/types.hpp"

namespace emfi {

// Partial-collapse output statistics: the corrupted classifier agrees with
// the clean prediction on ~agreement of inputs, concentrates ~top_class_share
// of predictions on one modal class, and spreads the rest over a biased
// class subset sized so a 512-image sweep sees ~distinct_argmax_target
// distinct predictions.
struct PartialCollapseParams {
    double distinct_argmax_target = 350.0;
    double top_class_share = 0.08;
    double agreement_with_clean = 0.23;
    int subset_size = 550;
};

struct ModelProfile {
    std::string name;
    double baseline_top1 = 0.0;
    double baseline_top5 = 0.0;
    int num_classes = 1000;
    double residual_top1_lo = 0.0;  // post-collapse accuracy band
    double residual_top1_hi = 0.0;
    PartialCollapseParams partial_collapse;
    double nominal_logit_lo = -10.0;
    double nominal_logit_hi = 30.0;
    double saturation_ceiling = 1023.5;
    int pinned_set_lo = 20;  // saturated episodes pin this many classes per sign
    int pinned_set_hi = 60;
};

// ResNet-18, ResNet-50, VGG-11 measured baselines.
const std::vector<ModelProfile>& builtin_profiles();

class ProfileTable {
public:
    ProfileTable() : profiles_(builtin_profiles()) {}

    const ModelProfile& get(const std::string& name) const;
    const ModelProfile* find(const std::string& name) const;
    void upsert(const ModelProfile& p);
    const std::vector<ModelProfile>& all() const { return profiles_; }
    std::string known_names() const;

private:
    std::vector<ModelProfile> profiles_;
};

// Loaded-model corruption state. Persistent corruption survives across
// inference calls and is cleared only by model reload; transient corruption
// clears once the perturbed inference completes; a hung device rejects all
// calls until power-cycled.
class DeviceState {
public:
    enum class Corruption { Clean, Transient, Persistent };

    bool model_loaded() const { return model_.has_value(); }
    const std::string& model() const;
    bool hung() const { return hung_; }
    Corruption corruption() const { return corruption_; }
    int remaining_flips() const { return remaining_flips_; }
    Subregime subregime() const { return subregime_; }
    uint64_t episode_seed() const { return episode_seed_; }

    void load_model(const std::string& name) {
        model_ = name;
        corruption_ = Corruption::Clean;
    }
    void unload() { model_.reset(); corruption_ = Corruption::Clean; }

    void inject_transient(int flips) {
        corruption_ = Corruption::Transient;
        remaining_flips_ = flips;
    }
    void inject_persistent(Subregime s, uint64_t episode_seed) {
        corruption_ = Corruption::Persistent;
        subregime_ = s;
        episode_seed_ = episode_seed;
    }
    void hang() { hung_ = true; }
    void power_cycle() {
        hung_ = false;
        model_.reset();
        corruption_ = Corruption::Clean;
    }
    void clear_transient() {
        if (corruption_ == Corruption::Transient) corruption_ = Corruption::Clean;
    }

private:
    std::optional<std::string> model_;
    Corruption corruption_ = Corruption::Clean;
    int remaining_flips_ = 0;
    Subregime subregime_ = Subregime::PartialCollapse;
    uint64_t episode_seed_ = 0;
    bool hung_ = false;
};

struct WorkloadResult {
    int n_total = 0;
    int n_correct_top1 = 0;
    int n_correct_top5 = 0;
    std::vector<uint8_t> per_image_top1_flags;

    double top1() const { return n_total ? static_cast<double>(n_correct_top1) / n_total : 0.0; }
    double top5() const { return n_total ? static_cast<double>(n_correct_top5) / n_total : 0.0; }
};

struct LogitVector {
    std::vector<double> values;  // one score per class

    int argmax() const;
    double max_value() const;
};

namespace kernels {

// Per-image correctness flags against the two rank thresholds, plus flag
// counts. The OpenMP variant and the serial reference must agree bit-exactly.
struct FlagCounts {
    int64_t top1 = 0;
    int64_t top5 = 0;
};
FlagCounts flag_images(std::span<const uint64_t> hashes, uint64_t tau1, uint64_t tau5,
                       uint8_t* top1_flags);
FlagCounts flag_images_serial(std::span<const uint64_t> hashes, uint64_t tau1, uint64_t tau5,
                              uint8_t* top1_flags);

}  // namespace kernels

// Frozen saturated-episode parameters: positive/negative pinned class sets
// and the dominant class that wins the argmax on every input.
struct SaturatedEpisode {
    int dominant_class = 0;
    std::vector<int> positive_classes;
    std::vector<int> negative_classes;
};

SaturatedEpisode derive_saturated_episode(uint64_t episode_seed, const ModelProfile& profile);

// Runs the n_images classification workload against whatever corruption the
// device currently carries. workload_seed pins the evaluation image subset:
// per-image clean correctness is a deterministic function of
// (workload_seed, model, image index), so paired clean/perturbed
// comparisons are exact.
WorkloadResult run_workload(DeviceState& state, const ModelProfile& profile, int n_images,
                            uint64_t workload_seed, Rng& rng);

// Output-layer logit vector for one image under the current corruption.
LogitVector generate_logits(const DeviceState& state, const ModelProfile& profile,
                            int image_index, uint64_t workload_seed, Rng& rng);

// Classifies the fixed reference image and compares against the stored
// golden label. True on a clean loaded model; persistent corruption fails
// it with the sub-regime's characteristic probability.
bool golden_check(const DeviceState& state, const ModelProfile& profile, uint64_t workload_seed);

// Clean top-1 prediction for an image (label space [0, num_classes)).
int clean_argmax_class(const ModelProfile& profile, uint64_t workload_seed, int image_index);

// Top-1 prediction under the device's current corruption, without
// materializing the full logit vector. Matches generate_logits' argmax.
int corrupted_argmax_class(const DeviceState& state, const ModelProfile& profile,
                           uint64_t workload_seed, int image_index);

// The reserved image index used for golden/reference checks; additional
// references use kReferenceImageBase + r.
constexpr int kReferenceImageBase = 0x7fff0000;

// Exact clean top-1 the fixed subset yields: round(baseline * n) / n.
int clean_correct_count(const ModelProfile& profile, int n_images, bool top5 = false);

}  // namespace emfi
