#include "emfi/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace emfi {

namespace {

// stream tags for frozen per-episode / per-image randomness
constexpr uint64_t kSubsetStream = 0x77aa11;
constexpr uint64_t kPredStream = 0x77aa22;
constexpr uint64_t kResidualStream = 0x77aa33;
constexpr uint64_t kPartialImgStream = 0x77aa44;
constexpr uint64_t kPartialSetStream = 0x77aa55;
constexpr uint64_t kSaturatedStream = 0x77aa66;
constexpr uint64_t kGoldenStream = 0x77aa77;
constexpr uint64_t kLogitNoiseStream = 0x77aa88;

uint64_t model_key(const ModelProfile& profile, uint64_t workload_seed, uint64_t stream) {
    return workload_seed ^ hash_str(profile.name) ^ (stream * 0x9e3779b97f4a7c15ULL);
}

void require_alive(const DeviceState& state) {
    if (state.hung()) throw LivenessError("device did not respond");
    if (!state.model_loaded()) throw StateError("no model loaded");
}

// k-th smallest (1-based) of v; assumes k in [1, v.size()]
uint64_t kth_smallest(std::vector<uint64_t> v, int k) {
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[k - 1];
}

}  // namespace

const std::vector<ModelProfile>& builtin_profiles() {
    static const std::vector<ModelProfile> profiles = [] {
        std::vector<ModelProfile> v;
        ModelProfile p;
        p.name = "ResNet-18";
        p.baseline_top1 = 0.7207;
        p.baseline_top5 = 0.9004;
        p.residual_top1_lo = 0.02;
        p.residual_top1_hi = 0.05;
        v.push_back(p);
        p.name = "ResNet-50";
        p.baseline_top1 = 0.7813;
        p.baseline_top5 = 0.9355;
        p.residual_top1_lo = 0.02;
        p.residual_top1_hi = 0.03;
        v.push_back(p);
        p.name = "VGG-11";
        p.baseline_top1 = 0.7090;
        p.baseline_top5 = 0.8965;
        p.residual_top1_lo = 0.01;
        p.residual_top1_hi = 0.04;
        v.push_back(p);
        return v;
    }();
    return profiles;
}

const ModelProfile& ProfileTable::get(const std::string& name) const {
    if (const ModelProfile* p = find(name)) return *p;
    throw ConfigError("unknown model '" + name + "' (known models: " + known_names() + ")");
}

const ModelProfile* ProfileTable::find(const std::string& name) const {
    for (const auto& p : profiles_)
        if (p.name == name) return &p;
    return nullptr;
}

void ProfileTable::upsert(const ModelProfile& p) {
    for (auto& existing : profiles_) {
        if (existing.name == p.name) {
            existing = p;
            return;
        }
    }
    profiles_.push_back(p);
}

std::string ProfileTable::known_names() const {
    std::ostringstream os;
    for (size_t i = 0; i < profiles_.size(); ++i) {
        if (i) os << ", ";
        os << profiles_[i].name;
    }
    return os.str();
}

const std::string& DeviceState::model() const {
    if (!model_) throw StateError("no model loaded");
    return *model_;
}

int LogitVector::argmax() const {
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

double LogitVector::max_value() const { return *std::max_element(values.begin(), values.end()); }

int clean_correct_count(const ModelProfile& profile, int n_images, bool top5) {
    const double p = top5 ? profile.baseline_top5 : profile.baseline_top1;
    int k = static_cast<int>(std::lround(p * n_images));
    return std::clamp(k, 0, n_images);
}

namespace kernels {

FlagCounts flag_images(std::span<const uint64_t> hashes, uint64_t tau1, uint64_t tau5,
                       uint8_t* top1_flags) {
    FlagCounts counts;
    const int64_t n = static_cast<int64_t>(hashes.size());
    int64_t c1 = 0, c5 = 0;
#pragma omp parallel for reduction(+ : c1, c5) schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const uint8_t f1 = hashes[i] <= tau1;
        top1_flags[i] = f1;
        c1 += f1;
        c5 += hashes[i] <= tau5;
    }
    counts.top1 = c1;
    counts.top5 = c5;
    return counts;
}

FlagCounts flag_images_serial(std::span<const uint64_t> hashes, uint64_t tau1, uint64_t tau5,
                              uint8_t* top1_flags) {
    FlagCounts counts;
    for (size_t i = 0; i < hashes.size(); ++i) {
        const uint8_t f1 = hashes[i] <= tau1;
        top1_flags[i] = f1;
        counts.top1 += f1;
        counts.top5 += hashes[i] <= tau5;
    }
    return counts;
}

}  // namespace kernels

WorkloadResult run_workload(DeviceState& state, const ModelProfile& profile, int n_images,
                            uint64_t workload_seed, Rng& rng) {
    require_alive(state);
    if (n_images <= 0) throw ConfigError("n_images must be positive");

    // Fixed evaluation subset: image i's rank among the per-image hashes
    // decides its clean correctness, so the clean run always scores exactly
    // round(baseline * n) / n for a given subset seed.
    const uint64_t subset_key = model_key(profile, workload_seed, kSubsetStream);
    std::vector<uint64_t> hashes(n_images);
    for (int i = 0; i < n_images; ++i) hashes[i] = hash_u64(subset_key, static_cast<uint64_t>(i));

    const int k1 = clean_correct_count(profile, n_images, false);
    const int k5 = clean_correct_count(profile, n_images, true);
    const uint64_t tau1 = k1 == 0 ? 0 : kth_smallest(hashes, k1);
    const uint64_t tau5 = k5 == 0 ? 0 : kth_smallest(hashes, k5);

    WorkloadResult result;
    result.n_total = n_images;
    result.per_image_top1_flags.resize(n_images);
    auto counts = kernels::flag_images(hashes, k1 == 0 ? 0 : tau1, k5 == 0 ? 0 : tau5,
                                       result.per_image_top1_flags.data());
    if (k1 == 0) {
        std::fill(result.per_image_top1_flags.begin(), result.per_image_top1_flags.end(), 0);
        counts.top1 = 0;
    }
    if (k5 == 0) counts.top5 = 0;
    result.n_correct_top1 = static_cast<int>(counts.top1);
    result.n_correct_top5 = static_cast<int>(counts.top5);

    switch (state.corruption()) {
        case DeviceState::Corruption::Clean:
            break;
        case DeviceState::Corruption::Transient: {
            // flip_count correct images answer incorrectly for this call only
            const int flips = std::min(state.remaining_flips(), result.n_correct_top1);
            std::vector<int> correct_indices;
            correct_indices.reserve(result.n_correct_top1);
            for (int i = 0; i < n_images; ++i)
                if (result.per_image_top1_flags[i]) correct_indices.push_back(i);
            for (int f = 0; f < flips; ++f) {
                const size_t pick =
                    f + static_cast<size_t>(rng.next_below(correct_indices.size() - f));
                std::swap(correct_indices[f], correct_indices[pick]);
                result.per_image_top1_flags[correct_indices[f]] = 0;
            }
            result.n_correct_top1 -= flips;
            result.n_correct_top5 -= flips;
            state.clear_transient();
            break;
        }
        case DeviceState::Corruption::Persistent: {
            // accuracy collapses to a residual drawn once per corruption
            // episode and held until reload
            const int lo = static_cast<int>(std::ceil(profile.residual_top1_lo * n_images));
            const int hi = static_cast<int>(std::floor(profile.residual_top1_hi * n_images));
            int count;
            if (lo > hi) {
                count = static_cast<int>(std::lround(
                    0.5 * (profile.residual_top1_lo + profile.residual_top1_hi) * n_images));
            } else {
                const double u = hash_unit(state.episode_seed(), kResidualStream);
                count = lo + static_cast<int>(u * (hi - lo + 1));
                count = std::min(count, hi);
            }
            count = std::clamp(count, 0, n_images);
            // the residual-correct set is the lowest-ranked slice of the
            // clean-correct set
            std::fill(result.per_image_top1_flags.begin(), result.per_image_top1_flags.end(), 0);
            if (count > 0) {
                const uint64_t tau_res = kth_smallest(hashes, count);
                for (int i = 0; i < n_images; ++i)
                    if (hashes[i] <= tau_res) result.per_image_top1_flags[i] = 1;
            }
            result.n_correct_top1 = count;
            result.n_correct_top5 = count;
            break;
        }
    }
    return result;
}

int clean_argmax_class(const ModelProfile& profile, uint64_t workload_seed, int image_index) {
    const uint64_t key = model_key(profile, workload_seed, kPredStream);
    const uint64_t idx = static_cast<uint64_t>(image_index);
    const int truth = static_cast<int>(hash_u64(key, idx * 2) % profile.num_classes);
    const bool correct = hash_unit(key, idx * 2 + 1) < profile.baseline_top1;
    if (correct) return truth;
    const int offset =
        1 + static_cast<int>(hash_u64(key ^ 0x5a5a5a5aULL, idx) % (profile.num_classes - 1));
    return (truth + offset) % profile.num_classes;
}

SaturatedEpisode derive_saturated_episode(uint64_t episode_seed, const ModelProfile& profile) {
    Rng rng(derive_seed(episode_seed, kSaturatedStream));
    SaturatedEpisode ep;
    ep.dominant_class = static_cast<int>(rng.next_below(profile.num_classes));
    const int n_pos = static_cast<int>(rng.uniform_int(profile.pinned_set_lo, profile.pinned_set_hi));
    const int n_neg = static_cast<int>(rng.uniform_int(profile.pinned_set_lo, profile.pinned_set_hi));
    ep.positive_classes.push_back(ep.dominant_class);
    std::vector<uint8_t> used(profile.num_classes, 0);
    used[ep.dominant_class] = 1;
    auto draw_unused = [&] {
        for (;;) {
            int c = static_cast<int>(rng.next_below(profile.num_classes));
            if (!used[c]) {
                used[c] = 1;
                return c;
            }
        }
    };
    for (int i = 1; i < n_pos; ++i) ep.positive_classes.push_back(draw_unused());
    for (int i = 0; i < n_neg; ++i) ep.negative_classes.push_back(draw_unused());
    return ep;
}

namespace {

// partial-collapse biased class subset, frozen per episode
std::vector<int> derive_partial_subset(uint64_t episode_seed, const ModelProfile& profile) {
    const int k = std::min(profile.partial_collapse.subset_size, profile.num_classes);
    Rng rng(derive_seed(episode_seed, kPartialSetStream));
    std::vector<int> classes(profile.num_classes);
    std::iota(classes.begin(), classes.end(), 0);
    for (int i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.next_below(classes.size() - i));
        std::swap(classes[i], classes[j]);
    }
    classes.resize(k);
    return classes;
}

int partial_collapse_argmax(const DeviceState& state, const ModelProfile& profile,
                            uint64_t workload_seed, int image_index) {
    const auto& pc = profile.partial_collapse;
    const uint64_t seed = state.episode_seed();
    const double u = hash_unit(seed ^ kPartialImgStream, static_cast<uint64_t>(image_index));
    if (u < pc.agreement_with_clean)
        return clean_argmax_class(profile, workload_seed, image_index);
    const std::vector<int> subset = derive_partial_subset(seed, profile);
    const int modal = subset.front();
    if (u < pc.agreement_with_clean + pc.top_class_share) return modal;
    const uint64_t pick = hash_u64(seed ^ (kPartialImgStream * 3), static_cast<uint64_t>(image_index));
    return subset[pick % subset.size()];
}

}  // namespace

int corrupted_argmax_class(const DeviceState& state, const ModelProfile& profile,
                           uint64_t workload_seed, int image_index) {
    require_alive(state);
    switch (state.corruption()) {
        case DeviceState::Corruption::Clean:
        case DeviceState::Corruption::Transient:
            return clean_argmax_class(profile, workload_seed, image_index);
        case DeviceState::Corruption::Persistent:
            if (state.subregime() == Subregime::SaturatedSingleClass)
                return derive_saturated_episode(state.episode_seed(), profile).dominant_class;
            return partial_collapse_argmax(state, profile, workload_seed, image_index);
    }
    return 0;
}

LogitVector generate_logits(const DeviceState& state, const ModelProfile& profile,
                            int image_index, uint64_t workload_seed, Rng& rng) {
    require_alive(state);
    (void)rng;

    LogitVector out;
    out.values.resize(profile.num_classes);
    const double lo = profile.nominal_logit_lo;
    const double hi = profile.nominal_logit_hi;
    const double top_band = 5.0;
    const uint64_t noise_key =
        model_key(profile, workload_seed, kLogitNoiseStream) ^ static_cast<uint64_t>(image_index);
    auto background = [&](int c) {
        return lo + (hi - lo - top_band) * hash_unit(noise_key, static_cast<uint64_t>(c));
    };

    switch (state.corruption()) {
        case DeviceState::Corruption::Clean:
        case DeviceState::Corruption::Transient: {
            for (int c = 0; c < profile.num_classes; ++c) out.values[c] = background(c);
            const int top = clean_argmax_class(profile, workload_seed, image_index);
            out.values[top] = hi - top_band + top_band * hash_unit(noise_key, 0xf00d);
            break;
        }
        case DeviceState::Corruption::Persistent: {
            if (state.subregime() == Subregime::SaturatedSingleClass) {
                const SaturatedEpisode ep = derive_saturated_episode(state.episode_seed(), profile);
                for (int c = 0; c < profile.num_classes; ++c) out.values[c] = background(c);
                for (int c : ep.positive_classes)
                    out.values[c] = profile.saturation_ceiling -
                                    (0.5 + 7.5 * hash_unit(state.episode_seed() ^ 0x9051ULL,
                                                           static_cast<uint64_t>(c)));
                for (int c : ep.negative_classes) out.values[c] = -profile.saturation_ceiling;
                out.values[ep.dominant_class] = profile.saturation_ceiling;
            } else {
                for (int c = 0; c < profile.num_classes; ++c) out.values[c] = background(c);
                const int top = partial_collapse_argmax(state, profile, workload_seed, image_index);
                out.values[top] = hi - top_band + top_band * hash_unit(noise_key, 0xf00d);
            }
            break;
        }
    }
    return out;
}

bool golden_check(const DeviceState& state, const ModelProfile& profile, uint64_t workload_seed) {
    if (state.hung()) throw LivenessError("device did not respond");
    if (!state.model_loaded()) return false;

    switch (state.corruption()) {
        case DeviceState::Corruption::Clean:
            return true;
        case DeviceState::Corruption::Transient:
            // flips perturb workload images, not the reference image
            return true;
        case DeviceState::Corruption::Persistent: {
            if (state.subregime() == Subregime::SaturatedSingleClass) {
                const SaturatedEpisode ep = derive_saturated_episode(state.episode_seed(), profile);
                return ep.dominant_class ==
                       clean_argmax_class(profile, workload_seed, kReferenceImageBase);
            }
            return hash_unit(state.episode_seed(), kGoldenStream) <
                   profile.partial_collapse.agreement_with_clean;
        }
    }
    return false;
}

}  // namespace emfi
