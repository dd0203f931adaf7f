#pragma once

#include <array>
#include <span>
#include <vector>

#include "emfi/rng.hpp"
#include "emfi/surface.hpp"
#include "emfi/types.hpp"

namespace emfi {

// Search dimensions, in order.
enum PulseDim { kDimX = 0, kDimY = 1, kDimZ = 2, kDimV = 3 };
constexpr int kNumPulseDims = 4;

using PulseParams = std::array<double, kNumPulseDims>;

// Bounded box searched by the samplers. Every interval must be non-degenerate.
class ParamSpace {
public:
    struct Interval {
        double lo = 0.0, hi = 0.0;
    };

    explicit ParamSpace(std::array<Interval, kNumPulseDims> dims);
    static ParamSpace from_bounds(const ParamBounds& b);

    const Interval& dim(int d) const { return dims_[d]; }
    double width(int d) const { return dims_[d].hi - dims_[d].lo; }
    bool contains(const PulseParams& p) const;

private:
    std::array<Interval, kNumPulseDims> dims_;
};

struct Observation {
    PulseParams params{};
    double objective = 0.0;
    bool failed = false;
};

// Append-only per-campaign record of evaluated points.
class ObservationHistory {
public:
    void append(const Observation& obs) { observations_.push_back(obs); }
    std::span<const Observation> view() const { return observations_; }
    size_t size() const { return observations_.size(); }

private:
    std::vector<Observation> observations_;
};

struct TpeOptions {
    double gamma = 0.25;    // fraction of history treated as the good set
    int n_startup = 20;     // uniform draws before density modeling starts
    int n_candidates = 24;  // candidates scored per suggestion
};

// Uniform draw over the box.
PulseParams uniform_suggest(const ParamSpace& space, Rng& rng);

// Tree-structured Parzen Estimator step: splits history at the gamma
// quantile of the objective (higher is better), fits product-Gaussian
// kernel densities l(x) over the good set and g(x) over the bad set with
// shared Scott's-rule bandwidths, draws candidates from l and returns the
// one maximizing l(x)/g(x). Falls back to a uniform draw during startup or
// when the history is degenerate. Suggestions are always inside the box.
PulseParams tpe_suggest(const ParamSpace& space, std::span<const Observation> history,
                        const TpeOptions& options, Rng& rng);

// Abstract trial-selection strategy used by the exploration campaign.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual PulseParams suggest(const ParamSpace& space, std::span<const Observation> history,
                                Rng& rng) = 0;
};

class TpeSampler final : public Sampler {
public:
    explicit TpeSampler(TpeOptions options = {}) : options_(options) {}
    PulseParams suggest(const ParamSpace& space, std::span<const Observation> history,
                        Rng& rng) override {
        return tpe_suggest(space, history, options_, rng);
    }

private:
    TpeOptions options_;
};

class UniformSampler final : public Sampler {
public:
    PulseParams suggest(const ParamSpace& space, std::span<const Observation>, Rng& rng) override {
        return uniform_suggest(space, rng);
    }
};

}  // namespace emfi
