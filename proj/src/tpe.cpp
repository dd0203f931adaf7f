#include "emfi/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace emfi {

ParamSpace::ParamSpace(std::array<Interval, kNumPulseDims> dims) : dims_(dims) {
    static const char* names[] = {"x_mm", "y_mm", "z_mm", "voltage_v"};
    for (int d = 0; d < kNumPulseDims; ++d) {
        if (!(dims_[d].lo < dims_[d].hi)) {
            std::ostringstream os;
            os << "parameter space dimension " << names[d] << " must have lower < upper (got ["
               << dims_[d].lo << ", " << dims_[d].hi << "])";
            throw ConfigError(os.str());
        }
    }
}

ParamSpace ParamSpace::from_bounds(const ParamBounds& b) {
    return ParamSpace({Interval{b.x_lo, b.x_hi}, Interval{b.y_lo, b.y_hi}, Interval{b.z_lo, b.z_hi},
                       Interval{b.v_lo, b.v_hi}});
}

bool ParamSpace::contains(const PulseParams& p) const {
    for (int d = 0; d < kNumPulseDims; ++d)
        if (p[d] < dims_[d].lo || p[d] > dims_[d].hi) return false;
    return true;
}

PulseParams uniform_suggest(const ParamSpace& space, Rng& rng) {
    PulseParams p;
    for (int d = 0; d < kNumPulseDims; ++d) p[d] = rng.uniform(space.dim(d).lo, space.dim(d).hi);
    return p;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// log of the truncated-Gaussian kernel density at x for a kernel centered
// at mu with bandwidth h on [lo, hi]
double log_truncated_gaussian(double x, double mu, double h, double lo, double hi) {
    const double z = (x - mu) / h;
    const double mass =
        0.5 * (std::erf((hi - mu) / h * kInvSqrt2) - std::erf((lo - mu) / h * kInvSqrt2));
    constexpr double kLogSqrt2Pi = 0.91893853320467274178;
    return -0.5 * z * z - std::log(h) - kLogSqrt2Pi - std::log(std::max(mass, 1e-300));
}

struct KernelSet {
    std::vector<const Observation*> points;
    std::array<double, kNumPulseDims> bandwidth{};
};

// shared per-dimension bandwidths: Scott's rule over the set, floored at a
// small fraction of the dimension width
void fit_bandwidths(KernelSet& set, const ParamSpace& space) {
    const double m = static_cast<double>(set.points.size());
    const double scott = std::pow(m, -1.0 / (kNumPulseDims + 4.0));
    for (int d = 0; d < kNumPulseDims; ++d) {
        double mean = 0.0;
        for (const auto* p : set.points) mean += p->params[d];
        mean /= m;
        double var = 0.0;
        for (const auto* p : set.points) {
            const double diff = p->params[d] - mean;
            var += diff * diff;
        }
        var /= m;
        const double floor = 0.05 * space.width(d);
        set.bandwidth[d] = std::max(std::sqrt(var) * scott, floor);
    }
}

double log_density(const KernelSet& set, const ParamSpace& space, const PulseParams& x) {
    // log of the mean of the per-point product kernels, via log-sum-exp
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    logs.reserve(set.points.size());
    for (const auto* p : set.points) {
        double lp = 0.0;
        for (int d = 0; d < kNumPulseDims; ++d)
            lp += log_truncated_gaussian(x[d], p->params[d], set.bandwidth[d], space.dim(d).lo,
                                         space.dim(d).hi);
        logs.push_back(lp);
        max_log = std::max(max_log, lp);
    }
    double sum = 0.0;
    for (double lp : logs) sum += std::exp(lp - max_log);
    return max_log + std::log(sum / static_cast<double>(logs.size()));
}

}  // namespace

PulseParams tpe_suggest(const ParamSpace& space, std::span<const Observation> history,
                        const TpeOptions& options, Rng& rng) {
    const size_t n = history.size();
    if (n < static_cast<size_t>(options.n_startup)) return uniform_suggest(space, rng);

    double obj_min = history[0].objective, obj_max = history[0].objective;
    for (const auto& o : history) {
        obj_min = std::min(obj_min, o.objective);
        obj_max = std::max(obj_max, o.objective);
    }
    if (obj_max <= obj_min) return uniform_suggest(space, rng);  // degenerate history

    // stable sort by objective descending; ties broken by insertion order
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return history[a].objective > history[b].objective;
    });

    size_t n_good =
        std::clamp<size_t>(static_cast<size_t>(std::ceil(options.gamma * static_cast<double>(n))),
                           1, n - 1);
    // Ties at the split boundary go to the bad set, so a history dominated
    // by zero-objective trials keeps only the genuinely informative points
    // in the good model. When the whole good set ties, keep every tied entry.
    const double boundary = history[order[n_good - 1]].objective;
    if (n_good < n && history[order[n_good]].objective == boundary) {
        size_t strict = n_good;
        while (strict > 0 && history[order[strict - 1]].objective == boundary) --strict;
        if (strict >= 1) {
            n_good = strict;
        } else {
            size_t tied_end = n_good;
            while (tied_end < n && history[order[tied_end]].objective == boundary) ++tied_end;
            n_good = std::min(tied_end, n - 1);
        }
    }
    KernelSet good, bad;
    for (size_t i = 0; i < n; ++i)
        (i < n_good ? good : bad).points.push_back(&history[order[i]]);
    fit_bandwidths(good, space);
    fit_bandwidths(bad, space);

    // draw candidates from l(x) and keep the best density ratio
    std::vector<PulseParams> candidates(options.n_candidates);
    for (auto& c : candidates) {
        const auto* center = good.points[rng.next_below(good.points.size())];
        for (int d = 0; d < kNumPulseDims; ++d) {
            const double v = center->params[d] + rng.normal() * good.bandwidth[d];
            c[d] = std::clamp(v, space.dim(d).lo, space.dim(d).hi);
        }
    }
    std::vector<double> score(candidates.size());
    const int64_t n_cand = static_cast<int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n_cand; ++i)
        score[i] = log_density(good, space, candidates[i]) - log_density(bad, space, candidates[i]);

    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i)
        if (score[i] > score[best]) best = i;
    return candidates[best];
}

}  // namespace emfi
