#include "emfi/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace emfi {

const std::vector<ProbeGeometry>& builtin_probes() {
    static const std::vector<ProbeGeometry> probes = {
        {"1mm-CCW", 1.0, Orientation::CCW, -1.05},
        {"1mm-CW", 1.0, Orientation::CW, -0.85},
        {"4mm-CCW", 4.0, Orientation::CCW, -1.75},
    };
    return probes;
}

const ProbeGeometry& probe_by_name(const std::string& name) {
    for (const auto& p : builtin_probes())
        if (p.name == name) return p;
    std::ostringstream os;
    os << "unknown probe '" << name << "' (known:";
    for (const auto& p : builtin_probes()) os << " " << p.name;
    os << ")";
    throw ConfigError(os.str());
}

PulseConfig::PulseConfig(double x_mm, double y_mm, double z_mm, double voltage_v,
                         ProbeGeometry probe, double width_ns, double delay_s)
    : x_mm_(x_mm),
      y_mm_(y_mm),
      z_mm_(z_mm),
      voltage_v_(voltage_v),
      width_ns_(width_ns),
      delay_s_(delay_s),
      probe_(std::move(probe)) {
    ParamBounds bounds;
    if (!bounds.contains(x_mm, y_mm, z_mm, voltage_v)) {
        std::ostringstream os;
        os << "pulse out of bounds: (x=" << x_mm << ", y=" << y_mm << ", z=" << z_mm
           << ", V=" << voltage_v << "); campaign box is x [" << bounds.x_lo << "," << bounds.x_hi
           << "] y [" << bounds.y_lo << "," << bounds.y_hi << "] z [" << bounds.z_lo << ","
           << bounds.z_hi << "] V [" << bounds.v_lo << "," << bounds.v_hi << "]";
        throw ConfigError(os.str());
    }
    if (width_ns <= 0) throw ConfigError("pulse width must be positive");
    if (delay_s == 0) throw ConfigError("delay_s must be nonzero (sign selects pulse timing)");
    if (probe_.diameter_mm <= 0) throw ConfigError("probe diameter must be positive");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool scales_match_model(const std::string& pattern, const std::string& model) {
    return pattern == "*" || pattern == model;
}

}  // namespace

const Anchor* FaultSurface::find_anchor(const PulseConfig& pulse, const std::string& model,
                                        Timing timing, Mode mode) const {
    const Anchor* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors) {
        if (a.model != model || a.timing != timing || a.mode != mode) continue;
        if (a.probe != pulse.probe().name) continue;
        const double dx = std::abs(pulse.x_mm() - a.x_mm);
        const double dy = std::abs(pulse.y_mm() - a.y_mm);
        const double dz = std::abs(pulse.z_mm() - a.z_mm);
        const double dv = std::abs(pulse.voltage_v() - a.voltage_v);
        if (dx > kAnchorPositionTolMm || dy > kAnchorPositionTolMm || dz > kAnchorPositionTolMm ||
            dv > kAnchorVoltageTolV)
            continue;
        const double score = dx + dy + dz + dv / kAnchorVoltageTolV;
        if (score < best_score) {
            best_score = score;
            best = &a;
        }
    }
    return best;
}

std::array<double, 4> FaultSurface::kernel_probabilities(const PulseConfig& pulse,
                                                         const std::string& model, Timing timing,
                                                         Mode mode) const {
    const ProbeModifier* pm = nullptr;
    for (const auto& m : probe_modifiers)
        if (m.probe == pulse.probe().name) pm = &m;
    const double v50_shift = pm ? pm->v50_shift : 0.0;

    double t = 0.0, p = 0.0, h = 0.0;
    const double shrink = timing == Timing::Before ? before_sigma_shrink : 1.0;
    for (const auto& k : kernels) {
        const double sigma = k.sigma_mm * shrink;
        const double dx = pulse.x_mm() - k.center_x_mm;
        const double dy = pulse.y_mm() - k.center_y_mm;
        const double lat = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        const double vg = sigmoid((pulse.voltage_v() - (k.voltage_v50 + v50_shift)) / k.voltage_slope);
        const double zg = std::exp(-pulse.z_mm() / k.z_scale_mm);
        const double a = lat * vg * zg;
        t += a * k.w_transient;
        p += a * k.w_persist;
        h += a * k.w_hang;
    }

    const auto& hr = hang_region;
    if (hr.base_prob > 0 && pulse.x_mm() >= hr.x_lo && pulse.x_mm() <= hr.x_hi &&
        pulse.y_mm() >= hr.y_lo && pulse.y_mm() <= hr.y_hi) {
        const double vg = sigmoid((pulse.voltage_v() - (hr.voltage_v50 + v50_shift)) / hr.voltage_slope);
        const double zg = std::exp(-pulse.z_mm() / hr.z_scale_mm);
        h += hr.base_prob * vg * zg;
    }

    if (pm) {
        t *= pm->scales.transient;
        p *= pm->scales.persist;
        h *= pm->scales.hang;
    }
    for (const auto& m : model_modifiers) {
        if (!scales_match_model(m.model, model)) continue;
        t *= m.scales.transient;
        p *= m.scales.persist;
        h *= m.scales.hang;
    }
    for (const auto& m : mode_modifiers) {
        if (m.timing != timing || m.mode != mode) continue;
        if (!scales_match_model(m.model, model)) continue;
        t *= m.scales.transient;
        p *= m.scales.persist;
        h *= m.scales.hang;
    }
    if (pm && pm->has_persist_window) {
        // Above the window, persistent-corruption mass turns into hangs
        // rather than disappearing. Applied after all scalings so the total
        // fault mass is unchanged by the reallocation and no-fault stays
        // monotone in voltage.
        double w = 1.0;
        if (pulse.voltage_v() >= pm->persist_v_hi + pm->persist_ramp_v)
            w = 0.0;
        else if (pulse.voltage_v() > pm->persist_v_hi)
            w = 1.0 - (pulse.voltage_v() - pm->persist_v_hi) / pm->persist_ramp_v;
        h += p * (1.0 - w);
        p *= w;
    }

    double total = t + p + h;
    if (total > 1.0) {
        t /= total;
        p /= total;
        h /= total;
        total = 1.0;
    }
    const double nofault = std::max(0.0, 1.0 - total);
    return {nofault, t, p, h};
}

std::array<double, 4> FaultSurface::class_probabilities(const PulseConfig& pulse,
                                                        const std::string& model, Timing timing,
                                                        Mode mode) const {
    if (const Anchor* a = find_anchor(pulse, model, timing, mode)) return a->probs;
    return kernel_probabilities(pulse, model, timing, mode);
}

const FlipDistribution& FaultSurface::flip_distribution(const std::string& model) const {
    for (const auto& [name, dist] : model_flips)
        if (name == model) return dist;
    return default_flip;
}

PhysicalOutcome FaultSurface::sample_outcome(const PulseConfig& pulse, const std::string& model,
                                             Timing timing, Mode mode, Rng& rng) const {
    const auto probs = class_probabilities(pulse, model, timing, mode);
    const size_t idx = rng.categorical(probs);
    PhysicalOutcome out;
    switch (idx) {
        case 0:
            out.kind = OutcomeKind::NoFault;
            break;
        case 1: {
            out.kind = OutcomeKind::TransientFlip;
            const auto& dist = flip_distribution(model);
            if (dist.kind == FlipDistribution::Kind::Geometric)
                out.flip_count = rng.geometric(dist.mean);
            else
                out.flip_count = static_cast<int>(rng.uniform_int(dist.lo, dist.hi));
            break;
        }
        case 2:
            out.kind = OutcomeKind::PersistentCorruption;
            out.subregime = rng.next_double() < p_saturated() ? Subregime::SaturatedSingleClass
                                                              : Subregime::PartialCollapse;
            break;
        default:
            out.kind = OutcomeKind::Hang;
            break;
    }
    return out;
}

void probability_grid(const FaultSurface& surface, const std::string& model, Timing timing,
                      Mode mode, const ProbeGeometry& probe, double z_mm, double voltage_v,
                      std::span<const double> xs, std::span<const double> ys,
                      std::array<double, 4>* out) {
    const int64_t nx = static_cast<int64_t>(xs.size());
    const int64_t ny = static_cast<int64_t>(ys.size());
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t iy = 0; iy < ny; ++iy) {
        for (int64_t ix = 0; ix < nx; ++ix) {
            PulseConfig pulse(xs[ix], ys[iy], z_mm, voltage_v, probe);
            out[iy * nx + ix] = surface.class_probabilities(pulse, model, timing, mode);
        }
    }
}

void probability_grid_serial(const FaultSurface& surface, const std::string& model, Timing timing,
                             Mode mode, const ProbeGeometry& probe, double z_mm, double voltage_v,
                             std::span<const double> xs, std::span<const double> ys,
                             std::array<double, 4>* out) {
    const int64_t nx = static_cast<int64_t>(xs.size());
    const int64_t ny = static_cast<int64_t>(ys.size());
    for (int64_t iy = 0; iy < ny; ++iy)
        for (int64_t ix = 0; ix < nx; ++ix) {
            PulseConfig pulse(xs[ix], ys[iy], z_mm, voltage_v, probe);
            out[iy * nx + ix] = surface.class_probabilities(pulse, model, timing, mode);
        }
}

OutcomeKind dominant_fault_kind(const std::array<double, 4>& probs) {
    // argmax over the three fault classes; NoFault wins only when no fault
    // mass exists at all
    int best = 1;
    for (int i = 2; i < 4; ++i)
        if (probs[i] > probs[best]) best = i;
    if (probs[best] <= 0.0) return OutcomeKind::NoFault;
    return static_cast<OutcomeKind>(best);
}

}  // namespace emfi
