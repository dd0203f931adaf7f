#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emfi/rng.hpp"
#include "emfi/types.hpp"

namespace emfi {

// Near-field probe with its calibrated stage-encoder offset. All z values
// used by PulseConfig are corrected probe-tip-to-package distances; the
// encoder coordinate is z_mm + z_offset_mm.
struct ProbeGeometry {
    std::string name;
    double diameter_mm = 1.0;
    Orientation orientation = Orientation::CCW;
    double z_offset_mm = 0.0;
};

// The three bench probes.
const std::vector<ProbeGeometry>& builtin_probes();
const ProbeGeometry& probe_by_name(const std::string& name);

// Campaign parameter box. Pulses outside this box are rejected at
// construction.
struct ParamBounds {
    double x_lo = 113.0, x_hi = 127.0;
    double y_lo = 148.0, y_hi = 160.0;
    double z_lo = 0.0, z_hi = 2.0;
    double v_lo = 150.0, v_hi = 500.0;

    bool contains(double x, double y, double z, double v) const {
        return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi && z >= z_lo && z <= z_hi &&
               v >= v_lo && v <= v_hi;
    }
};

// One pulse's full parameterization. delay_s is signed: positive fires the
// pulse delay_s seconds after inference start, negative fires |delay_s|
// seconds before it.
class PulseConfig {
public:
    PulseConfig(double x_mm, double y_mm, double z_mm, double voltage_v, ProbeGeometry probe,
                double width_ns = 160.0, double delay_s = 1.0);

    double x_mm() const { return x_mm_; }
    double y_mm() const { return y_mm_; }
    double z_mm() const { return z_mm_; }
    double voltage_v() const { return voltage_v_; }
    double width_ns() const { return width_ns_; }
    double delay_s() const { return delay_s_; }
    const ProbeGeometry& probe() const { return probe_; }

    Timing timing() const { return delay_s_ > 0 ? Timing::During : Timing::Before; }

private:
    double x_mm_, y_mm_, z_mm_, voltage_v_, width_ns_, delay_s_;
    ProbeGeometry probe_;
};

// Smooth lateral Gaussian x voltage sigmoid x exponential stand-off decay,
// peaking at one package hotspot. Peak class weights split the activated
// fault mass over {TransientFlip, PersistentCorruption, Hang}.
struct HotspotKernel {
    std::string name;
    double center_x_mm = 0.0;
    double center_y_mm = 0.0;
    double sigma_mm = 1.5;
    double voltage_v50 = 350.0;
    double voltage_slope = 25.0;
    double z_scale_mm = 0.35;
    double w_transient = 0.0;
    double w_persist = 0.0;
    double w_hang = 0.0;
};

// Central package band that preferentially produces hangs. Its voltage
// gate is looser than the hotspot kernels', so hang events extend further
// into the parameter space.
struct HangRegion {
    double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
    double base_prob = 0.0;
    double voltage_v50 = 250.0;
    double voltage_slope = 40.0;
    double z_scale_mm = 0.40;
};

struct ClassScales {
    double transient = 1.0;
    double persist = 1.0;
    double hang = 1.0;
};

// Per-probe adjustment. v50_shift moves the voltage gates (a large probe
// couples more energy, so faults start at lower voltage). When the persist
// window is set, persistent-corruption mass above the window is reallocated
// to hang, preserving the total fault mass.
struct ProbeModifier {
    std::string probe;
    ClassScales scales;
    double v50_shift = 0.0;
    bool has_persist_window = false;
    double persist_v_hi = 0.0;
    double persist_ramp_v = 50.0;
};

struct ModelModifier {
    std::string model;  // "*" matches any
    ClassScales scales;
};

struct ModeModifier {
    Timing timing = Timing::During;
    Mode mode = Mode::Sync;
    std::string model;  // "*" matches any
    ClassScales scales;
};

// How many images a TransientFlip perturbs.
struct FlipDistribution {
    enum class Kind { Geometric, UniformCount };
    Kind kind = Kind::Geometric;
    double mean = 2.0;  // Geometric
    int lo = 1, hi = 1; // UniformCount, inclusive
};

// Characterized parameter point with its measured outcome distribution.
// Queries matching an anchor (position within 0.05 mm per axis, voltage
// within 1 V, same model/timing/mode/probe) return the anchor's vector
// exactly, overriding kernel interpolation.
struct Anchor {
    std::string model;
    Timing timing = Timing::During;
    Mode mode = Mode::Sync;
    std::string probe;
    double x_mm = 0.0, y_mm = 0.0, z_mm = 0.0, voltage_v = 0.0;
    std::array<double, 4> probs{};  // NoFault, TransientFlip, PersistentCorruption, Hang
};

constexpr double kAnchorPositionTolMm = 0.05;
constexpr double kAnchorVoltageTolV = 1.0;

// Generative model of the device fault response. Immutable after load;
// safe to share across concurrent readers. Random streams are per-caller.
class FaultSurface {
public:
    std::array<double, 4> class_probabilities(const PulseConfig& pulse, const std::string& model,
                                              Timing timing, Mode mode) const;

    PhysicalOutcome sample_outcome(const PulseConfig& pulse, const std::string& model,
                                   Timing timing, Mode mode, Rng& rng) const;

    const Anchor* find_anchor(const PulseConfig& pulse, const std::string& model, Timing timing,
                              Mode mode) const;

    const FlipDistribution& flip_distribution(const std::string& model) const;

    // Probability that a persistent corruption saturates (vs. partially
    // collapses), stored as exact event counts.
    double p_saturated() const {
        return static_cast<double>(saturated_count) /
               static_cast<double>(saturated_count + partial_count);
    }

    std::vector<HotspotKernel> kernels;
    HangRegion hang_region;
    double before_sigma_shrink = 0.4;
    std::vector<ProbeModifier> probe_modifiers;
    std::vector<ModelModifier> model_modifiers;
    std::vector<ModeModifier> mode_modifiers;
    std::vector<Anchor> anchors;
    int saturated_count = 12;
    int partial_count = 10;
    FlipDistribution default_flip;
    std::vector<std::pair<std::string, FlipDistribution>> model_flips;
    ParamBounds bounds;

private:
    std::array<double, 4> kernel_probabilities(const PulseConfig& pulse, const std::string& model,
                                               Timing timing, Mode mode) const;
};

// Fault-class argmax (ignores NoFault); used for hotspot dominance maps.
OutcomeKind dominant_fault_kind(const std::array<double, 4>& probs);

// Evaluates class probabilities over a lateral grid at fixed (z, V). Cells
// are laid out row-major as out[iy * xs.size() + ix].
void probability_grid(const FaultSurface& surface, const std::string& model, Timing timing,
                      Mode mode, const ProbeGeometry& probe, double z_mm, double voltage_v,
                      std::span<const double> xs, std::span<const double> ys,
                      std::array<double, 4>* out);
void probability_grid_serial(const FaultSurface& surface, const std::string& model, Timing timing,
                             Mode mode, const ProbeGeometry& probe, double z_mm, double voltage_v,
                             std::span<const double> xs, std::span<const double> ys,
                             std::array<double, 4>* out);

}  // namespace emfi
