#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emfi/calibration.hpp"
#include "emfi/record.hpp"
#include "emfi/rng.hpp"
#include "emfi/surface.hpp"
#include "emfi/types.hpp"
#include "emfi/workload.hpp"

namespace emfi {

// Hardware abstraction boundary. Real drivers (serial pulser control,
// G-code stage motion, USB power cycling) would implement these; the
// campaign engine only ever talks to the interfaces.

class DeviceInterface {
public:
    virtual ~DeviceInterface() = default;
    virtual void load_model(const std::string& model) = 0;
    // Classifies the reference image and compares with the stored golden
    // output. Throws LivenessError when the device does not respond.
    virtual bool golden_check() = 0;
    virtual WorkloadResult infer_workload(int n_images, Mode mode) = 0;
    virtual void power_cycle() = 0;
};

class StageInterface {
public:
    virtual ~StageInterface() = default;
    // Absolute move in stage-encoder coordinates; returns only after the
    // stage has reached the target (wait-for-completion semantics).
    virtual void move_to(double x_mm, double y_mm, double z_mm) = 0;
};

class PulserInterface {
public:
    virtual ~PulserInterface() = default;
    // delay_s is the programmed pulse-vs-inference offset (sign selects
    // before/during timing).
    virtual void arm(double voltage_v, double width_ns, double delay_s) = 0;
    virtual void fire() = 0;
};

struct Bench {
    DeviceInterface& device;
    StageInterface& stage;
    PulserInterface& pulser;
};

// Deterministic simulated bench: device, stage and pulser backed by a
// calibrated fault surface. All randomness derives from the construction
// seed, so identical seeds give identical campaigns.
class SimBench {
public:
    SimBench(const Calibration& calibration, ProbeGeometry probe, uint64_t seed);
    ~SimBench();

    SimBench(const SimBench&) = delete;
    SimBench& operator=(const SimBench&) = delete;

    DeviceInterface& device();
    StageInterface& stage();
    PulserInterface& pulser();
    Bench bench() { return Bench{device(), stage(), pulser()}; }

    // Ground-truth episode per delivered pulse, for mitigation evaluation.
    const std::vector<Episode>& episodes() const;
    const std::optional<PhysicalOutcome>& last_outcome() const;

    uint64_t workload_seed() const;
    const ProbeGeometry& probe() const;

    // Test hooks: force the next outcome / fail the next golden checks.
    void force_next_outcome(const PhysicalOutcome& outcome);
    void fail_next_golden_checks(int count);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace emfi
