#include "emfi/device.hpp"

#include <cmath>

namespace emfi {

namespace {

constexpr uint64_t kWorkloadStream = 0x10ad;
constexpr uint64_t kDeviceStream = 0xdef1;

struct PendingPulse {
    PulseConfig pulse;
    Timing timing;
};

}  // namespace

struct SimBench::Impl {
    const Calibration& calibration;
    ProbeGeometry probe;
    uint64_t seed;
    uint64_t workload_seed;

    // stage / pulser state
    double stage_x = 0.0, stage_y = 0.0, stage_z = 0.0;
    bool armed = false;
    double armed_voltage = 0.0, armed_width = 0.0, armed_delay = 0.0;
    std::optional<PendingPulse> pending;

    // device state
    DeviceState state;
    uint64_t load_counter = 0;
    std::unique_ptr<Rng> stream;  // reseeded per model load

    std::vector<Episode> episodes;
    std::optional<PhysicalOutcome> last_outcome;
    std::optional<PhysicalOutcome> forced_outcome;
    int golden_failures_left = 0;

    class Device;
    class Stage;
    class Pulser;
    std::unique_ptr<Device> device;
    std::unique_ptr<Stage> stage;
    std::unique_ptr<Pulser> pulser;

    Impl(const Calibration& cal, ProbeGeometry pr, uint64_t s)
        : calibration(cal),
          probe(std::move(pr)),
          seed(s),
          workload_seed(derive_seed(s, kWorkloadStream)),
          stream(std::make_unique<Rng>(derive_seed(s, kDeviceStream, 0))) {}

    const ModelProfile& profile() const { return calibration.profiles.get(state.model()); }

    // Pulse effects materialize lazily at the next device interaction, once
    // the workload mode is known.
    void materialize(Mode mode, int n_images) {
        if (!pending) return;
        const PendingPulse p = *pending;
        pending.reset();
        if (!state.model_loaded()) return;  // pulse into an unprogrammed device

        PhysicalOutcome outcome;
        if (forced_outcome) {
            outcome = *forced_outcome;
            forced_outcome.reset();
        } else {
            outcome = calibration.surface.sample_outcome(p.pulse, state.model(), p.timing, mode,
                                                         *stream);
        }
        last_outcome = outcome;

        Episode ep;
        ep.episode_id = static_cast<int64_t>(episodes.size());
        ep.model = state.model();
        ep.n_images = n_images;
        ep.seed = stream->next_u64();
        switch (outcome.kind) {
            case OutcomeKind::NoFault:
                ep.label = OutcomeClass::C0;
                break;
            case OutcomeKind::TransientFlip:
                ep.label = OutcomeClass::C1;
                ep.flip_count = outcome.flip_count;
                state.inject_transient(outcome.flip_count);
                break;
            case OutcomeKind::PersistentCorruption:
                ep.label = OutcomeClass::C2;
                ep.subregime = outcome.subregime;
                state.inject_persistent(outcome.subregime, ep.seed);
                break;
            case OutcomeKind::Hang:
                ep.label = OutcomeClass::C3;
                state.hang();
                break;
        }
        episodes.push_back(std::move(ep));
    }
};

class SimBench::Impl::Device final : public DeviceInterface {
public:
    explicit Device(Impl& impl) : impl_(impl) {}

    void load_model(const std::string& model) override {
        if (impl_.state.hung()) throw LivenessError("device did not respond to model load");
        impl_.calibration.profiles.get(model);  // reject unknown models
        impl_.state.load_model(model);
        impl_.load_counter++;
        impl_.stream = std::make_unique<Rng>(derive_seed(impl_.seed, kDeviceStream, impl_.load_counter));
    }

    bool golden_check() override {
        impl_.materialize(Mode::Sync, 1);
        if (impl_.state.hung()) throw LivenessError("device did not respond");
        if (impl_.golden_failures_left > 0) {
            impl_.golden_failures_left--;
            return false;
        }
        if (!impl_.state.model_loaded()) return false;
        return emfi::golden_check(impl_.state, impl_.profile(), impl_.workload_seed);
    }

    WorkloadResult infer_workload(int n_images, Mode mode) override {
        impl_.materialize(mode, n_images);
        if (!impl_.state.model_loaded()) throw StateError("no model loaded");
        return run_workload(impl_.state, impl_.profile(), n_images, impl_.workload_seed,
                            *impl_.stream);
    }

    void power_cycle() override {
        impl_.state.power_cycle();
        impl_.pending.reset();
    }

private:
    Impl& impl_;
};

class SimBench::Impl::Stage final : public StageInterface {
public:
    explicit Stage(Impl& impl) : impl_(impl) {}

    void move_to(double x_mm, double y_mm, double z_mm) override {
        impl_.stage_x = x_mm;
        impl_.stage_y = y_mm;
        impl_.stage_z = z_mm;
    }

private:
    Impl& impl_;
};

class SimBench::Impl::Pulser final : public PulserInterface {
public:
    explicit Pulser(Impl& impl) : impl_(impl) {}

    void arm(double voltage_v, double width_ns, double delay_s) override {
        if (delay_s == 0) throw ConfigError("pulser delay must be nonzero");
        impl_.armed = true;
        impl_.armed_voltage = voltage_v;
        impl_.armed_width = width_ns;
        impl_.armed_delay = delay_s;
    }

    void fire() override {
        if (!impl_.armed) throw StateError("pulser fired without arming");
        impl_.armed = false;
        // corrected stand-off: stage encoder z minus the probe offset
        const double z = impl_.stage_z - impl_.probe.z_offset_mm;
        PulseConfig pulse(impl_.stage_x, impl_.stage_y, z, impl_.armed_voltage, impl_.probe,
                          impl_.armed_width, impl_.armed_delay);
        impl_.pending = PendingPulse{pulse, pulse.timing()};
    }

private:
    Impl& impl_;
};

SimBench::SimBench(const Calibration& calibration, ProbeGeometry probe, uint64_t seed)
    : impl_(std::make_unique<Impl>(calibration, std::move(probe), seed)) {
    impl_->device = std::make_unique<Impl::Device>(*impl_);
    impl_->stage = std::make_unique<Impl::Stage>(*impl_);
    impl_->pulser = std::make_unique<Impl::Pulser>(*impl_);
}

SimBench::~SimBench() = default;

DeviceInterface& SimBench::device() { return *impl_->device; }
StageInterface& SimBench::stage() { return *impl_->stage; }
PulserInterface& SimBench::pulser() { return *impl_->pulser; }

const std::vector<Episode>& SimBench::episodes() const { return impl_->episodes; }
const std::optional<PhysicalOutcome>& SimBench::last_outcome() const { return impl_->last_outcome; }
uint64_t SimBench::workload_seed() const { return impl_->workload_seed; }
const ProbeGeometry& SimBench::probe() const { return impl_->probe; }

void SimBench::force_next_outcome(const PhysicalOutcome& outcome) {
    impl_->forced_outcome = outcome;
}

void SimBench::fail_next_golden_checks(int count) { impl_->golden_failures_left = count; }

}  // namespace emfi
