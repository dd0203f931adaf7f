#include "emfi/campaign.hpp"

#include <cmath>

namespace emfi {

namespace {

// simulated bench timings (seconds)
constexpr double kReloadS = 1.2;
constexpr double kGoldenS = 0.05;
constexpr double kMoveS = 0.8;
constexpr double kArmS = 0.3;
constexpr double kPowerCycleS = 3.0;
constexpr double kInferPerImageS = 0.0125;

constexpr uint64_t kTrialStream = 0x7121;
constexpr uint64_t kJitterStream = 0x7122;

void load_with_golden_retry(const CampaignConfig& config, Bench& bench, TrialContext& ctx) {
    for (int attempt = 0;; ++attempt) {
        bench.device.load_model(config.model);
        ctx.clock_s += kReloadS;
        const bool ok = bench.device.golden_check();
        ctx.clock_s += kGoldenS;
        if (ok) return;
        // trial discarded: power-cycle and retry
        bench.device.power_cycle();
        ctx.clock_s += kPowerCycleS;
        if (attempt + 1 >= config.golden_retries)
            throw DataError("golden check failed " + std::to_string(config.golden_retries) +
                            " times; aborting campaign");
    }
}

}  // namespace

void CampaignConfig::validate() const {
    thresholds.validate();
    if (n_trials < 0) throw ConfigError("n_trials must be >= 0");
    if (n_images <= 0) throw ConfigError("n_images must be positive");
    if (watchdog_timeout_s <= 0) throw ConfigError("watchdog timeout must be positive");
    if (delay_s == 0) throw ConfigError("delay_s must be nonzero (sign selects pulse timing)");
    if (golden_retries < 1) throw ConfigError("golden_retries must be >= 1");
    probe_by_name(probe);
    if (phase == Phase::Spot) {
        spot_pulse();  // bounds-checked at construction
    } else {
        ParamSpace::from_bounds(bounds);
        if (constant_voltage &&
            (*constant_voltage < bounds.v_lo || *constant_voltage > bounds.v_hi))
            throw ConfigError("constant_voltage outside the voltage bounds");
    }
}

double measure_clean_baseline(const CampaignConfig& config, Bench bench) {
    TrialContext scratch;
    load_with_golden_retry(config, bench, scratch);
    return bench.device.infer_workload(config.n_images, config.mode).top1();
}

TrialRecord run_trial(const CampaignConfig& config, const PulseConfig& pulse, Bench bench,
                      TrialContext& ctx) {
    TrialRecord rec;
    rec.trial_id = ctx.trial_id;
    rec.timestamp = ctx.clock_s;
    rec.model = config.model;
    rec.timing = pulse.timing();
    rec.mode = config.mode;
    rec.probe = pulse.probe().name;
    rec.x_mm = pulse.x_mm();
    rec.y_mm = pulse.y_mm();
    rec.z_mm = pulse.z_mm();
    rec.voltage_v = pulse.voltage_v();
    rec.width_ns = pulse.width_ns();
    rec.delay_s = pulse.delay_s();
    rec.n_images = config.n_images;
    rec.seed = ctx.seed;

    load_with_golden_retry(config, bench, ctx);

    // position in stage-encoder coordinates, wait for completion
    bench.stage.move_to(pulse.x_mm(), pulse.y_mm(), pulse.z_mm() + pulse.probe().z_offset_mm);
    ctx.clock_s += kMoveS;

    double delay = pulse.delay_s();
    if (config.mode == Mode::Async && ctx.campaign_rng) {
        // trigger jitter decides which queued request the pulse lands on;
        // outcome statistics are timing-regime-level, so only the clock and
        // the rng stream observe it
        delay += ctx.campaign_rng->uniform(-0.005, 0.005);
    }
    bench.pulser.arm(pulse.voltage_v(), pulse.width_ns(), pulse.delay_s());
    ctx.clock_s += kArmS;
    // The pulser is triggered here for both timings; the signed delay it was
    // armed with places the pulse before or during the workload below, and
    // the device realizes the effect accordingly. Positive delays mean the
    // workload is already running when the pulse lands.
    bench.pulser.fire();
    ctx.clock_s += std::abs(delay);

    try {
        const WorkloadResult result = bench.device.infer_workload(config.n_images, config.mode);
        ctx.clock_s += config.n_images * kInferPerImageS;
        rec.top1 = result.top1();
        rec.top5 = result.top5();
        // persistence probe: one follow-up workload without reload
        const WorkloadResult followup = bench.device.infer_workload(config.n_images, config.mode);
        ctx.clock_s += config.n_images * kInferPerImageS;
        rec.followup_top1 = followup.top1();
    } catch (const LivenessError&) {
        // watchdog fires after the configured timeout and power-cycles
        ctx.clock_s += config.watchdog_timeout_s;
        bench.device.power_cycle();
        ctx.clock_s += kPowerCycleS;
        rec.device_failed = true;
        rec.recovered_by_power_cycle = true;
    }

    rec.outcome_class = classify_trial(rec, ctx.baseline_top1, config.thresholds);
    rec.elapsed_s = ctx.clock_s - rec.timestamp;
    return rec;
}

std::vector<TrialRecord> run_spot(const CampaignConfig& config, Bench bench) {
    config.validate();
    if (config.phase != Phase::Spot) throw ConfigError("run_spot needs a Spot-phase config");
    const PulseConfig pulse = config.spot_pulse();

    Rng campaign_rng(derive_seed(config.master_seed, kJitterStream));
    TrialContext ctx;
    ctx.campaign_rng = &campaign_rng;
    ctx.baseline_top1 = measure_clean_baseline(config, bench);
    ctx.clock_s += kReloadS + kGoldenS + config.n_images * kInferPerImageS;

    std::vector<TrialRecord> records;
    records.reserve(config.n_trials);
    for (int i = 0; i < config.n_trials; ++i) {
        ctx.trial_id = i;
        ctx.seed = derive_seed(config.master_seed, kTrialStream, static_cast<uint64_t>(i));
        try {
            records.push_back(run_trial(config, pulse, bench, ctx));
        } catch (const DataError& e) {
            throw DataError("trial " + std::to_string(i) + ": " + e.what());
        }
    }
    return records;
}

std::vector<TrialRecord> run_exploration(const CampaignConfig& config, Sampler& sampler,
                                         Bench bench) {
    config.validate();
    if (config.phase != Phase::Explore) throw ConfigError("run_exploration needs an Explore config");
    const ParamSpace space = ParamSpace::from_bounds(config.bounds);

    Rng campaign_rng(derive_seed(config.master_seed, kJitterStream));
    Rng sampler_rng(derive_seed(config.master_seed, kTrialStream));
    TrialContext ctx;
    ctx.campaign_rng = &campaign_rng;
    ctx.baseline_top1 = measure_clean_baseline(config, bench);
    ctx.clock_s += kReloadS + kGoldenS + config.n_images * kInferPerImageS;

    ObservationHistory history;
    std::vector<TrialRecord> records;
    records.reserve(config.n_trials);
    const ProbeGeometry probe = probe_by_name(config.probe);

    for (int i = 0; i < config.n_trials; ++i) {
        PulseParams params = sampler.suggest(space, history.view(), sampler_rng);
        if (config.constant_voltage) params[kDimV] = *config.constant_voltage;
        const PulseConfig pulse(params[kDimX], params[kDimY], params[kDimZ], params[kDimV], probe,
                                config.width_ns, config.delay_s);

        ctx.trial_id = i;
        ctx.seed = derive_seed(config.master_seed, kTrialStream, static_cast<uint64_t>(i));
        TrialRecord rec;
        try {
            rec = run_trial(config, pulse, bench, ctx);
        } catch (const DataError& e) {
            throw DataError("trial " + std::to_string(i) + ": " + e.what());
        }

        Observation obs;
        obs.params = params;
        obs.failed = rec.device_failed;
        // objective: absolute top-1 deviation from baseline; uninformative 0
        // for device failures (flagged so analysis can penalize them)
        obs.objective = rec.top1 ? std::abs(*rec.top1 - ctx.baseline_top1) : 0.0;
        history.append(obs);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace emfi
