#include "emfi/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "emfi/analysis.hpp"
#include "emfi/calibration.hpp"
#include "emfi/campaign.hpp"
#include "emfi/device.hpp"
#include "emfi/io.hpp"
#include "emfi/svg.hpp"

namespace emfi {

namespace {

namespace fs = std::filesystem;

struct LoadedSetup {
    Calibration calibration;
    RunConfig config;
    uint64_t config_hash = 0;
    std::string config_text;
};

LoadedSetup load_setup(const CliOptions& options) {
    LoadedSetup s;
    s.calibration = options.calibration_path.empty() ? default_calibration()
                                                     : load_calibration(options.calibration_path);
    if (!options.config_path.empty()) {
        const KeyValueFile kv = KeyValueFile::parse_file(options.config_path);
        s.config = parse_run_config(kv);
        s.config_hash = hash_str(kv.text());
        s.config_text = kv.text();
    }
    if (options.seed) s.config.campaign.master_seed = *options.seed;
    return s;
}

// reproducibility: the exact config the run saw, stored with its outputs
void emit_config_snapshot(const fs::path& out_dir, RunManifest& manifest,
                          const LoadedSetup& setup) {
    if (setup.config_text.empty()) return;
    write_file_atomic(out_dir / "config-snapshot.emfi", setup.config_text);
    manifest.outputs.push_back("config-snapshot.emfi");
}

RunManifest make_manifest(const LoadedSetup& setup, const std::string& command) {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.command = command;
    m.calibration_hash = setup.calibration.text_hash;
    m.config_hash = setup.config_hash;
    m.master_seed = setup.config.campaign.master_seed;
    return m;
}

// every emitted artifact carries the id of the manifest that produced it;
// trial/episode logs embed it via their serializers (the schema line must
// come first there)
void emit(const fs::path& out_dir, RunManifest& manifest, const std::string& name,
          const std::string& content) {
    std::string body = content;
    if (content.rfind("# ", 0) != 0 && content.rfind("<", 0) != 0 && name.ends_with(".csv"))
        body = "# manifest " + manifest.id() + "\n" + content;
    else if (name.ends_with(".svg"))
        body = "<!-- manifest " + manifest.id() + " -->\n" + content;
    write_file_atomic(out_dir / name, body);
    manifest.outputs.push_back(name);
}

void finish_manifest(const fs::path& out_dir, RunManifest& manifest, const LoadedSetup& setup) {
    emit_config_snapshot(out_dir, manifest, setup);
    write_file_atomic(out_dir / "manifest.txt", manifest.to_text());
}

std::string group_suffix(const GroupedRates& g) {
    std::ostringstream os;
    os << g.model << "_" << to_string(g.timing) << "_" << to_string(g.mode);
    return os.str();
}

// spatial map grid as CSV so plots are reproducible externally
std::string spatial_grid_csv(const SpatialMap& map) {
    std::ostringstream os;
    os << "x_mm,y_mm,n_c0,n_c1,n_c2,n_c3,dominant\n";
    for (int iy = 0; iy < map.ny; ++iy) {
        for (int ix = 0; ix < map.nx; ++ix) {
            const auto& cell = map.cells[static_cast<size_t>(iy) * map.nx + ix];
            if (cell.total == 0) continue;
            os << format_double(map.x_origin + ix * map.cell_mm) << ','
               << format_double(map.y_origin + iy * map.cell_mm) << ',' << cell.class_counts[0]
               << ',' << cell.class_counts[1] << ',' << cell.class_counts[2] << ','
               << cell.class_counts[3] << ',' << to_string(cell.dominant) << "\n";
        }
    }
    return os.str();
}

std::string histogram_csv(const HistogramReport& report) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (size_t i = 0; i < report.bins.size(); ++i) {
        if (report.bins[i] == 0) continue;
        os << format_double(i * report.bin_width) << ','
           << format_double((i + 1) * report.bin_width) << ',' << report.bins[i] << "\n";
    }
    return os.str();
}

std::vector<TrialRecord> run_campaign(const LoadedSetup& setup, SimBench& bench,
                                      std::vector<Episode>* episodes_out) {
    const CampaignConfig& config = setup.config.campaign;
    std::vector<TrialRecord> records;
    if (config.phase == Phase::Spot) {
        records = run_spot(config, bench.bench());
    } else {
        if (config.sampler == SamplerKind::Tpe) {
            TpeSampler sampler(config.tpe);
            records = run_exploration(config, sampler, bench.bench());
        } else {
            UniformSampler sampler;
            records = run_exploration(config, sampler, bench.bench());
        }
    }
    if (episodes_out) *episodes_out = bench.episodes();
    return records;
}

int run_campaign_command(const CliOptions& options, const std::string& command) {
    LoadedSetup setup = load_setup(options);
    if (command == "explore" && setup.config.campaign.phase != Phase::Explore)
        setup.config.campaign.phase = Phase::Explore;
    if (command == "spot" && setup.config.campaign.phase != Phase::Spot)
        setup.config.campaign.phase = Phase::Spot;
    setup.config.campaign.validate();

    SimBench bench(setup.calibration, probe_by_name(setup.config.campaign.probe),
                   setup.config.campaign.master_seed);
    std::vector<Episode> episodes;
    const std::vector<TrialRecord> records = run_campaign(setup, bench, &episodes);

    RunManifest manifest = make_manifest(setup, command);
    const fs::path out_dir(options.out_dir);
    emit(out_dir, manifest, "trials.csv", trial_log_to_csv(records, manifest.id()));
    emit(out_dir, manifest, "episodes.csv", episodes_to_csv(episodes, manifest.id()));
    finish_manifest(out_dir, manifest, setup);

    const auto counts = class_counts(records);
    std::cout << command << ": " << records.size() << " trials (C0 " << counts[0] << ", C1 "
              << counts[1] << ", C2 " << counts[2] << ", C3 " << counts[3] << ") -> "
              << (out_dir / "trials.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int cmd_baseline(const CliOptions& options) {
    LoadedSetup setup = load_setup(options);
    std::vector<std::string> models = setup.config.baseline_models;
    if (models.empty())
        for (const auto& p : setup.calibration.profiles.all()) models.push_back(p.name);

    const int n_images = setup.config.campaign.n_images;
    std::ostringstream csv;
    csv << "model,n_images,top1,top5\n";
    for (const auto& name : models) {
        setup.calibration.profiles.get(name);  // reject unknown models early
        CampaignConfig config = setup.config.campaign;
        config.model = name;
        SimBench bench(setup.calibration, probe_by_name(config.probe), config.master_seed);
        bench.device().load_model(name);
        if (!bench.device().golden_check()) throw DataError("golden check failed for " + name);
        const WorkloadResult r = bench.device().infer_workload(n_images, config.mode);
        csv << name << ',' << n_images << ',' << format_double(r.top1()) << ','
            << format_double(r.top5()) << "\n";
    }

    RunManifest manifest = make_manifest(setup, "baseline");
    const fs::path out_dir(options.out_dir);
    emit(out_dir, manifest, "baseline.csv", csv.str());
    finish_manifest(out_dir, manifest, setup);
    std::cout << "baseline: " << models.size() << " models -> "
              << (out_dir / "baseline.csv").string() << "\n";
    return kExitOk;
}

int cmd_spot(const CliOptions& options) { return run_campaign_command(options, "spot"); }
int cmd_explore(const CliOptions& options) { return run_campaign_command(options, "explore"); }

int cmd_analyze(const CliOptions& options) {
    if (options.inputs.empty()) throw ConfigError("analyze needs a trial-log CSV argument");
    LoadedSetup setup = load_setup(options);
    std::vector<TrialRecord> records = read_trial_log(options.inputs.front());

    RunManifest manifest = make_manifest(setup, "analyze");
    const fs::path out_dir(options.out_dir);

    if (records.empty()) {
        std::cerr << "analyze: empty trial log, writing empty report\n";
        emit(out_dir, manifest, "rates.csv", rates_to_csv({}));
        finish_manifest(out_dir, manifest, setup);
        return kExitOk;
    }

    // re-classify from the raw fields; the log's classes are not trusted
    const ClassificationThresholds thresholds = setup.config.campaign.thresholds;
    std::set<int> quantization_warned;
    for (auto& r : records) {
        const ModelProfile& profile = setup.calibration.profiles.get(r.model);
        r.outcome_class = classify_trial(r, expected_clean_top1(profile, r.n_images), thresholds);
        // theta_minor is an absolute accuracy threshold; below the one-image
        // quantum a single flip is already classified C1
        if (1.0 / r.n_images > thresholds.theta_minor &&
            quantization_warned.insert(r.n_images).second) {
            std::cerr << "analyze: warning: workload size " << r.n_images
                      << " quantizes accuracy in steps of " << format_double(1.0 / r.n_images)
                      << " > theta_minor " << format_double(thresholds.theta_minor)
                      << "; C0/C1 boundary is resolution-limited\n";
        }
    }

    const std::vector<GroupedRates> groups = group_rates(records);
    emit(out_dir, manifest, "rates.csv", rates_to_csv(groups));

    const int histogram_bins = setup.config.histogram_bins;
    for (const auto& g : groups) {
        std::vector<TrialRecord> subset;
        for (const auto& r : records)
            if (r.model == g.model && r.timing == g.timing && r.mode == g.mode)
                subset.push_back(r);
        const ModelProfile& profile = setup.calibration.profiles.get(g.model);
        const double baseline = expected_clean_top1(profile, subset.front().n_images);
        const HistogramReport hist = accuracy_histogram(subset, histogram_bins, baseline, thresholds);
        const std::string suffix = group_suffix(g);
        emit(out_dir, manifest, "histogram_" + suffix + ".csv", histogram_csv(hist));
        emit(out_dir, manifest, "histogram_" + suffix + ".svg",
             histogram_svg(hist, baseline, thresholds.theta_major, "top-1 distribution, " + suffix));
    }

    const SpatialMap map = spatial_map(records, 1.0);
    emit(out_dir, manifest, "spatial_map.csv", spatial_grid_csv(map));
    emit(out_dir, manifest, "spatial_map.svg",
         spatial_scatter_svg(records, "trial outcomes by position"));
    emit(out_dir, manifest, "rate_plane.svg",
         rate_plane_svg(groups, "persistent-fault rate vs device-failure rate"));
    finish_manifest(out_dir, manifest, setup);

    std::cout << "analyze: " << records.size() << " trials, " << groups.size() << " groups -> "
              << (out_dir / "rates.csv").string() << "\n";
    return kExitOk;
}

int cmd_mitigate(const CliOptions& options) {
    if (options.inputs.empty()) throw ConfigError("mitigate needs an episode-stream CSV argument");
    LoadedSetup setup = load_setup(options);
    const std::vector<Episode> episodes = read_episodes(options.inputs.front());
    const MitigationConfig& m = setup.config.mitigation;

    Rng rng(derive_seed(setup.config.campaign.master_seed, 0x3117));
    const CoverageReport watchdog = evaluate_watchdog(m.watchdog, episodes);
    const CoverageReport reference =
        evaluate_reference_check(m.reference, episodes, setup.calibration.profiles, rng);
    const CoverageReport redundancy =
        evaluate_redundancy(m.redundancy, episodes, setup.calibration.profiles, rng);

    std::ostringstream csv;
    csv << coverage_report_to_csv("watchdog", watchdog);
    std::string ref_rows = coverage_report_to_csv("reference-check", reference);
    csv << ref_rows.substr(ref_rows.find('\n') + 1);
    std::string red_rows = coverage_report_to_csv("redundancy", redundancy);
    csv << red_rows.substr(red_rows.find('\n') + 1);

    RunManifest manifest = make_manifest(setup, "mitigate");
    const fs::path out_dir(options.out_dir);
    emit(out_dir, manifest, "coverage.csv", csv.str());
    finish_manifest(out_dir, manifest, setup);

    std::cout << "mitigate: " << episodes.size() << " episodes -> "
              << (out_dir / "coverage.csv").string() << "\n";
    return kExitOk;
}

int cmd_repeat(const CliOptions& options) {
    LoadedSetup setup = load_setup(options);
    CampaignConfig config = setup.config.campaign;
    config.phase = Phase::Spot;
    config.validate();

    const uint64_t seed_a = config.master_seed;
    const uint64_t seed_b = config.master_seed + 1;

    CampaignConfig config_a = config;
    config_a.master_seed = seed_a;
    SimBench bench_a(setup.calibration, probe_by_name(config.probe), seed_a);
    const auto run_a = run_spot(config_a, bench_a.bench());

    CampaignConfig config_b = config;
    config_b.master_seed = seed_b;
    SimBench bench_b(setup.calibration, probe_by_name(config.probe), seed_b);
    const auto run_b = run_spot(config_b, bench_b.bench());

    const RepeatabilityReport rep = repeatability_compare(run_a, run_b);
    std::ostringstream csv;
    csv << "class,count_a,count_b,abs_delta\n";
    for (int c = 0; c < 4; ++c)
        csv << "C" << c << ',' << rep.counts_a[c] << ',' << rep.counts_b[c] << ','
            << rep.abs_delta[c] << "\n";
    csv << "max,,," << rep.max_delta << "\n";

    RunManifest manifest = make_manifest(setup, "repeat");
    const fs::path out_dir(options.out_dir);
    emit(out_dir, manifest, "trials_a.csv", trial_log_to_csv(run_a, manifest.id()));
    emit(out_dir, manifest, "trials_b.csv", trial_log_to_csv(run_b, manifest.id()));
    emit(out_dir, manifest, "repeat.csv", csv.str());
    finish_manifest(out_dir, manifest, setup);

    std::cout << "repeat: max per-class delta " << rep.max_delta << " -> "
              << (out_dir / "repeat.csv").string() << "\n";
    return kExitOk;
}

}  // namespace emfi
