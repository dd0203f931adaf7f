#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "emfi/analysis.hpp"
#include "emfi/calibration.hpp"
#include "emfi/campaign.hpp"
#include "emfi/cli.hpp"
#include "emfi/device.hpp"
#include "emfi/io.hpp"
#include "emfi/svg.hpp"

using namespace emfi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "emfi-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<TrialRecord> small_campaign(uint64_t seed = 42, int n_trials = 48) {
    CampaignConfig config;
    config.model = "ResNet-50";
    config.n_trials = n_trials;
    config.n_images = 512;
    config.master_seed = seed;
    SimBench bench(default_calibration(), probe_by_name("1mm-CCW"), seed);
    return run_spot(config, bench.bench());
}

}  // namespace

TEST_CASE("doubles format with shortest round-trip precision") {
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(0.720703125) == "0.720703125");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(348.0) == "348");
}

TEST_CASE("trial logs round-trip exactly through CSV") {
    const auto records = small_campaign();
    const std::string csv = trial_log_to_csv(records, "deadbeef00000000");
    const auto parsed = trial_log_from_csv(csv, "test");
    REQUIRE(parsed.size() == records.size());
    CHECK(parsed == records);

    // re-classification from the raw fields reproduces the logged classes
    const auto& profile = default_calibration().profiles.get("ResNet-50");
    const ClassificationThresholds thresholds;
    for (const auto& r : parsed)
        CHECK(classify_trial(r, expected_clean_top1(profile, r.n_images), thresholds) ==
              r.outcome_class);

    // and a second serialization is byte-identical
    CHECK(trial_log_to_csv(parsed, "deadbeef00000000") == csv);
}

TEST_CASE("trial log schema violations are refused with row numbers") {
    const auto records = small_campaign(7, 4);
    std::string csv = trial_log_to_csv(records, "m");

    SUBCASE("schema version mismatch") {
        std::string other = csv;
        other.replace(other.find("emfi-trials v1"), 14, "emfi-trials v9");
        CHECK_THROWS_AS(trial_log_from_csv(other, "test"), DataError);
    }
    SUBCASE("missing schema line") {
        CHECK_THROWS_AS(trial_log_from_csv(csv.substr(csv.find('\n') + 1), "test"), DataError);
    }
    SUBCASE("malformed row reports its number") {
        std::string other = csv + "not,a,valid,row\n";
        try {
            trial_log_from_csv(other, "test");
            FAIL("expected error");
        } catch (const DataError& e) {
            const std::string what = e.what();
            CHECK(what.find("row") != std::string::npos);
            CHECK(what.find("8") != std::string::npos);  // 3 header lines + 4 records + 1
        }
    }
    SUBCASE("bad number reports the row") {
        std::string other = csv;
        other.replace(other.find("ResNet-50"), 9, "ResNet-50x");  // model is free-form, fine
        CHECK_NOTHROW(trial_log_from_csv(other, "test"));
        std::string worse = csv;
        worse.replace(worse.find("123.4"), 5, "123.4x");
        CHECK_THROWS_AS(trial_log_from_csv(worse, "test"), DataError);
    }
}

TEST_CASE("episode streams round-trip through CSV") {
    CampaignConfig config;
    config.model = "VGG-11";
    config.n_trials = 64;
    config.master_seed = 3;
    SimBench bench(default_calibration(), probe_by_name("1mm-CCW"), 3);
    run_spot(config, bench.bench());
    const auto& episodes = bench.episodes();
    REQUIRE_FALSE(episodes.empty());

    const std::string csv = episodes_to_csv(episodes, "m");
    const auto parsed = episodes_from_csv(csv, "test");
    CHECK(parsed == episodes);
}

TEST_CASE("grouped rates and their CSV form") {
    auto records = small_campaign(11, 32);
    const auto groups = group_rates(records);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].model == "ResNet-50");
    CHECK(groups[0].rates.n_trial == 32);
    const std::string csv = rates_to_csv(groups);
    CHECK(csv.find("model,timing,mode") == 0);
    CHECK(csv.find("ResNet-50,During,Sync,32") != std::string::npos);
}

TEST_CASE("run manifests derive a stable id") {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.command = "spot";
    m.calibration_hash = 0x1234;
    m.config_hash = 0x5678;
    m.master_seed = 42;
    const std::string id = m.id();
    CHECK(id.size() == 16);
    CHECK(m.to_text().find(id) != std::string::npos);
    RunManifest changed = m;
    changed.master_seed = 43;
    CHECK(changed.id() != id);
}

TEST_CASE("campaign config files parse with defaults and overrides") {
    const std::string text = R"(emfi-config v1
[campaign]
phase = spot
model = ResNet-18
n_trials = 17
n_images = 128
delay_s = -1
master_seed = 99
[tpe]
gamma = 0.3
[mitigation]
reference_k = 3
replicas = 3
redundancy_rule = majority
)";
    const RunConfig rc = parse_run_config(KeyValueFile::parse(text, "test"));
    CHECK(rc.campaign.phase == Phase::Spot);
    CHECK(rc.campaign.model == "ResNet-18");
    CHECK(rc.campaign.n_trials == 17);
    CHECK(rc.campaign.n_images == 128);
    CHECK(rc.campaign.timing() == Timing::Before);
    CHECK(rc.campaign.master_seed == 99);
    CHECK(rc.campaign.tpe.gamma == 0.3);
    CHECK(rc.campaign.tpe.n_startup == 20);
    CHECK(rc.mitigation.reference.k_references == 3);
    CHECK(rc.mitigation.redundancy.rule == RedundancyPolicy::Rule::MajorityVote);

    CHECK_THROWS_AS(parse_run_config(KeyValueFile::parse("emfi-config v1\n[campaign]\nphase = x\n",
                                                         "test")),
                    ConfigError);
}

TEST_CASE("baseline command reports the profile accuracies deterministically") {
    const fs::path dir = temp_dir("baseline");
    CliOptions options;
    options.out_dir = dir.string();
    options.seed = 42;
    CHECK(cmd_baseline(options) == kExitOk);

    const std::string csv = slurp(dir / "baseline.csv");
    std::istringstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header.rfind("# manifest ", 0) == 0);  // artifacts reference their manifest
    std::getline(is, header);
    CHECK(header == "model,n_images,top1,top5");

    struct Expect {
        const char* model;
        double top1;
    };
    const Expect rows[] = {{"ResNet-18", 0.7207}, {"ResNet-50", 0.7813}, {"VGG-11", 0.7090}};
    for (const auto& row : rows) {
        std::string line;
        REQUIRE(std::getline(is, line));
        CHECK(line.find(row.model) == 0);
        const auto fields = split_list(line);
        const double top1 = parse_double(fields[2], "top1");
        const double sigma = std::sqrt(row.top1 * (1 - row.top1) / 512.0);
        CHECK(std::abs(top1 - row.top1) <= 3.0 * sigma);
    }

    // identical bytes on a repeated run
    const fs::path dir2 = temp_dir("baseline2");
    CliOptions options2 = options;
    options2.out_dir = dir2.string();
    CHECK(cmd_baseline(options2) == kExitOk);
    CHECK(slurp(dir2 / "baseline.csv") == csv);
    CHECK(slurp(dir2 / "manifest.txt") == slurp(dir / "manifest.txt"));
}

TEST_CASE("unknown models in configs are rejected with exit-level errors") {
    const fs::path dir = temp_dir("badmodel");
    const fs::path cfg = dir / "config.emfi";
    write_file_atomic(cfg, "emfi-config v1\n[campaign]\nmodel = LeNet\n");
    CliOptions options;
    options.config_path = cfg.string();
    options.out_dir = (dir / "out").string();
    CHECK_THROWS_AS(cmd_spot(options), ConfigError);

    write_file_atomic(cfg, "emfi-config v1\n[baseline]\nmodels = ResNet-18, LeNet\n");
    try {
        cmd_baseline(options);
        FAIL("expected error");
    } catch (const ConfigError& e) {
        // the error names the known profiles
        CHECK(std::string(e.what()).find("ResNet-50") != std::string::npos);
    }
}

TEST_CASE("spot then analyze lands on the published rate-plane point") {
    const fs::path dir = temp_dir("spot-analyze");
    const fs::path cfg = dir / "config.emfi";
    write_file_atomic(cfg,
                      "emfi-config v1\n[campaign]\nphase = spot\nmodel = ResNet-18\n"
                      "n_trials = 256\nn_images = 512\n");
    CliOptions options;
    options.config_path = cfg.string();
    options.seed = 42;
    options.out_dir = (dir / "out").string();
    REQUIRE(cmd_spot(options) == kExitOk);

    CliOptions analyze = options;
    analyze.inputs = {(dir / "out" / "trials.csv").string()};
    analyze.out_dir = (dir / "report").string();
    REQUIRE(cmd_analyze(analyze) == kExitOk);

    const auto records = read_trial_log(dir / "out" / "trials.csv");
    const RateSummary rates = compute_rates(records);
    CHECK(std::abs(rates.r_persist - 0.24) <= 0.04);
    CHECK(std::abs(rates.r_fail - 0.19) <= 0.04);

    CHECK(fs::exists(dir / "report" / "rates.csv"));
    CHECK(fs::exists(dir / "report" / "rate_plane.svg"));
    CHECK(fs::exists(dir / "report" / "spatial_map.svg"));
    CHECK(fs::exists(dir / "report" / "histogram_ResNet-18_During_Sync.svg"));
}

TEST_CASE("analyze on the literal characterized counts reproduces the exact rates") {
    // handcraft a log whose classes equal the ResNet-18 During spot counts
    std::vector<TrialRecord> records;
    auto push = [&](OutcomeClass cls, int count) {
        for (int i = 0; i < count; ++i) {
            TrialRecord r;
            r.trial_id = static_cast<int64_t>(records.size());
            r.model = "ResNet-18";
            r.probe = "1mm-CCW";
            r.x_mm = 123.4;
            r.y_mm = 155.1;
            r.z_mm = 0.25;
            r.voltage_v = 348.0;
            r.n_images = 512;
            switch (cls) {
                case OutcomeClass::C0:
                    r.top1 = 369.0 / 512.0;
                    r.followup_top1 = r.top1;
                    break;
                case OutcomeClass::C1:
                    r.top1 = 369.0 / 512.0 - 10.0 / 512.0;
                    r.followup_top1 = 369.0 / 512.0;
                    break;
                case OutcomeClass::C2:
                    r.top1 = 0.025;
                    r.followup_top1 = 0.025;
                    break;
                case OutcomeClass::C3:
                    r.device_failed = true;
                    r.recovered_by_power_cycle = true;
                    break;
            }
            r.outcome_class = cls;
            records.push_back(r);
        }
    };
    push(OutcomeClass::C0, 146);
    push(OutcomeClass::C1, 1);
    push(OutcomeClass::C2, 61);
    push(OutcomeClass::C3, 48);

    const fs::path dir = temp_dir("exact-rates");
    write_file_atomic(dir / "trials.csv", trial_log_to_csv(records, "m"));

    CliOptions options;
    options.inputs = {(dir / "trials.csv").string()};
    options.out_dir = (dir / "report").string();
    REQUIRE(cmd_analyze(options) == kExitOk);

    const std::string rates_csv = slurp(dir / "report" / "rates.csv");
    CHECK(rates_csv.rfind("# manifest ", 0) == 0);
    CHECK(rates_csv.find("ResNet-18,During,Sync,256,146,1,61,48,") != std::string::npos);

    const auto parsed = read_trial_log(dir / "trials.csv");
    const RateSummary s = compute_rates(parsed);
    CHECK(*s.r_mis == 62.0 / 208.0);
    CHECK(s.r_fail == 48.0 / 256.0);
    CHECK(s.r_persist == 61.0 / 256.0);
}

TEST_CASE("analyze accepts an empty log and exits cleanly") {
    const fs::path dir = temp_dir("empty-analyze");
    write_file_atomic(dir / "trials.csv",
                      std::string("# emfi-trials v1\n") + kTrialCsvHeader + "\n");
    CliOptions options;
    options.inputs = {(dir / "trials.csv").string()};
    options.out_dir = (dir / "report").string();
    CHECK(cmd_analyze(options) == kExitOk);
    CHECK(fs::exists(dir / "report" / "rates.csv"));
}

TEST_CASE("byte determinism across identical campaign commands") {
    const fs::path dir_a = temp_dir("det-a");
    const fs::path dir_b = temp_dir("det-b");
    CliOptions options;
    options.seed = 2024;
    const std::string cfg_text =
        "emfi-config v1\n[campaign]\nphase = spot\nmodel = VGG-11\nn_trials = 32\n";
    write_file_atomic(dir_a / "config.emfi", cfg_text);
    options.config_path = (dir_a / "config.emfi").string();

    options.out_dir = (dir_a / "out").string();
    REQUIRE(cmd_spot(options) == kExitOk);
    options.out_dir = (dir_b / "out").string();
    REQUIRE(cmd_spot(options) == kExitOk);

    CHECK(slurp(dir_a / "out" / "trials.csv") == slurp(dir_b / "out" / "trials.csv"));
    CHECK(slurp(dir_a / "out" / "episodes.csv") == slurp(dir_b / "out" / "episodes.csv"));
    CHECK(slurp(dir_a / "out" / "manifest.txt") == slurp(dir_b / "out" / "manifest.txt"));
}

TEST_CASE("repeat command emits the per-class comparison") {
    const fs::path dir = temp_dir("repeat");
    const fs::path cfg = dir / "config.emfi";
    write_file_atomic(cfg,
                      "emfi-config v1\n[campaign]\nphase = spot\nmodel = ResNet-50\n"
                      "n_trials = 64\nn_images = 512\nx_mm = 122.0\ny_mm = 156.0\nz_mm = 0.15\n"
                      "voltage_v = 300\nprobe = 1mm-CW\n");
    CliOptions options;
    options.config_path = cfg.string();
    options.seed = 1;
    options.out_dir = (dir / "out").string();
    REQUIRE(cmd_repeat(options) == kExitOk);

    CHECK(fs::exists(dir / "out" / "trials_a.csv"));
    CHECK(fs::exists(dir / "out" / "trials_b.csv"));
    const std::string csv = slurp(dir / "out" / "repeat.csv");
    CHECK(csv.find("class,count_a,count_b,abs_delta") != std::string::npos);
    CHECK(csv.find("max,,,") != std::string::npos);
}

TEST_CASE("mitigate command consumes campaign episodes") {
    const fs::path dir = temp_dir("mitigate");
    CliOptions spot;
    spot.seed = 5;
    spot.out_dir = (dir / "out").string();
    const fs::path cfg = dir / "config.emfi";
    write_file_atomic(cfg,
                      "emfi-config v1\n[campaign]\nphase = spot\nmodel = ResNet-50\nn_trials = 96\n"
                      "[mitigation]\nreference_k = 3\nreference_interval = 32\n");
    spot.config_path = cfg.string();
    REQUIRE(cmd_spot(spot) == kExitOk);

    CliOptions mitigate = spot;
    mitigate.inputs = {(dir / "out" / "episodes.csv").string()};
    mitigate.out_dir = (dir / "coverage").string();
    REQUIRE(cmd_mitigate(mitigate) == kExitOk);

    const std::string csv = slurp(dir / "coverage" / "coverage.csv");
    CHECK(csv.find("watchdog,C3") != std::string::npos);
    CHECK(csv.find("reference-check,C2") != std::string::npos);
    CHECK(csv.find("redundancy,C1") != std::string::npos);
}

TEST_CASE("svg emitters produce well-formed self-contained documents") {
    const auto records = small_campaign(9, 64);
    const auto groups = group_rates(records);
    const HistogramReport hist =
        accuracy_histogram(records, 50, 400.0 / 512.0, ClassificationThresholds{});

    for (const std::string& svg :
         {histogram_svg(hist, 400.0 / 512.0, 0.5, "test"),
          spatial_scatter_svg(records, "test"), rate_plane_svg(groups, "test")}) {
        CHECK(svg.find("<svg") == 0);
        CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
        CHECK(svg.find("timestamp") == std::string::npos);
    }
}
