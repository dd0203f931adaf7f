#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "emfi/calibration.hpp"
#include "emfi/surface.hpp"

using namespace emfi;

namespace {

PulseConfig right_hotspot_pulse(double v = 348.0, const char* probe = "1mm-CCW") {
    return PulseConfig(123.4, 155.1, 0.25, v, probe_by_name(probe));
}

// random in-bounds pulse from a seeded stream
PulseConfig random_pulse(Rng& rng) {
    return PulseConfig(rng.uniform(113.0, 127.0), rng.uniform(148.0, 160.0), rng.uniform(0.0, 2.0),
                       rng.uniform(150.0, 500.0), probe_by_name("1mm-CCW"));
}

}  // namespace

TEST_CASE("built-in probes carry the calibrated z-offsets") {
    CHECK(probe_by_name("1mm-CCW").z_offset_mm == -1.05);
    CHECK(probe_by_name("1mm-CW").z_offset_mm == -0.85);
    CHECK(probe_by_name("4mm-CCW").z_offset_mm == -1.75);
    CHECK(probe_by_name("1mm-CCW").orientation == Orientation::CCW);
    CHECK(probe_by_name("1mm-CW").orientation == Orientation::CW);
    for (const auto& p : builtin_probes()) CHECK(p.diameter_mm > 0);
    CHECK_THROWS_AS(probe_by_name("7mm-CCW"), ConfigError);
}

TEST_CASE("pulse configs reject out-of-bounds values at construction") {
    CHECK_NOTHROW(PulseConfig(113.0, 148.0, 0.0, 150.0, probe_by_name("1mm-CCW")));
    CHECK_NOTHROW(PulseConfig(127.0, 160.0, 2.0, 500.0, probe_by_name("1mm-CCW")));
    CHECK_THROWS_AS(PulseConfig(112.9, 155.0, 0.2, 300.0, probe_by_name("1mm-CCW")), ConfigError);
    CHECK_THROWS_AS(PulseConfig(120.0, 161.0, 0.2, 300.0, probe_by_name("1mm-CCW")), ConfigError);
    CHECK_THROWS_AS(PulseConfig(120.0, 155.0, 2.1, 300.0, probe_by_name("1mm-CCW")), ConfigError);
    CHECK_THROWS_AS(PulseConfig(120.0, 155.0, 0.2, 501.0, probe_by_name("1mm-CCW")), ConfigError);
    CHECK_THROWS_AS(PulseConfig(120.0, 155.0, 0.2, 300.0, probe_by_name("1mm-CCW"), 160.0, 0.0),
                    ConfigError);
}

TEST_CASE("delay sign selects the timing regime") {
    PulseConfig during(120.0, 155.0, 0.2, 300.0, probe_by_name("1mm-CCW"), 160.0, 1.0);
    PulseConfig before(120.0, 155.0, 0.2, 300.0, probe_by_name("1mm-CCW"), 160.0, -1.0);
    CHECK(during.timing() == Timing::During);
    CHECK(before.timing() == Timing::Before);
}

TEST_CASE("spot-test anchors reproduce their measured distributions exactly") {
    const FaultSurface& surf = default_calibration().surface;

    struct Row {
        const char* model;
        Timing timing;
        std::array<double, 4> counts;
    };
    const Row rows[] = {
        {"ResNet-18", Timing::During, {146, 1, 61, 48}},
        {"ResNet-50", Timing::During, {122, 7, 79, 48}},
        {"VGG-11", Timing::During, {64, 41, 48, 103}},
        {"ResNet-18", Timing::Before, {175, 0, 47, 34}},
        {"ResNet-50", Timing::Before, {138, 0, 68, 50}},
        {"VGG-11", Timing::Before, {91, 60, 75, 30}},
    };
    for (const auto& row : rows) {
        const auto p =
            surf.class_probabilities(right_hotspot_pulse(), row.model, row.timing, Mode::Sync);
        for (int i = 0; i < 4; ++i) CHECK(p[i] == row.counts[i] / 256.0);  // bit-exact
    }

    // CW-probe repeatability point, counts/64 averaged over the two sessions
    PulseConfig cw(122.0, 156.0, 0.15, 300.0, probe_by_name("1mm-CW"));
    const auto p = surf.class_probabilities(cw, "ResNet-50", Timing::During, Mode::Sync);
    CHECK(p[0] == 52.5 / 64.0);
    CHECK(p[1] == 0.5 / 64.0);
    CHECK(p[2] == 10.0 / 64.0);
    CHECK(p[3] == 1.0 / 64.0);
}

TEST_CASE("anchor matching honors position and voltage tolerances") {
    const FaultSurface& surf = default_calibration().surface;
    const auto exact =
        surf.class_probabilities(right_hotspot_pulse(), "ResNet-50", Timing::During, Mode::Sync);

    // within tolerance: same vector
    PulseConfig nearby(123.43, 155.08, 0.27, 348.6, probe_by_name("1mm-CCW"));
    CHECK(surf.class_probabilities(nearby, "ResNet-50", Timing::During, Mode::Sync) == exact);

    // outside tolerance: interpolated, different vector
    PulseConfig outside(123.8, 155.1, 0.25, 348.0, probe_by_name("1mm-CCW"));
    CHECK(surf.class_probabilities(outside, "ResNet-50", Timing::During, Mode::Sync) != exact);

    // other probe or timing: no anchor match
    PulseConfig cw(123.4, 155.1, 0.25, 348.0, probe_by_name("1mm-CW"));
    CHECK(surf.class_probabilities(cw, "ResNet-50", Timing::During, Mode::Sync) != exact);
}

TEST_CASE("async anchors carry the matched-campaign hang rates") {
    const FaultSurface& surf = default_calibration().surface;
    const auto sync =
        surf.class_probabilities(right_hotspot_pulse(350.0), "ResNet-50", Timing::During, Mode::Sync);
    const auto async =
        surf.class_probabilities(right_hotspot_pulse(350.0), "ResNet-50", Timing::During, Mode::Async);
    CHECK(sync[3] == 0.25);
    CHECK(async[3] == doctest::Approx(0.48).epsilon(0.01));
    CHECK(async[0] <= 0.01);       // essentially no unchanged trials
    CHECK(async[1] > sync[1]);     // redistributed into transient flips
    CHECK(async[2] < sync[2]);
}

TEST_CASE("below the voltage gate the surface is quiet") {
    const FaultSurface& surf = default_calibration().surface;
    // sigmoid midpoint sits near 350 V; at 150 V lateral hotspots are inert
    const auto p =
        surf.class_probabilities(right_hotspot_pulse(150.0), "ResNet-50", Timing::During, Mode::Sync);
    CHECK(p[0] > 0.95);
}

TEST_CASE("maximum stand-off suppresses faults everywhere") {
    const FaultSurface& surf = default_calibration().surface;
    Rng rng(2024);
    for (int i = 0; i < 400; ++i) {
        PulseConfig pulse(rng.uniform(113.0, 127.0), rng.uniform(148.0, 160.0), 2.0,
                          rng.uniform(150.0, 500.0), probe_by_name("1mm-CCW"));
        const auto p = surf.class_probabilities(pulse, "ResNet-50", Timing::During, Mode::Sync);
        CHECK(p[0] > 0.99);
    }
}

TEST_CASE("probability vectors are normalized for random in-bounds configs") {
    const FaultSurface& surf = default_calibration().surface;
    static const char* models[] = {"ResNet-18", "ResNet-50", "VGG-11"};
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const PulseConfig pulse = random_pulse(rng);
        const char* model = models[i % 3];
        const Timing timing = (i % 2) ? Timing::During : Timing::Before;
        const Mode mode = (i % 5 == 0) ? Mode::Async : Mode::Sync;
        const auto p = surf.class_probabilities(pulse, model, timing, mode);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("no-fault probability decays monotonically in stand-off and voltage") {
    const FaultSurface& surf = default_calibration().surface;
    static const char* probes[] = {"1mm-CCW", "1mm-CW", "4mm-CCW"};
    static const char* models[] = {"ResNet-18", "ResNet-50", "VGG-11"};
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = rng.uniform(113.0, 127.0);
        const double y = rng.uniform(148.0, 160.0);
        const ProbeGeometry& probe = probe_by_name(probes[trial % 3]);
        const char* model = models[trial % 2 ? 1 : trial % 3];
        const Timing timing = trial % 2 ? Timing::During : Timing::Before;
        const Mode mode = trial % 4 == 0 ? Mode::Async : Mode::Sync;

        // rising z at fixed (x, y, V): no-fault never decreases
        const double v = rng.uniform(150.0, 500.0);
        double prev = -1.0;
        for (double z = 0.0; z <= 2.0; z += 0.1) {
            PulseConfig pulse(x, y, z, v, probe);
            const auto p = surf.class_probabilities(pulse, model, timing, mode);
            CHECK(p[0] >= prev - 1e-12);
            prev = p[0];
        }

        // rising V at fixed (x, y, z): no-fault never increases
        const double z = rng.uniform(0.0, 2.0);
        prev = 2.0;
        for (double volt = 150.0; volt <= 500.0; volt += 10.0) {
            PulseConfig pulse(x, y, z, volt, probe);
            const auto p = surf.class_probabilities(pulse, model, timing, mode);
            CHECK(p[0] <= prev + 1e-12);
            prev = p[0];
        }
    }
}

TEST_CASE("sampled outcomes at an anchor follow the anchor distribution") {
    const FaultSurface& surf = default_calibration().surface;
    const PulseConfig pulse = right_hotspot_pulse();
    const auto p = surf.class_probabilities(pulse, "ResNet-50", Timing::During, Mode::Sync);

    Rng rng(42);
    std::array<int, 4> counts{};
    const int n = 256;
    for (int i = 0; i < n; ++i) {
        const auto out = surf.sample_outcome(pulse, "ResNet-50", Timing::During, Mode::Sync, rng);
        counts[static_cast<int>(out.kind)]++;
    }
    for (int k = 0; k < 4; ++k) {
        const double expected = p[k] * n;
        const double sigma = std::sqrt(n * p[k] * (1.0 - p[k]));
        CHECK(std::abs(counts[k] - expected) <= 3.0 * sigma + 1.0);
    }
}

TEST_CASE("persistent sub-regime split matches the observed event counts") {
    const FaultSurface& surf = default_calibration().surface;
    CHECK(surf.p_saturated() == doctest::Approx(12.0 / 22.0));

    const PulseConfig pulse = right_hotspot_pulse();
    Rng rng(5);
    int saturated = 0, persistent = 0;
    while (persistent < 10000) {
        const auto out = surf.sample_outcome(pulse, "ResNet-50", Timing::During, Mode::Sync, rng);
        if (out.kind == OutcomeKind::PersistentCorruption) {
            persistent++;
            if (out.subregime == Subregime::SaturatedSingleClass) saturated++;
        }
    }
    CHECK(std::abs(saturated / 10000.0 - 12.0 / 22.0) < 0.02);
}

TEST_CASE("zero-probability kinds are never drawn") {
    const FaultSurface& surf = default_calibration().surface;
    // the ResNet-18 Before anchor has zero transient mass
    const PulseConfig pulse = right_hotspot_pulse();
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const auto out = surf.sample_outcome(pulse, "ResNet-18", Timing::Before, Mode::Sync, rng);
        CHECK(out.kind != OutcomeKind::TransientFlip);
    }
}

TEST_CASE("transient flip counts follow the per-model distribution") {
    const FaultSurface& surf = default_calibration().surface;
    const auto& resnet = surf.flip_distribution("ResNet-50");
    CHECK(resnet.kind == FlipDistribution::Kind::Geometric);
    CHECK(resnet.mean == 2.0);
    const auto& vgg = surf.flip_distribution("VGG-11");
    CHECK(vgg.kind == FlipDistribution::Kind::UniformCount);
    CHECK(vgg.lo == 8);
    CHECK(vgg.hi == 224);

    const PulseConfig pulse = right_hotspot_pulse();
    Rng rng(3);
    int seen = 0;
    double mean = 0.0;
    while (seen < 4000) {
        const auto out = surf.sample_outcome(pulse, "VGG-11", Timing::During, Mode::Sync, rng);
        if (out.kind == OutcomeKind::TransientFlip) {
            CHECK(out.flip_count >= 8);
            CHECK(out.flip_count <= 224);
            mean += out.flip_count;
            seen++;
        }
    }
    CHECK(mean / seen == doctest::Approx((8 + 224) / 2.0).epsilon(0.05));
}

TEST_CASE("identical seeds give identical outcome sequences") {
    const FaultSurface& surf = default_calibration().surface;
    const PulseConfig pulse = right_hotspot_pulse();
    Rng a(123), b(123);
    for (int i = 0; i < 500; ++i) {
        const auto oa = surf.sample_outcome(pulse, "VGG-11", Timing::During, Mode::Sync, a);
        const auto ob = surf.sample_outcome(pulse, "VGG-11", Timing::During, Mode::Sync, b);
        CHECK(oa == ob);
    }
}

TEST_CASE("lateral argmax map separates hotspots from the central hang band") {
    const FaultSurface& surf = default_calibration().surface;
    const ProbeGeometry& probe = probe_by_name("1mm-CCW");
    const double centers[][2] = {{116.3, 154.9}, {123.4, 155.1}};

    for (int gx = 113; gx <= 127; ++gx) {
        for (int gy = 148; gy <= 160; ++gy) {
            PulseConfig pulse(gx, gy, 0.25, 348.0, probe);
            const auto p = surf.class_probabilities(pulse, "ResNet-50", Timing::During, Mode::Sync);
            const OutcomeKind dominant = dominant_fault_kind(p);

            bool near_hotspot = false;
            for (const auto& c : centers) {
                const double dx = gx - c[0], dy = gy - c[1];
                if (dx * dx + dy * dy <= 4.0) near_hotspot = true;
            }
            if (near_hotspot) {
                CHECK(dominant == OutcomeKind::PersistentCorruption);
            } else if (gx >= 119 && gx <= 121 && gy >= 150 && gy <= 159) {
                // inter-hotspot band
                CHECK(dominant == OutcomeKind::Hang);
            }
        }
    }
}

TEST_CASE("the 4mm probe produces persistent corruption only at low voltage") {
    const FaultSurface& surf = default_calibration().surface;
    const ProbeGeometry& probe = probe_by_name("4mm-CCW");

    PulseConfig low(123.4, 155.1, 0.1, 155.0, probe);
    const auto p_low = surf.class_probabilities(low, "ResNet-50", Timing::During, Mode::Sync);
    CHECK(p_low[2] > 0.0);  // persistent corruption present near 150 V

    PulseConfig high(123.4, 155.1, 0.1, 400.0, probe);
    const auto p_high = surf.class_probabilities(high, "ResNet-50", Timing::During, Mode::Sync);
    CHECK(p_high[2] == 0.0);       // gone above the window
    CHECK(p_high[3] > p_high[1]);  // hang dominant
    CHECK(p_high[3] > 0.3);
}

TEST_CASE("calibration file validation") {
    SUBCASE("default text parses and matches the built-in surface") {
        const Calibration cal = parse_calibration(default_calibration_text(), "default");
        CHECK(cal.surface.anchors.size() == default_calibration().surface.anchors.size());
        CHECK(cal.text_hash == default_calibration().text_hash);
    }
    SUBCASE("the shipped calibration file equals the built-in text") {
        const Calibration cal =
            load_calibration(std::string(EMFI_SOURCE_DIR) + "/data/default-surface.emfi");
        CHECK(cal.text == default_calibration().text);
        CHECK(cal.text_hash == default_calibration().text_hash);
    }
    SUBCASE("bad version header is rejected") {
        CHECK_THROWS_AS(parse_calibration("emfi-surface v2\n", "t"), ConfigError);
        CHECK_THROWS_AS(parse_calibration("[kernels]\n", "t"), ConfigError);
    }
    SUBCASE("negative weights are rejected") {
        std::string text(default_calibration_text());
        const std::string needle = "0.02, 0.50, 0.28";
        text.replace(text.find(needle), needle.size(), "-0.02, 0.50, 0.28");
        CHECK_THROWS_AS(parse_calibration(text, "t"), ConfigError);
    }
    SUBCASE("anchor probabilities must sum to one") {
        std::string text(default_calibration_text());
        const std::string needle = "0.5703125, 0.00390625, 0.23828125, 0.1875";
        text.replace(text.find(needle), needle.size(), "0.5703125, 0.00390625, 0.23828125, 0.2");
        CHECK_THROWS_AS(parse_calibration(text, "t"), ConfigError);
    }
    SUBCASE("missing required anchors are listed") {
        std::string text(default_calibration_text());
        const std::string needle =
            "anchor = VGG-11, Before, Sync, 1mm-CCW, 123.4, 155.1, 0.25, 348, 0.35546875, "
            "0.234375, 0.29296875, 0.1171875";
        const size_t pos = text.find(needle);
        REQUIRE(pos != std::string::npos);
        text.erase(pos, needle.size());
        try {
            parse_calibration(text, "t");
            FAIL("expected validation error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("VGG-11/Before/Sync") != std::string::npos);
        }
    }
    SUBCASE("profile overrides land in the table") {
        const Calibration& cal = default_calibration();
        CHECK(cal.profiles.get("ResNet-18").baseline_top1 == 0.7207);
        CHECK(cal.profiles.get("ResNet-50").baseline_top5 == 0.9355);
        CHECK(cal.profiles.get("VGG-11").residual_top1_hi == 0.04);
    }
}
