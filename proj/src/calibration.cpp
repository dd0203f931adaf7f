#include "emfi/calibration.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "emfi/kv.hpp"

namespace emfi {

namespace {

constexpr std::string_view kVersionTag = "emfi-surface v1";

ClassScales parse_scales(const std::vector<std::string>& f, size_t offset, const KeyValueFile& kv,
                         const KeyValueFile::Entry& e) {
    if (f.size() < offset + 3) kv.fail(e, "expected three class scales");
    ClassScales s;
    s.transient = parse_double(f[offset], "scale");
    s.persist = parse_double(f[offset + 1], "scale");
    s.hang = parse_double(f[offset + 2], "scale");
    if (s.transient < 0 || s.persist < 0 || s.hang < 0) kv.fail(e, "scales must be >= 0");
    return s;
}

void parse_kernels(const KeyValueFile& kv, FaultSurface& surf) {
    for (const auto* e : kv.get_all("kernels", "kernel")) {
        auto f = split_list(e->value);
        if (f.size() != 10) kv.fail(*e, "kernel needs 10 fields, got " + std::to_string(f.size()));
        HotspotKernel k;
        k.name = f[0];
        k.center_x_mm = parse_double(f[1], "kernel cx");
        k.center_y_mm = parse_double(f[2], "kernel cy");
        k.sigma_mm = parse_double(f[3], "kernel sigma");
        k.voltage_v50 = parse_double(f[4], "kernel v50");
        k.voltage_slope = parse_double(f[5], "kernel slope");
        k.z_scale_mm = parse_double(f[6], "kernel z_scale");
        k.w_transient = parse_double(f[7], "kernel weight");
        k.w_persist = parse_double(f[8], "kernel weight");
        k.w_hang = parse_double(f[9], "kernel weight");
        if (k.sigma_mm <= 0) kv.fail(*e, "kernel sigma_mm must be > 0");
        if (k.z_scale_mm <= 0) kv.fail(*e, "kernel z_scale_mm must be > 0");
        if (k.w_transient < 0 || k.w_persist < 0 || k.w_hang < 0)
            kv.fail(*e, "kernel class weights must be >= 0");
        surf.kernels.push_back(std::move(k));
    }
}

void parse_hang_region(const KeyValueFile& kv, FaultSurface& surf) {
    HangRegion& hr = surf.hang_region;
    hr.x_lo = kv.get_double("hang-region", "x_lo", hr.x_lo);
    hr.x_hi = kv.get_double("hang-region", "x_hi", hr.x_hi);
    hr.y_lo = kv.get_double("hang-region", "y_lo", hr.y_lo);
    hr.y_hi = kv.get_double("hang-region", "y_hi", hr.y_hi);
    hr.base_prob = kv.get_double("hang-region", "base_prob", hr.base_prob);
    hr.voltage_v50 = kv.get_double("hang-region", "v50_v", hr.voltage_v50);
    hr.voltage_slope = kv.get_double("hang-region", "v_slope", hr.voltage_slope);
    hr.z_scale_mm = kv.get_double("hang-region", "z_scale_mm", hr.z_scale_mm);
    if (hr.base_prob < 0 || hr.base_prob > 1)
        throw ConfigError(kv.origin() + ": hang-region base_prob must be in [0,1]");
    if (hr.z_scale_mm <= 0) throw ConfigError(kv.origin() + ": hang-region z_scale_mm must be > 0");
}

void parse_modifiers(const KeyValueFile& kv, FaultSurface& surf) {
    for (const auto* e : kv.get_all("modifiers", "probe-modifier")) {
        auto f = split_list(e->value);
        if (f.size() != 5 && f.size() != 7)
            kv.fail(*e, "probe-modifier needs 5 or 7 fields");
        ProbeModifier m;
        m.probe = f[0];
        m.scales = parse_scales(f, 1, kv, *e);
        m.v50_shift = parse_double(f[4], "probe v50_shift");
        if (f.size() == 7) {
            m.has_persist_window = true;
            m.persist_v_hi = parse_double(f[5], "persist window");
            m.persist_ramp_v = parse_double(f[6], "persist ramp");
            if (m.persist_ramp_v <= 0) kv.fail(*e, "persist ramp must be > 0");
        }
        surf.probe_modifiers.push_back(std::move(m));
    }
    for (const auto* e : kv.get_all("modifiers", "model-modifier")) {
        auto f = split_list(e->value);
        if (f.size() != 4) kv.fail(*e, "model-modifier needs 4 fields");
        ModelModifier m;
        m.model = f[0];
        m.scales = parse_scales(f, 1, kv, *e);
        surf.model_modifiers.push_back(std::move(m));
    }
    for (const auto* e : kv.get_all("modifiers", "mode-modifier")) {
        auto f = split_list(e->value);
        if (f.size() != 6) kv.fail(*e, "mode-modifier needs 6 fields");
        ModeModifier m;
        m.timing = timing_from_string(f[0]);
        m.mode = mode_from_string(f[1]);
        m.model = f[2];
        m.scales = parse_scales(f, 3, kv, *e);
        surf.mode_modifiers.push_back(std::move(m));
    }
}

void parse_flips(const KeyValueFile& kv, FaultSurface& surf) {
    for (const auto& e : kv.entries()) {
        if (e.section != "flip") continue;
        auto f = split_list(e.value);
        FlipDistribution dist;
        if (f.empty()) kv.fail(e, "empty flip distribution");
        if (f[0] == "geometric") {
            if (f.size() != 2) kv.fail(e, "geometric flip distribution needs a mean");
            dist.kind = FlipDistribution::Kind::Geometric;
            dist.mean = parse_double(f[1], "flip mean");
            if (dist.mean < 1) kv.fail(e, "flip mean must be >= 1");
        } else if (f[0] == "uniform") {
            if (f.size() != 3) kv.fail(e, "uniform flip distribution needs lo, hi");
            dist.kind = FlipDistribution::Kind::UniformCount;
            dist.lo = static_cast<int>(parse_int(f[1], "flip lo"));
            dist.hi = static_cast<int>(parse_int(f[2], "flip hi"));
            if (dist.lo < 1 || dist.hi < dist.lo) kv.fail(e, "flip range must satisfy 1 <= lo <= hi");
        } else {
            kv.fail(e, "unknown flip distribution kind '" + f[0] + "'");
        }
        if (e.key == "default")
            surf.default_flip = dist;
        else
            surf.model_flips.emplace_back(e.key, dist);
    }
}

void parse_anchors(const KeyValueFile& kv, FaultSurface& surf) {
    for (const auto* e : kv.get_all("anchors", "anchor")) {
        auto f = split_list(e->value);
        if (f.size() != 12) kv.fail(*e, "anchor needs 12 fields, got " + std::to_string(f.size()));
        Anchor a;
        a.model = f[0];
        a.timing = timing_from_string(f[1]);
        a.mode = mode_from_string(f[2]);
        a.probe = f[3];
        a.x_mm = parse_double(f[4], "anchor x");
        a.y_mm = parse_double(f[5], "anchor y");
        a.z_mm = parse_double(f[6], "anchor z");
        a.voltage_v = parse_double(f[7], "anchor voltage");
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            a.probs[i] = parse_double(f[8 + i], "anchor probability");
            if (a.probs[i] < 0)
                kv.fail(*e, "anchor probabilities must be >= 0 (got " + f[8 + i] + ")");
            sum += a.probs[i];
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "anchor probabilities must sum to 1, got " << sum;
            kv.fail(*e, os.str());
        }
        surf.anchors.push_back(std::move(a));
    }
}

PartialCollapseParams parse_collapse(const KeyValueFile& kv, ModelProfile& proto) {
    PartialCollapseParams pc;
    pc.agreement_with_clean = kv.get_double("collapse", "agreement_with_clean", pc.agreement_with_clean);
    pc.top_class_share = kv.get_double("collapse", "top_class_share", pc.top_class_share);
    pc.distinct_argmax_target = kv.get_double("collapse", "distinct_argmax_target", pc.distinct_argmax_target);
    pc.subset_size = static_cast<int>(kv.get_int("collapse", "subset_size", pc.subset_size));
    proto.nominal_logit_lo = kv.get_double("collapse", "nominal_logit_lo", proto.nominal_logit_lo);
    proto.nominal_logit_hi = kv.get_double("collapse", "nominal_logit_hi", proto.nominal_logit_hi);
    proto.saturation_ceiling = kv.get_double("collapse", "saturation_ceiling", proto.saturation_ceiling);
    proto.pinned_set_lo = static_cast<int>(kv.get_int("collapse", "pinned_set_lo", proto.pinned_set_lo));
    proto.pinned_set_hi = static_cast<int>(kv.get_int("collapse", "pinned_set_hi", proto.pinned_set_hi));
    return pc;
}

void parse_profiles(const KeyValueFile& kv, ProfileTable& profiles) {
    ModelProfile proto;
    PartialCollapseParams pc = parse_collapse(kv, proto);
    for (const auto* e : kv.get_all("profiles", "profile")) {
        auto f = split_list(e->value);
        if (f.size() != 5) kv.fail(*e, "profile needs 5 fields");
        ModelProfile p = proto;
        p.name = f[0];
        p.baseline_top1 = parse_double(f[1], "profile top1");
        p.baseline_top5 = parse_double(f[2], "profile top5");
        p.residual_top1_lo = parse_double(f[3], "profile residual lo");
        p.residual_top1_hi = parse_double(f[4], "profile residual hi");
        p.partial_collapse = pc;
        if (!(p.baseline_top1 <= p.baseline_top5 && p.baseline_top5 <= 1.0))
            kv.fail(*e, "profile must satisfy top1 <= top5 <= 1");
        if (p.baseline_top1 <= 0) kv.fail(*e, "profile top1 must be > 0");
        if (p.residual_top1_lo < 0 || p.residual_top1_hi < p.residual_top1_lo)
            kv.fail(*e, "profile residual band must satisfy 0 <= lo <= hi");
        profiles.upsert(p);
    }
}

void validate_required_anchors(const FaultSurface& surf, const std::string& origin) {
    static const char* kModels[] = {"ResNet-18", "ResNet-50", "VGG-11"};
    static const Timing kTimings[] = {Timing::During, Timing::Before};
    std::vector<std::string> missing;
    for (const char* model : kModels) {
        for (Timing timing : kTimings) {
            bool found = false;
            for (const auto& a : surf.anchors)
                if (a.model == model && a.timing == timing && a.mode == Mode::Sync) found = true;
            if (!found)
                missing.push_back(std::string(model) + "/" + std::string(to_string(timing)) + "/Sync");
        }
    }
    if (!missing.empty()) {
        std::ostringstream os;
        os << origin << ": missing required spot-test anchors:";
        for (const auto& m : missing) os << " " << m;
        throw ConfigError(os.str());
    }
}

}  // namespace

Calibration parse_calibration(std::string_view text, std::string origin) {
    KeyValueFile kv = KeyValueFile::parse(text, std::move(origin));
    if (kv.version_tag() != kVersionTag)
        throw ConfigError(kv.origin() + ": expected header line '" + std::string(kVersionTag) +
                          "', got '" + kv.version_tag() + "'");

    Calibration cal;
    cal.text = kv.text();
    cal.text_hash = hash_str(cal.text);

    FaultSurface& surf = cal.surface;
    parse_kernels(kv, surf);
    parse_hang_region(kv, surf);
    surf.before_sigma_shrink = kv.get_double("timing", "before_sigma_shrink", surf.before_sigma_shrink);
    if (surf.before_sigma_shrink <= 0 || surf.before_sigma_shrink > 1)
        throw ConfigError(kv.origin() + ": before_sigma_shrink must be in (0,1]");
    surf.saturated_count = static_cast<int>(kv.get_int("subregime", "saturated_events", surf.saturated_count));
    surf.partial_count = static_cast<int>(kv.get_int("subregime", "partial_collapse_events", surf.partial_count));
    if (surf.saturated_count < 0 || surf.partial_count < 0 ||
        surf.saturated_count + surf.partial_count == 0)
        throw ConfigError(kv.origin() + ": sub-regime event counts must be >= 0 and not both zero");
    parse_modifiers(kv, surf);
    parse_flips(kv, surf);
    parse_anchors(kv, surf);
    parse_profiles(kv, cal.profiles);
    validate_required_anchors(surf, kv.origin());
    return cal;
}

Calibration load_calibration(const std::string& path) {
    KeyValueFile kv = KeyValueFile::parse_file(path);
    return parse_calibration(kv.text(), path);
}

const Calibration& default_calibration() {
    static const Calibration cal = parse_calibration(default_calibration_text(), "<builtin>");
    return cal;
}

}  // namespace emfi
