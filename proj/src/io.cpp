#include "emfi/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace emfi {

const char* const kToolVersion = "0.1.0";

const char* const kTrialCsvHeader =
    "trial_id,timestamp,model,timing,mode,probe,x_mm,y_mm,z_mm,voltage_v,width_ns,delay_s,"
    "n_images,top1,top5,followup_top1,device_failed,recovered,outcome_class,elapsed_s,seed";

namespace {

constexpr std::string_view kTrialSchema = "# emfi-trials v1";
constexpr std::string_view kEpisodeSchema = "# emfi-episodes v1";
constexpr const char* kEpisodeHeader = "episode_id,label,subregime,model,n_images,flip_count,seed";

std::vector<std::string_view> split_view(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double field_double(std::string_view s, const std::string& origin, int row) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(origin + ": row " + std::to_string(row) + ": bad number '" +
                        std::string(s) + "'");
    return v;
}

int64_t field_int(std::string_view s, const std::string& origin, int row) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(origin + ": row " + std::to_string(row) + ": bad integer '" +
                        std::string(s) + "'");
    return v;
}

uint64_t field_u64(std::string_view s, const std::string& origin, int row) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(origin + ": row " + std::to_string(row) + ": bad unsigned '" +
                        std::string(s) + "'");
    return v;
}

struct CsvDoc {
    std::vector<std::string_view> rows;  // data rows only
    int first_data_row = 0;              // 1-based file line of rows[0]
};

// checks schema comment + header row, returns data rows
CsvDoc open_csv(const std::string& text, const std::string& origin, std::string_view schema,
                std::string_view header) {
    CsvDoc doc;
    int line_no = 0;
    bool saw_schema = false, saw_header = false;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = eol == std::string::npos
                                    ? std::string_view(text).substr(pos)
                                    : std::string_view(text).substr(pos, eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!saw_schema) {
                if (line != schema)
                    throw DataError(origin + ": schema mismatch: expected '" +
                                    std::string(schema) + "', got '" + std::string(line) + "'");
                saw_schema = true;
            }
            continue;
        }
        if (!saw_schema)
            throw DataError(origin + ": missing schema line '" + std::string(schema) + "'");
        if (!saw_header) {
            if (line != header)
                throw DataError(origin + ": unexpected header row (line " +
                                std::to_string(line_no) + ")");
            saw_header = true;
            doc.first_data_row = line_no + 1;
            continue;
        }
        doc.rows.push_back(line);
    }
    if (!saw_schema)
        throw DataError(origin + ": missing schema line '" + std::string(schema) + "'");
    if (!saw_header) throw DataError(origin + ": missing header row");
    return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_u64(uint64_t v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string trial_log_to_csv(std::span<const TrialRecord> records, const std::string& manifest_id) {
    std::ostringstream os;
    os << kTrialSchema << "\n";
    if (!manifest_id.empty()) os << "# manifest " << manifest_id << "\n";
    os << kTrialCsvHeader << "\n";
    for (const auto& r : records) {
        os << r.trial_id << ',' << format_double(r.timestamp) << ',' << r.model << ','
           << to_string(r.timing) << ',' << to_string(r.mode) << ',' << r.probe << ','
           << format_double(r.x_mm) << ',' << format_double(r.y_mm) << ',' << format_double(r.z_mm)
           << ',' << format_double(r.voltage_v) << ',' << format_double(r.width_ns) << ','
           << format_double(r.delay_s) << ',' << r.n_images << ','
           << (r.top1 ? format_double(*r.top1) : "") << ','
           << (r.top5 ? format_double(*r.top5) : "") << ','
           << (r.followup_top1 ? format_double(*r.followup_top1) : "") << ','
           << (r.device_failed ? '1' : '0') << ',' << (r.recovered_by_power_cycle ? '1' : '0')
           << ',' << to_string(r.outcome_class) << ',' << format_double(r.elapsed_s) << ','
           << format_u64(r.seed) << "\n";
    }
    return os.str();
}

std::vector<TrialRecord> trial_log_from_csv(const std::string& text, const std::string& origin) {
    const CsvDoc doc = open_csv(text, origin, kTrialSchema, kTrialCsvHeader);
    std::vector<TrialRecord> records;
    records.reserve(doc.rows.size());
    for (size_t i = 0; i < doc.rows.size(); ++i) {
        const int row = doc.first_data_row + static_cast<int>(i);
        const auto f = split_view(doc.rows[i], ',');
        if (f.size() != 21)
            throw DataError(origin + ": row " + std::to_string(row) + ": expected 21 fields, got " +
                            std::to_string(f.size()));
        TrialRecord r;
        r.trial_id = field_int(f[0], origin, row);
        r.timestamp = field_double(f[1], origin, row);
        r.model = std::string(f[2]);
        r.timing = timing_from_string(f[3]);
        r.mode = mode_from_string(f[4]);
        r.probe = std::string(f[5]);
        r.x_mm = field_double(f[6], origin, row);
        r.y_mm = field_double(f[7], origin, row);
        r.z_mm = field_double(f[8], origin, row);
        r.voltage_v = field_double(f[9], origin, row);
        r.width_ns = field_double(f[10], origin, row);
        r.delay_s = field_double(f[11], origin, row);
        r.n_images = static_cast<int>(field_int(f[12], origin, row));
        if (!f[13].empty()) r.top1 = field_double(f[13], origin, row);
        if (!f[14].empty()) r.top5 = field_double(f[14], origin, row);
        if (!f[15].empty()) r.followup_top1 = field_double(f[15], origin, row);
        r.device_failed = field_int(f[16], origin, row) != 0;
        r.recovered_by_power_cycle = field_int(f[17], origin, row) != 0;
        r.outcome_class = outcome_class_from_string(f[18]);
        r.elapsed_s = field_double(f[19], origin, row);
        r.seed = field_u64(f[20], origin, row);
        if (r.device_failed && r.top1)
            throw DataError(origin + ": row " + std::to_string(row) +
                            ": device_failed trial carries top1");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path) {
    return trial_log_from_csv(read_text_file(path), path.string());
}

std::string episodes_to_csv(std::span<const Episode> episodes, const std::string& manifest_id) {
    std::ostringstream os;
    os << kEpisodeSchema << "\n";
    if (!manifest_id.empty()) os << "# manifest " << manifest_id << "\n";
    os << kEpisodeHeader << "\n";
    for (const auto& e : episodes) {
        os << e.episode_id << ',' << to_string(e.label) << ','
           << (e.label == OutcomeClass::C2 ? to_string(e.subregime) : std::string_view{}) << ','
           << e.model << ',' << e.n_images << ',' << e.flip_count << ',' << format_u64(e.seed)
           << "\n";
    }
    return os.str();
}

std::vector<Episode> episodes_from_csv(const std::string& text, const std::string& origin) {
    const CsvDoc doc = open_csv(text, origin, kEpisodeSchema, kEpisodeHeader);
    std::vector<Episode> episodes;
    episodes.reserve(doc.rows.size());
    for (size_t i = 0; i < doc.rows.size(); ++i) {
        const int row = doc.first_data_row + static_cast<int>(i);
        const auto f = split_view(doc.rows[i], ',');
        if (f.size() != 7)
            throw DataError(origin + ": row " + std::to_string(row) + ": expected 7 fields, got " +
                            std::to_string(f.size()));
        Episode e;
        e.episode_id = field_int(f[0], origin, row);
        e.label = outcome_class_from_string(f[1]);
        if (!f[2].empty())
            e.subregime = f[2] == "SaturatedSingleClass" ? Subregime::SaturatedSingleClass
                                                         : Subregime::PartialCollapse;
        e.model = std::string(f[3]);
        e.n_images = static_cast<int>(field_int(f[4], origin, row));
        e.flip_count = static_cast<int>(field_int(f[5], origin, row));
        e.seed = field_u64(f[6], origin, row);
        episodes.push_back(std::move(e));
    }
    return episodes;
}

std::vector<Episode> read_episodes(const std::filesystem::path& path) {
    return episodes_from_csv(read_text_file(path), path.string());
}

std::string coverage_report_to_csv(const std::string& strategy, const CoverageReport& report) {
    std::ostringstream os;
    os << "strategy,class,episodes,detected,detection_rate,mean_latency_inferences,"
          "max_latency_inferences,false_alarm_rate,overhead_per_inference,max_latency_s\n";
    static const OutcomeClass classes[] = {OutcomeClass::C0, OutcomeClass::C1, OutcomeClass::C2,
                                           OutcomeClass::C3};
    for (OutcomeClass c : classes) {
        const auto& cov = report.coverage(c);
        os << strategy << ',' << to_string(c) << ',' << cov.episodes << ',' << cov.detected << ','
           << format_double(cov.detection_rate()) << ','
           << format_double(cov.mean_latency_inferences) << ',' << cov.max_latency_inferences
           << ',' << format_double(report.false_alarm_rate) << ','
           << format_double(report.overhead_per_inference) << ','
           << format_double(report.max_latency_s) << "\n";
    }
    return os.str();
}

std::vector<GroupedRates> group_rates(std::span<const TrialRecord> records) {
    std::map<std::tuple<std::string, int, int>, std::array<int64_t, 4>> counts;
    for (const auto& r : records) {
        auto key = std::make_tuple(r.model, static_cast<int>(r.timing), static_cast<int>(r.mode));
        counts[key][static_cast<int>(r.outcome_class)]++;
    }
    std::vector<GroupedRates> out;
    for (const auto& [key, c] : counts) {
        GroupedRates g;
        g.model = std::get<0>(key);
        g.timing = static_cast<Timing>(std::get<1>(key));
        g.mode = static_cast<Mode>(std::get<2>(key));
        g.rates = compute_rates_from_counts(c[0], c[1], c[2], c[3]);
        out.push_back(std::move(g));
    }
    return out;
}

std::string rates_to_csv(std::span<const GroupedRates> groups) {
    std::ostringstream os;
    os << "model,timing,mode,n_trial,n_c0,n_c1,n_c2,n_c3,r_mis,r_fail,r_persist\n";
    for (const auto& g : groups) {
        os << g.model << ',' << to_string(g.timing) << ',' << to_string(g.mode) << ','
           << g.rates.n_trial << ',' << g.rates.n_c0 << ',' << g.rates.n_c1 << ',' << g.rates.n_c2
           << ',' << g.rates.n_c3 << ',' << (g.rates.r_mis ? format_double(*g.rates.r_mis) : "")
           << ',' << format_double(g.rates.r_fail) << ',' << format_double(g.rates.r_persist)
           << "\n";
    }
    return os.str();
}

std::string RunManifest::id() const {
    uint64_t h = hash_str(tool_version);
    h = hash_u64(h, hash_str(command));
    h = hash_u64(h, calibration_hash);
    h = hash_u64(h, config_hash);
    h = hash_u64(h, master_seed);
    return hex16(h);
}

std::string RunManifest::to_text() const {
    std::ostringstream os;
    os << "emfi-manifest v1\n";
    os << "manifest_id = " << id() << "\n";
    os << "tool_version = " << tool_version << "\n";
    os << "command = " << command << "\n";
    os << "calibration_hash = " << hex16(calibration_hash) << "\n";
    os << "config_hash = " << hex16(config_hash) << "\n";
    os << "master_seed = " << format_u64(master_seed) << "\n";
    for (const auto& o : outputs) os << "output = " << o << "\n";
    return os.str();
}

namespace {

void parse_bounds(const KeyValueFile& kv, ParamBounds& b) {
    auto read_pair = [&](const char* key, double& lo, double& hi) {
        auto v = kv.get("bounds", key);
        if (!v) return;
        auto f = split_list(*v);
        if (f.size() != 2) throw ConfigError(kv.origin() + ": bounds " + key + " needs 'lo, hi'");
        lo = parse_double(f[0], key);
        hi = parse_double(f[1], key);
        if (!(lo < hi)) throw ConfigError(kv.origin() + ": bounds " + key + " needs lo < hi");
    };
    read_pair("x", b.x_lo, b.x_hi);
    read_pair("y", b.y_lo, b.y_hi);
    read_pair("z", b.z_lo, b.z_hi);
    read_pair("voltage", b.v_lo, b.v_hi);
}

}  // namespace

RunConfig parse_run_config(const KeyValueFile& kv) {
    if (!kv.version_tag().empty() && kv.version_tag() != "emfi-config v1")
        throw ConfigError(kv.origin() + ": expected header 'emfi-config v1', got '" +
                          kv.version_tag() + "'");

    RunConfig rc;
    CampaignConfig& c = rc.campaign;
    const std::string phase = kv.get_or("campaign", "phase", "spot");
    if (phase == "spot")
        c.phase = Phase::Spot;
    else if (phase == "explore")
        c.phase = Phase::Explore;
    else
        throw ConfigError(kv.origin() + ": unknown phase '" + phase + "'");

    c.model = kv.get_or("campaign", "model", c.model);
    c.mode = mode_from_string(kv.get_or("campaign", "mode", "Sync"));
    c.probe = kv.get_or("campaign", "probe", c.probe);
    c.n_trials = static_cast<int>(kv.get_int("campaign", "n_trials", c.n_trials));
    c.n_images = static_cast<int>(kv.get_int("campaign", "n_images", c.n_images));
    c.watchdog_timeout_s = kv.get_double("campaign", "watchdog_timeout_s", c.watchdog_timeout_s);
    c.delay_s = kv.get_double("campaign", "delay_s", c.delay_s);
    c.width_ns = kv.get_double("campaign", "width_ns", c.width_ns);
    c.x_mm = kv.get_double("campaign", "x_mm", c.x_mm);
    c.y_mm = kv.get_double("campaign", "y_mm", c.y_mm);
    c.z_mm = kv.get_double("campaign", "z_mm", c.z_mm);
    c.voltage_v = kv.get_double("campaign", "voltage_v", c.voltage_v);
    c.master_seed = kv.get("campaign", "master_seed")
                        ? parse_u64(*kv.get("campaign", "master_seed"), "master_seed")
                        : c.master_seed;
    c.thresholds.theta_minor = kv.get_double("campaign", "theta_minor", c.thresholds.theta_minor);
    c.thresholds.theta_major = kv.get_double("campaign", "theta_major", c.thresholds.theta_major);
    c.golden_retries = static_cast<int>(kv.get_int("campaign", "golden_retries", c.golden_retries));

    const std::string sampler = kv.get_or("campaign", "sampler", "tpe");
    if (sampler == "tpe")
        c.sampler = SamplerKind::Tpe;
    else if (sampler == "uniform")
        c.sampler = SamplerKind::Uniform;
    else
        throw ConfigError(kv.origin() + ": unknown sampler '" + sampler + "'");
    if (auto v = kv.get("campaign", "constant_voltage"))
        c.constant_voltage = parse_double(*v, "constant_voltage");

    parse_bounds(kv, c.bounds);
    c.tpe.gamma = kv.get_double("tpe", "gamma", c.tpe.gamma);
    c.tpe.n_startup = static_cast<int>(kv.get_int("tpe", "n_startup", c.tpe.n_startup));
    c.tpe.n_candidates = static_cast<int>(kv.get_int("tpe", "n_candidates", c.tpe.n_candidates));

    MitigationConfig& m = rc.mitigation;
    m.watchdog.timeout_s = kv.get_double("mitigation", "watchdog_timeout_s", m.watchdog.timeout_s);
    m.reference.k_references =
        static_cast<int>(kv.get_int("mitigation", "reference_k", m.reference.k_references));
    m.reference.interval_inferences = static_cast<int>(
        kv.get_int("mitigation", "reference_interval", m.reference.interval_inferences));
    const std::string compare = kv.get_or("mitigation", "reference_compare", "top1");
    if (compare == "top1")
        m.reference.compare_mode = ReferenceCheckPolicy::CompareMode::Top1Label;
    else if (compare == "logit")
        m.reference.compare_mode = ReferenceCheckPolicy::CompareMode::LogitDistance;
    else
        throw ConfigError(kv.origin() + ": unknown reference_compare '" + compare + "'");
    m.reference.logit_threshold =
        kv.get_double("mitigation", "logit_threshold", m.reference.logit_threshold);
    m.reference.correlation =
        kv.get_double("mitigation", "reference_correlation", m.reference.correlation);
    m.redundancy.n_replicas =
        static_cast<int>(kv.get_int("mitigation", "replicas", m.redundancy.n_replicas));
    const std::string rule = kv.get_or("mitigation", "redundancy_rule",
                                       m.redundancy.n_replicas >= 3 ? "majority" : "disagreement");
    if (rule == "disagreement")
        m.redundancy.rule = RedundancyPolicy::Rule::DisagreementFlag;
    else if (rule == "majority")
        m.redundancy.rule = RedundancyPolicy::Rule::MajorityVote;
    else
        throw ConfigError(kv.origin() + ": unknown redundancy_rule '" + rule + "'");

    if (auto v = kv.get("baseline", "models"))
        for (auto& name : split_list(*v)) rc.baseline_models.push_back(name);

    rc.histogram_bins = static_cast<int>(kv.get_int("analysis", "histogram_bins", rc.histogram_bins));
    if (rc.histogram_bins < 1) throw ConfigError(kv.origin() + ": histogram_bins must be >= 1");

    return rc;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(KeyValueFile::parse_file(path));
}

}  // namespace emfi
