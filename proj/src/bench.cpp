#include "graff/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "graff/scan_io.hpp"

namespace graff {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string &value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

class ConfigReader {
public:
    ConfigReader(std::map<std::string, Entry> entries, std::string origin)
        : entries_(std::move(entries)), origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string &key, const std::string &message) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw InvalidInput(fmt::format("{}: {}", origin_, message));
        }
        throw InvalidInput(fmt::format("{}:{}: {}: {}", origin_, it->second.line, key, message));
    }

    bool has(const std::string &key) const { return entries_.count(key) != 0; }

    const std::string &raw(const std::string &key) {
        used_.push_back(key);
        return entries_.at(key).value;
    }

    void real(const std::string &key, double &out) {
        if (!has(key)) {
            return;
        }
        const std::string &v = raw(key);
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
            fail(key, fmt::format("expected a number, got '{}'", v));
        }
        out = x;
    }

    template <typename Int>
    void integer(const std::string &key, Int &out) {
        if (!has(key)) {
            return;
        }
        const std::string &v = raw(key);
        Int x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || ptr != v.data() + v.size()) {
            fail(key, fmt::format("expected an integer, got '{}'", v));
        }
        out = x;
    }

    void boolean(const std::string &key, bool &out) {
        if (!has(key)) {
            return;
        }
        const std::string &v = raw(key);
        if (v == "true" || v == "1") {
            out = true;
        } else if (v == "false" || v == "0") {
            out = false;
        } else {
            fail(key, fmt::format("expected true or false, got '{}'", v));
        }
    }

    void reject_unused() const {
        for (const auto &[key, entry] : entries_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                fail(key, "unknown key");
            }
        }
    }

private:
    std::map<std::string, Entry> entries_;
    std::vector<std::string> used_;
    std::string origin_;
};

std::string fixed(double value) {
    if (!std::isfinite(value)) {
        return "NA";
    }
    std::string s = fmt::format("{:.6f}", value);
    return s == "-0.000000" ? "0.000000" : s;
}

json number_or_null(double value) { return std::isfinite(value) ? json(rounded(value)) : json(); }

json row_json(const SummaryRow &row, bool timing, bool with_tier) {
    json out;
    if (with_tier) {
        out["tier"] = row.tier;
    }
    out["distance_fn"] = std::string(to_string(row.fn));
    out["trials"] = row.metrics.trials;
    out["accepted"] = row.metrics.accepted;
    out["recall_at_100p"] = number_or_null(row.metrics.recall_at_full_precision);
    out["median_translation_m"] = number_or_null(row.metrics.median_translation_m);
    out["median_rotation_deg"] = number_or_null(row.metrics.median_rotation_deg);
    if (timing) {
        out["mean_duration_s"] = number_or_null(row.metrics.mean_duration_s);
        out["std_duration_s"] = number_or_null(row.metrics.std_duration_s);
    }
    return out;
}

}  // namespace

std::vector<TierSpec> default_tiers() {
    return {{"easy", 0.0, 0.9}, {"medium", 8.0, 0.7}, {"hard", 16.0, 0.5}};
}

CampaignConfig CampaignConfig::standard() {
    CampaignConfig cfg;
    cfg.pair.clutter = 5;
    cfg.pair.noise_angle_rad = 0.5 * kPi / 180.0;
    cfg.pair.noise_offset_m = 0.05;
    cfg.params.measure_time = false;
    return cfg;
}

void CampaignConfig::validate() const {
    if (trials < 1) {
        throw InvalidInput("trials must be at least 1");
    }
    if (tiers.empty()) {
        throw InvalidInput("at least one tier is required");
    }
    if (distance_fns.empty()) {
        throw InvalidInput("at least one distance function is required");
    }
    for (const TierSpec &t : tiers) {
        if (!(t.baseline_m >= 0.0) || !(t.overlap >= 0.0 && t.overlap <= 1.0)) {
            throw InvalidInput("tier '" + t.name + "': invalid baseline or overlap");
        }
    }
    scene.validate();
    pair.validate();
    params.match.consistency.validate();
    params.match.solver.validate();
    if (!(params.match.centroid_epsilon > 0.0) || !(params.match.centroid_sigma > 0.0)) {
        throw InvalidInput("centroid gate and kernel width must be positive");
    }
}

CampaignConfig parse_campaign_config(std::string_view text, std::string_view origin) {
    std::map<std::string, Entry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput(fmt::format("{}:{}: expected key = value", origin, number));
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InvalidInput(fmt::format("{}:{}: empty key or value", origin, number));
        }
        if (!entries.emplace(key, Entry{value, number}).second) {
            throw InvalidInput(fmt::format("{}:{}: duplicate key '{}'", origin, number, key));
        }
    }

    ConfigReader r(std::move(entries), std::string(origin));
    CampaignConfig cfg = CampaignConfig::standard();
    if (!r.has("seed")) {
        r.fail("seed", "missing required key 'seed'");
    }
    r.integer("seed", cfg.seed);
    r.integer("trials", cfg.trials);

    if (r.has("tiers")) {
        const std::vector<TierSpec> builtin = default_tiers();
        cfg.tiers.clear();
        for (const std::string &name : split_list(r.raw("tiers"))) {
            TierSpec tier{name, 0.0, 1.0};
            const auto known = std::find_if(builtin.begin(), builtin.end(),
                                            [&](const TierSpec &t) { return t.name == name; });
            const std::string prefix = "tier." + name + ".";
            if (known != builtin.end()) {
                tier = *known;
            } else if (!r.has(prefix + "baseline_m") || !r.has(prefix + "overlap")) {
                r.fail("tiers", "custom tier '" + name + "' needs " + prefix + "baseline_m and " +
                                    prefix + "overlap");
            }
            cfg.tiers.push_back(tier);
        }
        if (cfg.tiers.empty()) {
            r.fail("tiers", "empty tier list");
        }
    }
    for (TierSpec &tier : cfg.tiers) {
        r.real("tier." + tier.name + ".baseline_m", tier.baseline_m);
        r.real("tier." + tier.name + ".overlap", tier.overlap);
    }

    if (r.has("distance_fns")) {
        cfg.distance_fns.clear();
        for (const std::string &name : split_list(r.raw("distance_fns"))) {
            const auto id = parse_distance_function(name);
            if (!id) {
                r.fail("distance_fns", "unknown distance function '" + name + "'");
            }
            cfg.distance_fns.push_back(*id);
        }
    }

    r.integer("lines", cfg.scene.lines);
    r.integer("planes", cfg.scene.planes);
    r.real("extent_m", cfg.scene.extent);
    r.boolean("street_grid", cfg.scene.street_grid);
    r.real("centroid_extent_m", cfg.scene.centroid_extent);
    r.integer("clutter", cfg.pair.clutter);
    double noise_deg = cfg.pair.noise_angle_rad * 180.0 / kPi;
    r.real("noise_angle_deg", noise_deg);
    cfg.pair.noise_angle_rad = noise_deg * kPi / 180.0;
    r.real("noise_offset_m", cfg.pair.noise_offset_m);
    r.real("max_yaw_deg", cfg.pair.max_yaw_deg);
    r.real("max_roll_pitch_deg", cfg.pair.max_roll_pitch_deg);

    r.real("rho", cfg.params.match.consistency.rho);
    r.real("epsilon", cfg.params.match.consistency.epsilon);
    r.real("sigma", cfg.params.match.consistency.sigma);
    r.real("centroid_epsilon", cfg.params.match.centroid_epsilon);
    r.real("centroid_sigma", cfg.params.match.centroid_sigma);
    r.real("max_rotation_deg", cfg.params.thresholds.max_rotation_deg);
    r.real("max_translation_m", cfg.params.thresholds.max_translation_m);
    r.boolean("timing", cfg.params.measure_time);

    r.reject_unused();
    try {
        cfg.validate();
    } catch (const InvalidInput &e) {
        throw InvalidInput(fmt::format("{}: {}", origin, e.what()));
    }
    return cfg;
}

CampaignConfig load_campaign_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput(fmt::format("{}: cannot open file", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_campaign_config(buffer.str(), path.string());
}

std::uint64_t trial_seed(std::uint64_t campaign_seed, std::uint64_t index) {
    return splitmix64(splitmix64(campaign_seed) ^ splitmix64(index + 0x5eedULL));
}

std::vector<TrialRecord> run_campaign(const CampaignConfig &cfg, int workers) {
    cfg.validate();
    if (workers < 1) {
        throw InvalidInput("workers must be at least 1");
    }
    const std::size_t trials = static_cast<std::size_t>(cfg.trials);
    const std::size_t units = cfg.tiers.size() * trials;
    const std::size_t per_unit = cfg.distance_fns.size();
    std::vector<TrialRecord> records(units * per_unit);

    auto run_unit = [&](std::size_t unit) {
        const std::size_t tier = unit / trials;
        const std::uint64_t seed = trial_seed(cfg.seed, unit);
        SceneConfig scene_cfg = cfg.scene;
        scene_cfg.seed = seed;
        const LandmarkScene scene = generate_scene(scene_cfg);
        PairConfig pcfg = cfg.pair;
        pcfg.baseline = cfg.tiers[tier].baseline_m;
        pcfg.overlap = cfg.tiers[tier].overlap;
        pcfg.seed = splitmix64(seed);
        const LoopPair pair = make_loop_pair(scene, scene_cfg, pcfg);
        for (std::size_t f = 0; f < per_unit; ++f) {
            TrialRecord &rec = records[unit * per_unit + f];
            rec.seed = seed;
            rec.tier = tier;
            rec.fn = cfg.distance_fns[f];
            rec.result = run_trial(pair, cfg.params, rec.fn);
        }
    };

    const std::size_t threads =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), units);
    if (threads <= 1) {
        for (std::size_t u = 0; u < units; ++u) {
            run_unit(u);
        }
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t u = next++; u < units && !failed; u = next++) {
                try {
                    run_unit(u);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    for (std::thread &th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return records;
}

std::string records_csv(const CampaignConfig &cfg, const std::vector<TrialRecord> &records) {
    std::string out =
        "seed,tier,distance_fn,m,inliers_found,precision,recall,rot_err_deg,trans_err_m,accept,"
        "duration_s\n";
    for (const TrialRecord &rec : records) {
        const TrialResult &r = rec.result;
        const std::string rot = r.error ? fixed(r.error->rotation_deg) : "failed";
        const std::string trans = r.error ? fixed(r.error->translation_m) : "failed";
        const std::string duration = cfg.params.measure_time ? fixed(r.duration_s) : "NA";
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", rec.seed,
                           cfg.tiers.at(rec.tier).name, to_string(rec.fn), r.candidates,
                           r.matches.size(), fixed(r.precision), fixed(r.recall), rot, trans,
                           r.accept ? 1 : 0, duration);
    }
    return out;
}

CampaignSummary summarize(const CampaignConfig &cfg, const std::vector<TrialRecord> &records) {
    CampaignSummary out;
    for (DistanceFunctionId fn : cfg.distance_fns) {
        std::vector<TrialResult> pooled;
        double recall_sum = 0.0;
        std::size_t tiers_seen = 0;
        for (std::size_t t = 0; t < cfg.tiers.size(); ++t) {
            std::vector<TrialResult> results;
            for (const TrialRecord &rec : records) {
                if (rec.fn == fn && rec.tier == t) {
                    results.push_back(rec.result);
                }
            }
            if (results.empty()) {
                continue;
            }
            pooled.insert(pooled.end(), results.begin(), results.end());
            SummaryRow row{cfg.tiers[t].name, fn, compute_metrics(results)};
            recall_sum += row.metrics.recall_at_full_precision;
            ++tiers_seen;
            out.by_tier.push_back(std::move(row));
        }
        if (pooled.empty()) {
            continue;
        }
        SummaryRow all{"all", fn, compute_metrics(pooled)};
        all.metrics.recall_at_full_precision = recall_sum / static_cast<double>(tiers_seen);
        out.by_distance_fn.push_back(std::move(all));
    }
    return out;
}

json summary_json(const CampaignConfig &cfg, const CampaignSummary &summary) {
    const bool timing = cfg.params.measure_time;
    json tiers = json::array();
    for (const TierSpec &t : cfg.tiers) {
        tiers.push_back({{"name", t.name},
                         {"baseline_m", rounded(t.baseline_m)},
                         {"overlap", rounded(t.overlap)}});
    }
    json by_tier = json::array();
    for (const SummaryRow &row : summary.by_tier) {
        by_tier.push_back(row_json(row, timing, true));
    }
    json by_fn = json::array();
    for (const SummaryRow &row : summary.by_distance_fn) {
        by_fn.push_back(row_json(row, timing, false));
    }
    json out;
    out["seed"] = cfg.seed;
    out["trials_per_tier"] = cfg.trials;
    out["tiers"] = tiers;
    out["timing"] = timing;
    out["by_tier"] = by_tier;
    out["by_distance_fn"] = by_fn;
    return out;
}

}  // namespace graff
