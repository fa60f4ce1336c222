#pragma once

// Benchmark campaigns: tiers x trials x distance functions over synthetic
// loop-closure pairs, CSV records and a summary document.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graff/scene_sim.hpp"

namespace graff {

struct TierSpec {
    std::string name;
    double baseline_m = 0.0;
    double overlap = 1.0;
};

/// Built-in tiers: easy (0 m, 0.9), medium (8 m, 0.7), hard (16 m, 0.5).
std::vector<TierSpec> default_tiers();

struct CampaignConfig {
    std::uint64_t seed = 0;
    int trials = 100;  ///< per tier
    std::vector<TierSpec> tiers = default_tiers();
    std::vector<DistanceFunctionId> distance_fns{DistanceFunctionId::GraffShifted};
    SceneConfig scene;
    /// Template for every pair; baseline, overlap and seed come from the tier
    /// and trial.
    PairConfig pair;
    TrialParams params;

    /// 0.5 degrees and 5 cm of noise, 5 clutter objects per scan.
    static CampaignConfig standard();
    void validate() const;
};

/// Parses the key = value campaign format (see README). `seed` is required;
/// unknown or repeated keys are errors. Throws InvalidInput with the line
/// number.
CampaignConfig parse_campaign_config(std::string_view text, std::string_view origin = "<config>");
CampaignConfig load_campaign_config(const std::filesystem::path &path);

struct TrialRecord {
    std::uint64_t seed = 0;  ///< per-trial seed, shared by all distance functions
    std::size_t tier = 0;    ///< index into CampaignConfig::tiers
    DistanceFunctionId fn = DistanceFunctionId::GraffShifted;
    TrialResult result;
};

/// Seed of trial `index` (counted across tiers) of a campaign.
std::uint64_t trial_seed(std::uint64_t campaign_seed, std::uint64_t index);

/// Runs every (tier, trial) unit on up to `workers` threads. Records are
/// ordered by tier, trial, then distance function, whatever the worker
/// count. Throws InvalidInput when workers < 1.
std::vector<TrialRecord> run_campaign(const CampaignConfig &cfg, int workers = 1);

/// Header plus one row per record. Numbers use 6 decimals. Trials without
/// an estimate get "failed" in both error columns; duration_s is NA unless
/// the campaign measured time.
std::string records_csv(const CampaignConfig &cfg, const std::vector<TrialRecord> &records);

struct SummaryRow {
    std::string tier;  ///< "all" for per-distance-function rows
    DistanceFunctionId fn = DistanceFunctionId::GraffShifted;
    MetricsSummary metrics;
};

struct CampaignSummary {
    std::vector<SummaryRow> by_tier;
    /// recall_at_full_precision is the mean of the per-tier values; the
    /// other fields are pooled over all tiers.
    std::vector<SummaryRow> by_distance_fn;
};

CampaignSummary summarize(const CampaignConfig &cfg, const std::vector<TrialRecord> &records);

/// Timing fields are included only when the campaign measured time.
nlohmann::json summary_json(const CampaignConfig &cfg, const CampaignSummary &summary);

}  // namespace graff
