#pragma once

// Synthetic line/plane landmark scenes, loop-closure pairs built from them,
// and the per-trial pipeline used by the benchmark harness.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "graff/pipeline.hpp"

namespace graff {

/// Seed mixing for independent random streams.
std::uint64_t splitmix64(std::uint64_t x);

struct SceneConfig {
    int lines = 7;
    int planes = 23;
    /// Horizontal workspace half-width is extent / 2 (meters).
    double extent = 120.0;
    /// Target distribution of pairwise object (centroid) distances, meters.
    double target_mean = 27.0;
    double target_std = 16.0;
    /// Share of objects with a uniformly random orientation.
    double random_orientation_fraction = 0.2;
    /// Observed centroids are sampled on the object within this extent.
    double centroid_extent = 5.0;
    /// Wall normals snap to the four directions of a street grid (with a few
    /// degrees of jitter) instead of taking uniform azimuths.
    bool street_grid = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// A scan plus the per-object anchor point each object was generated
/// around. Anchors are used to sample segmentation-dependent centroids.
struct LandmarkScene {
    Scan scan;
    std::vector<Eigen::Vector3d> anchors;
};

LandmarkScene generate_scene(const SceneConfig &cfg);

/// Mean Euclidean distance between anchors over all unordered pairs.
double mean_pairwise_distance(const std::vector<Eigen::Vector3d> &points);

struct PairConfig {
    double baseline = 0.0;  ///< distance between the two sensor positions, meters
    double max_yaw_deg = 180.0;
    double max_roll_pitch_deg = 5.0;
    double overlap = 1.0;   ///< fraction of scene objects kept in the second scan
    int clutter = 0;        ///< unrelated objects added to each scan
    double noise_angle_rad = 0.0;
    double noise_offset_m = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LoopPair {
    Scan scan_i;
    Scan scan_j;
    /// Observed centroid of every object, aligned with the scans.
    std::vector<Eigen::Vector3d> centroids_i;
    std::vector<Eigen::Vector3d> centroids_j;
    /// Maps scan_i coordinates to scan_j coordinates.
    RigidTransform truth;
    std::vector<Candidate> ground_truth;
    /// Fewer than kMinimumMatches shared objects.
    bool degenerate = false;
};

/// Second scan: noisy, partially retained, cluttered and permuted copy of
/// the scene seen from a pose `baseline` meters away.
LoopPair make_loop_pair(const LandmarkScene &scene, const SceneConfig &scene_cfg,
                        const PairConfig &pcfg);

struct TrialParams {
    MatchParams match;
    VerificationThresholds thresholds;
    bool measure_time = true;
};

struct TrialResult {
    std::vector<Candidate> matches;
    std::size_t candidates = 0;
    std::size_t correct = 0;      ///< matches present in the ground truth
    double precision = 0.0;
    double recall = 0.0;
    double objective = 0.0;       ///< solver density, used for ranking
    bool estimated = false;       ///< a transform was produced
    std::optional<AlignmentError> error;  ///< empty when estimation failed
    bool accept = false;
    double duration_s = 0.0;
};

TrialResult run_trial(const LoopPair &pair, const TrialParams &params, DistanceFunctionId fn);

struct MetricsSummary {
    std::size_t trials = 0;
    std::size_t accepted = 0;
    double recall_at_full_precision = 0.0;
    /// Over accepted trials; NaN when none were accepted.
    double median_translation_m = 0.0;
    double median_rotation_deg = 0.0;
    double mean_duration_s = 0.0;
    double std_duration_s = 0.0;
};

/// Trials with an estimate are ranked by solver objective; recall at 100%
/// precision is the largest share of all trials that can be accepted by a
/// threshold on that ranking without admitting a rejected estimate.
/// Throws std::invalid_argument on empty input.
MetricsSummary compute_metrics(const std::vector<TrialResult> &results);

double median(std::vector<double> values);

}  // namespace graff
