#include "graff/scene_sim.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace graff {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;

// Orientation model.
constexpr double kPoleConeDeg = 10.0;
constexpr double kWallTiltDeg = 5.0;
constexpr double kWallAzimuthJitterDeg = 5.0;

using Rng = std::mt19937_64;

double uniform(Rng &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(Rng &rng, double sigma) {
    return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
}

Eigen::Vector3d random_unit(Rng &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = Eigen::Vector3d{n(rng), n(rng), n(rng)};
    } while (v.norm() < 1e-9);
    return v.normalized();
}

Eigen::Vector3d from_spherical(double azimuth, double elevation) {
    return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
            std::sin(elevation)};
}

Eigen::Matrix3d small_rotation(Rng &rng, double sigma) {
    if (!(sigma > 0.0)) {
        return Eigen::Matrix3d::Identity();
    }
    const Eigen::Vector3d axis = random_unit(rng);
    return Eigen::AngleAxisd(gaussian(rng, sigma), axis).toRotationMatrix();
}

struct SceneObject {
    GraffElement element;
    Eigen::Vector3d anchor;
};

// Horizontal spread for which the mean distance between two points drawn
// from an isotropic 2-D Gaussian equals `mean`: E|x - y| = s * sqrt(pi).
double horizontal_sigma(const SceneConfig &cfg) { return cfg.target_mean / std::sqrt(kPi); }

SceneObject sample_object(Rng &rng, const SceneConfig &cfg, double grid_azimuth, bool line) {
    const double half = 0.5 * cfg.extent;
    const double s = horizontal_sigma(cfg);
    Eigen::Vector3d anchor;
    do {
        anchor.x() = gaussian(rng, s);
        anchor.y() = gaussian(rng, s);
    } while (std::abs(anchor.x()) > half || std::abs(anchor.y()) > half);

    const bool random_orientation = uniform(rng, 0.0, 1.0) < cfg.random_orientation_fraction;
    if (line) {
        anchor.z() = uniform(rng, 0.5, 4.0);
        Eigen::Vector3d dir;
        if (random_orientation) {
            dir = random_unit(rng);
        } else {
            const double tilt = uniform(rng, 0.0, kPoleConeDeg) * kDegToRad;
            dir = from_spherical(uniform(rng, -kPi, kPi), 0.5 * kPi - tilt);
        }
        return {from_pd(LinePD{dir, anchor}), anchor};
    }
    anchor.z() = uniform(rng, 0.0, 8.0);
    Eigen::Vector3d normal;
    if (random_orientation) {
        normal = random_unit(rng);
    } else if (cfg.street_grid) {
        // Walls follow one of the four directions of a street grid.
        const int side = std::uniform_int_distribution<int>(0, 3)(rng);
        const double azimuth = grid_azimuth + side * 0.5 * kPi +
                               uniform(rng, -kWallAzimuthJitterDeg, kWallAzimuthJitterDeg) * kDegToRad;
        normal = from_spherical(azimuth, uniform(rng, -kWallTiltDeg, kWallTiltDeg) * kDegToRad);
    } else {
        const double azimuth = uniform(rng, -kPi, kPi);
        normal = from_spherical(azimuth, uniform(rng, -kWallTiltDeg, kWallTiltDeg) * kDegToRad);
    }
    return {from_hesse(PlaneHesse{normal, normal.dot(anchor)}), anchor};
}

Eigen::Vector3d sample_centroid(Rng &rng, const GraffElement &el, const Eigen::Vector3d &anchor,
                                double extent) {
    Eigen::Vector3d c = anchor;
    for (Eigen::Index k = 0; k < el.dim(); ++k) {
        c += el.basis().col(k) * uniform(rng, -0.5 * extent, 0.5 * extent);
    }
    return c;
}

std::uint64_t mix(std::uint64_t x) { return splitmix64(x); }

double grid_azimuth_for(std::uint64_t seed) {
    Rng rng(mix(seed ^ 0x67726964617a6dULL));
    return uniform(rng, -kPi, kPi);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void SceneConfig::validate() const {
    if (lines < 0 || planes < 0 || !(extent > 0.0) || !(target_mean > 0.0) ||
        !(centroid_extent >= 0.0) || random_orientation_fraction < 0.0 ||
        random_orientation_fraction > 1.0) {
        throw InvalidInput("invalid scene configuration");
    }
}

void PairConfig::validate() const {
    if (!(overlap >= 0.0 && overlap <= 1.0) || baseline < 0.0 || clutter < 0 ||
        noise_angle_rad < 0.0 || noise_offset_m < 0.0 || max_yaw_deg < 0.0 ||
        max_roll_pitch_deg < 0.0) {
        throw InvalidInput("invalid pair configuration");
    }
}

LandmarkScene generate_scene(const SceneConfig &cfg) {
    cfg.validate();
    Rng rng(mix(cfg.seed));
    const double grid = grid_azimuth_for(cfg.seed);
    LandmarkScene scene;
    scene.scan.id = "scene-" + std::to_string(cfg.seed);
    for (int i = 0; i < cfg.lines + cfg.planes; ++i) {
        SceneObject obj = sample_object(rng, cfg, grid, i < cfg.lines);
        scene.scan.objects.push_back(obj.element);
        scene.anchors.push_back(obj.anchor);
    }
    return scene;
}

double mean_pairwise_distance(const std::vector<Eigen::Vector3d> &points) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            total += (points[i] - points[j]).norm();
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

LoopPair make_loop_pair(const LandmarkScene &scene, const SceneConfig &scene_cfg,
                        const PairConfig &pcfg) {
    pcfg.validate();
    scene_cfg.validate();
    Rng rng(mix(pcfg.seed ^ mix(scene_cfg.seed)));
    const double grid = grid_azimuth_for(scene_cfg.seed);

    // Pose of sensor j in the frame of scan i.
    const double yaw = uniform(rng, -pcfg.max_yaw_deg, pcfg.max_yaw_deg) * kDegToRad;
    const double roll = uniform(rng, -pcfg.max_roll_pitch_deg, pcfg.max_roll_pitch_deg) * kDegToRad;
    const double pitch = uniform(rng, -pcfg.max_roll_pitch_deg, pcfg.max_roll_pitch_deg) * kDegToRad;
    const Eigen::Matrix3d pose_R = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                                    Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                                    Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                                       .toRotationMatrix();
    const double heading = uniform(rng, -kPi, kPi);
    const Eigen::Vector3d pose_t =
        pcfg.baseline * Eigen::Vector3d(std::cos(heading), std::sin(heading), 0.0);

    LoopPair pair;
    pair.truth = RigidTransform{pose_R, pose_t}.inverse();
    pair.scan_i.id = scene.scan.id + "-i";
    pair.scan_j.id = scene.scan.id + "-j";

    const std::size_t n = scene.scan.size();
    for (std::size_t k = 0; k < n; ++k) {
        pair.scan_i.objects.push_back(scene.scan.objects[k]);
        pair.centroids_i.push_back(
            sample_centroid(rng, scene.scan.objects[k], scene.anchors[k], scene_cfg.centroid_extent));
    }

    // Retained subset of the scene.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto kept = static_cast<std::size_t>(std::lround(pcfg.overlap * static_cast<double>(n)));
    order.resize(std::min(kept, n));
    std::sort(order.begin(), order.end());

    struct Observed {
        GraffElement element;
        Eigen::Vector3d centroid;
        std::optional<std::size_t> source;
    };
    std::vector<Observed> observed;
    for (std::size_t k : order) {
        const GraffElement &el = scene.scan.objects[k];
        const Eigen::Matrix3d tilt = small_rotation(rng, pcfg.noise_angle_rad);
        const Eigen::Vector3d offset{gaussian(rng, pcfg.noise_offset_m),
                                     gaussian(rng, pcfg.noise_offset_m),
                                     gaussian(rng, pcfg.noise_offset_m)};
        const Eigen::Vector3d anchor = scene.anchors[k] + offset;
        const GraffElement noisy = GraffElement::from_basis(tilt * el.basis(), anchor);
        const Eigen::Vector3d centroid =
            sample_centroid(rng, noisy, anchor, scene_cfg.centroid_extent);
        observed.push_back({noisy.transformed(pair.truth), pair.truth.apply(centroid), k});
    }

    // Clutter: objects from the same generator that exist in only one scan.
    for (int c = 0; c < pcfg.clutter; ++c) {
        const bool line = uniform(rng, 0.0, 1.0) * (scene_cfg.lines + scene_cfg.planes) <
                          scene_cfg.lines;
        SceneObject obj = sample_object(rng, scene_cfg, grid, line);
        pair.scan_i.objects.push_back(obj.element);
        pair.centroids_i.push_back(
            sample_centroid(rng, obj.element, obj.anchor, scene_cfg.centroid_extent));
    }
    for (int c = 0; c < pcfg.clutter; ++c) {
        const bool line = uniform(rng, 0.0, 1.0) * (scene_cfg.lines + scene_cfg.planes) <
                          scene_cfg.lines;
        SceneObject obj = sample_object(rng, scene_cfg, grid, line);
        obj.anchor.head<2>() += pose_t.head<2>();
        const GraffElement el = obj.element.translated(Eigen::Vector3d(pose_t.x(), pose_t.y(), 0.0));
        const Eigen::Vector3d centroid =
            sample_centroid(rng, el, obj.anchor, scene_cfg.centroid_extent);
        observed.push_back({el.transformed(pair.truth), pair.truth.apply(centroid), std::nullopt});
    }

    std::vector<std::size_t> perm(observed.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t slot = 0; slot < perm.size(); ++slot) {
        const Observed &o = observed[perm[slot]];
        pair.scan_j.objects.push_back(o.element);
        pair.centroids_j.push_back(o.centroid);
        if (o.source) {
            pair.ground_truth.push_back({*o.source, slot});
        }
    }
    std::sort(pair.ground_truth.begin(), pair.ground_truth.end());
    pair.degenerate = pair.ground_truth.size() < kMinimumMatches;
    return pair;
}

TrialResult run_trial(const LoopPair &pair, const TrialParams &params, DistanceFunctionId fn) {
    const auto start = std::chrono::steady_clock::now();
    const MatchOutcome outcome = match_scans({pair.scan_i, pair.centroids_i},
                                             {pair.scan_j, pair.centroids_j}, params.match, fn);

    TrialResult result;
    result.candidates = outcome.candidates;
    result.objective = outcome.selection.objective;
    result.matches = outcome.matches;
    for (const Candidate &c : result.matches) {
        if (std::binary_search(pair.ground_truth.begin(), pair.ground_truth.end(), c)) {
            ++result.correct;
        }
    }
    if (!result.matches.empty()) {
        result.precision =
            static_cast<double>(result.correct) / static_cast<double>(result.matches.size());
    }
    if (!pair.ground_truth.empty()) {
        result.recall =
            static_cast<double>(result.correct) / static_cast<double>(pair.ground_truth.size());
    }
    if (outcome.estimate) {
        result.estimated = true;
        result.error = alignment_error(*outcome.estimate, pair.truth);
        result.accept = verify(*result.error, params.thresholds);
    }
    if (params.measure_time) {
        result.duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

MetricsSummary compute_metrics(const std::vector<TrialResult> &results) {
    if (results.empty()) {
        throw std::invalid_argument("compute_metrics: no trials");
    }
    MetricsSummary s;
    s.trials = results.size();

    std::vector<const TrialResult *> ranked;
    std::vector<double> translation, rotation, durations;
    for (const TrialResult &r : results) {
        durations.push_back(r.duration_s);
        if (r.estimated) {
            ranked.push_back(&r);
        }
        if (r.accept && r.error) {
            ++s.accepted;
            translation.push_back(r.error->translation_m);
            rotation.push_back(r.error->rotation_deg);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const TrialResult *a, const TrialResult *b) {
        return a->objective > b->objective;
    });
    // Walk the ranking in groups of equal score; a threshold cannot split a
    // group, so a rejected estimate anywhere in it ends the scan.
    std::size_t true_accepts = 0;
    for (std::size_t i = 0; i < ranked.size();) {
        std::size_t j = i;
        std::size_t group_accepts = 0;
        bool clean = true;
        while (j < ranked.size() && ranked[j]->objective == ranked[i]->objective) {
            if (ranked[j]->accept) {
                ++group_accepts;
            } else {
                clean = false;
            }
            ++j;
        }
        if (!clean) {
            break;
        }
        true_accepts += group_accepts;
        i = j;
    }
    s.recall_at_full_precision = static_cast<double>(true_accepts) / static_cast<double>(s.trials);
    s.median_translation_m = median(translation);
    s.median_rotation_deg = median(rotation);

    const double n = static_cast<double>(durations.size());
    s.mean_duration_s = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
    double var = 0.0;
    for (double d : durations) {
        var += (d - s.mean_duration_s) * (d - s.mean_duration_s);
    }
    s.std_duration_s = durations.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return s;
}

}  // namespace graff
