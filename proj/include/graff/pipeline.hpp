#pragma once

// Scan-to-scan matching: consistency graph, densest consistent set, and the
// closed-form transform, under a selectable internal distance function.

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graff/clique_solver.hpp"
#include "graff/consistency.hpp"
#include "graff/registration.hpp"

namespace graff {

enum class DistanceFunctionId {
    GraffShifted,        ///< shifted affine Grassmannian distance
    GrOnly,              ///< principal angles of the direction subspaces only
    EuclideanCentroid,   ///< distance between observed centroids
    GrTimesEuclidean,    ///< both of the above, two gated kernels
    NormalDotDirection,  ///< |<n or a, n or a>|
};

inline constexpr std::array<DistanceFunctionId, 5> kAllDistanceFunctions{
    DistanceFunctionId::GraffShifted, DistanceFunctionId::GrOnly,
    DistanceFunctionId::EuclideanCentroid, DistanceFunctionId::GrTimesEuclidean,
    DistanceFunctionId::NormalDotDirection};

std::string_view to_string(DistanceFunctionId id);
std::optional<DistanceFunctionId> parse_distance_function(std::string_view name);
bool needs_centroids(DistanceFunctionId id);

struct MatchParams {
    ConsistencyParams consistency;
    /// Gate and kernel width for centroid distances (meters): the angular
    /// defaults scaled by the default rho.
    double centroid_epsilon = 8.0;
    double centroid_sigma = 0.8;
    SolverParams solver;
};

/// Objects of one scan together with their observed centroids. Centroids
/// may be empty unless a centroid-based distance function is used.
struct ObservedScan {
    const Scan &scan;
    const std::vector<Eigen::Vector3d> &centroids;
};

/// Internal-distance channels of both scans for one distance function.
/// Throws InvalidInput when centroids are needed but missing.
std::vector<DistanceChannel> distance_channels(const ObservedScan &scan_i,
                                               const ObservedScan &scan_j,
                                               const MatchParams &params, DistanceFunctionId fn);

struct MatchOutcome {
    std::size_t candidates = 0;
    Selection selection;
    std::vector<Candidate> matches;
    MatchSet match_set;
    std::optional<RigidTransform> estimate;
    /// Why no estimate was produced.
    std::string failure;
};

MatchOutcome match_scans(const ObservedScan &scan_i, const ObservedScan &scan_j,
                         const MatchParams &params, DistanceFunctionId fn);

}  // namespace graff
