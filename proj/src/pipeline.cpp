#include "graff/pipeline.hpp"

#include <cmath>

namespace graff {

std::string_view to_string(DistanceFunctionId id) {
    switch (id) {
        case DistanceFunctionId::GraffShifted: return "graff_shifted";
        case DistanceFunctionId::GrOnly: return "gr_only";
        case DistanceFunctionId::EuclideanCentroid: return "euclidean_centroid";
        case DistanceFunctionId::GrTimesEuclidean: return "gr_times_euclidean";
        case DistanceFunctionId::NormalDotDirection: return "normal_dot_direction";
    }
    return "unknown";
}

std::optional<DistanceFunctionId> parse_distance_function(std::string_view name) {
    for (DistanceFunctionId id : kAllDistanceFunctions) {
        if (to_string(id) == name) {
            return id;
        }
    }
    return std::nullopt;
}

bool needs_centroids(DistanceFunctionId id) {
    return id == DistanceFunctionId::EuclideanCentroid ||
           id == DistanceFunctionId::GrTimesEuclidean;
}

namespace {

template <typename F>
Eigen::MatrixXd pairwise(std::size_t n, F &&distance) {
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index p = 0; p < size; ++p) {
        for (Eigen::Index q = p + 1; q < size; ++q) {
            D(p, q) = D(q, p) = distance(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
        }
    }
    return D;
}

Eigen::MatrixXd gr_matrix(const Scan &scan) {
    return pairwise(scan.size(), [&](std::size_t p, std::size_t q) {
        return gr_distance(scan.objects[p], scan.objects[q]);
    });
}

Eigen::MatrixXd centroid_matrix(const ObservedScan &s) {
    if (s.centroids.size() != s.scan.size()) {
        throw InvalidInput("scan '" + s.scan.id + "' lacks a centroid for every object");
    }
    const auto &c = s.centroids;
    return pairwise(c.size(), [&](std::size_t p, std::size_t q) { return (c[p] - c[q]).norm(); });
}

Eigen::MatrixXd dot_matrix(const Scan &scan) {
    return pairwise(scan.size(), [&](std::size_t p, std::size_t q) {
        return std::abs(characteristic_direction(scan.objects[p])
                            .dot(characteristic_direction(scan.objects[q])));
    });
}

}  // namespace

std::vector<DistanceChannel> distance_channels(const ObservedScan &scan_i,
                                               const ObservedScan &scan_j,
                                               const MatchParams &params, DistanceFunctionId fn) {
    const ConsistencyParams &cp = params.consistency;
    std::vector<DistanceChannel> channels;
    switch (fn) {
        case DistanceFunctionId::GraffShifted:
            channels.push_back({internal_distances(scan_i.scan, cp.rho),
                                internal_distances(scan_j.scan, cp.rho), cp.epsilon, cp.sigma});
            break;
        case DistanceFunctionId::GrOnly:
            channels.push_back(
                {gr_matrix(scan_i.scan), gr_matrix(scan_j.scan), cp.epsilon, cp.sigma});
            break;
        case DistanceFunctionId::EuclideanCentroid:
            channels.push_back({centroid_matrix(scan_i), centroid_matrix(scan_j),
                                params.centroid_epsilon, params.centroid_sigma});
            break;
        case DistanceFunctionId::GrTimesEuclidean:
            channels.push_back(
                {gr_matrix(scan_i.scan), gr_matrix(scan_j.scan), cp.epsilon, cp.sigma});
            channels.push_back({centroid_matrix(scan_i), centroid_matrix(scan_j),
                                params.centroid_epsilon, params.centroid_sigma});
            break;
        case DistanceFunctionId::NormalDotDirection:
            channels.push_back(
                {dot_matrix(scan_i.scan), dot_matrix(scan_j.scan), cp.epsilon, cp.sigma});
            break;
    }
    return channels;
}

MatchOutcome match_scans(const ObservedScan &scan_i, const ObservedScan &scan_j,
                         const MatchParams &params, DistanceFunctionId fn) {
    params.consistency.validate();
    if (needs_centroids(fn) && !(params.centroid_epsilon > 0.0 && params.centroid_sigma > 0.0)) {
        throw InvalidInput("centroid gate and kernel width must be positive");
    }
    const std::vector<DistanceChannel> channels = distance_channels(scan_i, scan_j, params, fn);
    const AffinityMatrix affinity = build_affinity(
        generate_candidates(scan_i.scan, scan_j.scan, params.consistency.max_candidates),
        channels, params.consistency.one_to_one);

    MatchOutcome out;
    out.candidates = affinity.size();
    out.selection = solve_densest(affinity.M, params.solver);
    for (std::size_t idx : out.selection.indices) {
        const Candidate &c = affinity.candidates[idx];
        out.matches.push_back(c);
        const GraffElement &src = scan_i.scan.objects[c.a];
        const GraffElement &tgt = scan_j.scan.objects[c.b];
        if (src.is_line()) {
            out.match_set.line_pairs.emplace_back(to_pd(src), to_pd(tgt));
        } else {
            out.match_set.plane_pairs.emplace_back(to_hesse(src), to_hesse(tgt));
        }
    }
    try {
        out.estimate = estimate_transform(out.match_set);
    } catch (const InsufficientMatches &e) {
        out.failure = e.what();
    } catch (const DegenerateConfiguration &e) {
        out.failure = e.what();
    }
    return out;
}

}  // namespace graff
