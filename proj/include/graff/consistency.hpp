#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graff/graff_core.hpp"

namespace graff {

/// Objects extracted from one scan. Indices are stable.
struct Scan {
    std::string id;
    std::vector<GraffElement> objects;

    std::size_t size() const { return objects.size(); }
};

/// Putative match of scan_i.objects[a] with scan_j.objects[b].
struct Candidate {
    std::size_t a = 0;
    std::size_t b = 0;

    friend bool operator==(const Candidate &, const Candidate &) = default;
    friend auto operator<=>(const Candidate &, const Candidate &) = default;
};

struct ConsistencyParams {
    double epsilon = 0.2;  ///< gate, radians; pairs with c >= epsilon get weight 0
    double sigma = 0.02;   ///< kernel width, radians
    double rho = 40.0;     ///< displacement scaling, meters
    /// Keep only the first N candidates in lexicographic order.
    std::optional<std::size_t> max_candidates;
    /// Candidates that share an object in either scan get weight 0, so a
    /// selection never maps one object to two.
    bool one_to_one = true;

    void validate() const;
};

/// Symmetric m x m weights in [0, 1] with a unit diagonal; row p belongs to
/// candidates[p].
struct AffinityMatrix {
    Eigen::MatrixXd M;
    std::vector<Candidate> candidates;

    std::size_t size() const { return candidates.size(); }
};

/// Every same-dimension pair (a, b), ordered by (a, b).
std::vector<Candidate> generate_candidates(const Scan &scan_i, const Scan &scan_j,
                                           std::optional<std::size_t> max_candidates = {});

/// Shifted distance between two objects of one scan, independent of object
/// order: for a line/plane pair the line is the shifted-to-origin element,
/// for two lines or two planes the mean over both orders.
double internal_distance(const GraffElement &x, const GraffElement &y, double rho);

/// All internal distances of one scan (n x n, symmetric, zero diagonal).
Eigen::MatrixXd internal_distances(const Scan &scan, double rho);

double consistency_score(const Candidate &u1, const Candidate &u2, const Scan &scan_i,
                         const Scan &scan_j, const ConsistencyParams &params);

/// exp(-c^2 / (2 sigma^2)) for c < epsilon, otherwise 0.
double weight(double c, double epsilon, double sigma);
inline double weight(double c, const ConsistencyParams &params) {
    return weight(c, params.epsilon, params.sigma);
}

/// Precomputed internal distances of both scans under one distance
/// function, with its own gate and kernel width.
struct DistanceChannel {
    Eigen::MatrixXd within_i;
    Eigen::MatrixXd within_j;
    double epsilon = 0.2;
    double sigma = 0.02;
};

/// Affinity from one or more distance channels. An entry is zero if any
/// channel fails its gate (or, with `one_to_one`, if the two candidates
/// share an object), otherwise the product of the channel kernels.
AffinityMatrix build_affinity(std::vector<Candidate> candidates,
                              std::span<const DistanceChannel> channels, bool one_to_one = true);

/// Consistency graph under the shifted affine Grassmannian distance.
AffinityMatrix build_affinity(const Scan &scan_i, const Scan &scan_j,
                              const ConsistencyParams &params);

}  // namespace graff
