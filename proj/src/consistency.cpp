#include "graff/consistency.hpp"

#include <cmath>

namespace graff {

void ConsistencyParams::validate() const {
    if (!(epsilon > 0.0) || !(sigma > 0.0) || !(rho > 0.0)) {
        throw InvalidInput("consistency parameters must be positive");
    }
}

std::vector<Candidate> generate_candidates(const Scan &scan_i, const Scan &scan_j,
                                           std::optional<std::size_t> max_candidates) {
    std::vector<Candidate> out;
    for (std::size_t a = 0; a < scan_i.size(); ++a) {
        for (std::size_t b = 0; b < scan_j.size(); ++b) {
            if (scan_i.objects[a].dim() != scan_j.objects[b].dim()) {
                continue;
            }
            if (max_candidates && out.size() >= *max_candidates) {
                return out;
            }
            out.push_back({a, b});
        }
    }
    return out;
}

double internal_distance(const GraffElement &x, const GraffElement &y, double rho) {
    if (x.dim() != y.dim()) {
        return x.is_line() ? shifted_graff_distance(x, y, rho) : shifted_graff_distance(y, x, rho);
    }
    return 0.5 * (shifted_graff_distance(x, y, rho) + shifted_graff_distance(y, x, rho));
}

Eigen::MatrixXd internal_distances(const Scan &scan, double rho) {
    const auto n = static_cast<Eigen::Index>(scan.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
            D(p, q) = D(q, p) = internal_distance(scan.objects[p], scan.objects[q], rho);
        }
    }
    return D;
}

double consistency_score(const Candidate &u1, const Candidate &u2, const Scan &scan_i,
                         const Scan &scan_j, const ConsistencyParams &params) {
    const double di = internal_distance(scan_i.objects.at(u1.a), scan_i.objects.at(u2.a),
                                        params.rho);
    const double dj = internal_distance(scan_j.objects.at(u1.b), scan_j.objects.at(u2.b),
                                        params.rho);
    return std::abs(di - dj);
}

double weight(double c, double epsilon, double sigma) {
    if (!(c < epsilon)) {
        return 0.0;
    }
    return std::exp(-c * c / (2.0 * sigma * sigma));
}

AffinityMatrix build_affinity(std::vector<Candidate> candidates,
                              std::span<const DistanceChannel> channels, bool one_to_one) {
    const auto m = static_cast<Eigen::Index>(candidates.size());
    AffinityMatrix out;
    out.M = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index p = 0; p < m; ++p) {
        const Candidate &u1 = candidates[p];
        for (Eigen::Index q = p + 1; q < m; ++q) {
            const Candidate &u2 = candidates[q];
            if (one_to_one && (u1.a == u2.a || u1.b == u2.b)) {
                continue;
            }
            double w = 1.0;
            for (const DistanceChannel &ch : channels) {
                const double c = std::abs(ch.within_i(u1.a, u2.a) - ch.within_j(u1.b, u2.b));
                w *= weight(c, ch.epsilon, ch.sigma);
                if (w == 0.0) {
                    break;
                }
            }
            out.M(p, q) = out.M(q, p) = w;
        }
    }
    out.candidates = std::move(candidates);
    return out;
}

AffinityMatrix build_affinity(const Scan &scan_i, const Scan &scan_j,
                              const ConsistencyParams &params) {
    params.validate();
    const DistanceChannel channel{internal_distances(scan_i, params.rho),
                                  internal_distances(scan_j, params.rho), params.epsilon,
                                  params.sigma};
    return build_affinity(generate_candidates(scan_i, scan_j, params.max_candidates),
                          std::span(&channel, 1), params.one_to_one);
}

}  // namespace graff
