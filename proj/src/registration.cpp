#include "graff/registration.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <limits>

namespace graff {

namespace {

constexpr double kRadToDeg = 57.295779513082320877;

// Relative singular-value floor below which a system counts as rank deficient.
constexpr double kRankTolerance = 1e-7;

struct DirectionPair {
    Eigen::Vector3d source;
    Eigen::Vector3d target;
    double weight = 1.0;
};

struct Prepared {
    std::vector<LinePD> line_src, line_tgt;
    std::vector<PlaneHesse> plane_src, plane_tgt;
    std::vector<double> line_w, plane_w;
    std::vector<DirectionPair> directions;  // lines first, then planes
};

Prepared prepare(const MatchSet &matches) {
    auto weights = [](const std::vector<double> &given, std::size_t count) {
        if (given.empty()) {
            return std::vector<double>(count, 1.0);
        }
        if (given.size() != count) {
            throw InvalidInput("weight count does not match pair count");
        }
        for (double w : given) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw InvalidInput("match weights must be positive");
            }
        }
        return given;
    };
    Prepared p;
    p.line_w = weights(matches.line_weights, matches.line_pairs.size());
    p.plane_w = weights(matches.plane_weights, matches.plane_pairs.size());
    for (std::size_t i = 0; i < matches.line_pairs.size(); ++i) {
        p.line_src.push_back(canonical(matches.line_pairs[i].first));
        p.line_tgt.push_back(canonical(matches.line_pairs[i].second));
        p.directions.push_back({p.line_src.back().a, p.line_tgt.back().a, p.line_w[i]});
    }
    for (std::size_t i = 0; i < matches.plane_pairs.size(); ++i) {
        p.plane_src.push_back(canonical(matches.plane_pairs[i].first));
        p.plane_tgt.push_back(canonical(matches.plane_pairs[i].second));
        p.directions.push_back({p.plane_src.back().n, p.plane_tgt.back().n, p.plane_w[i]});
    }
    return p;
}

struct Hypothesis {
    RigidTransform T;
    double residual = std::numeric_limits<double>::infinity();
};

// Translation given a rotation and per-direction signs. Returns the
// weighted squared residual of the stacked system.
double solve_translation(const Prepared &p, const Eigen::Matrix3d &R,
                         const std::vector<double> &signs, Eigen::Vector3d &t) {
    const std::size_t lines = p.line_src.size();
    const auto rows = static_cast<Eigen::Index>(3 * lines + p.plane_src.size());
    Eigen::MatrixXd A(rows, 3);
    Eigen::VectorXd b(rows);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < lines; ++i) {
        const Eigen::Vector3d &a = p.line_tgt[i].a;
        const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - a * a.transpose();
        const double sw = std::sqrt(p.line_w[i]);
        A.block<3, 3>(r, 0) = sw * P;
        b.segment<3>(r) = sw * P * (p.line_tgt[i].p - R * p.line_src[i].p);
        r += 3;
    }
    for (std::size_t i = 0; i < p.plane_src.size(); ++i) {
        const double s = signs[lines + i];
        const double sw = std::sqrt(p.plane_w[i]);
        A.row(r) = sw * s * p.plane_tgt[i].n.transpose();
        b(r) = sw * (s * p.plane_tgt[i].d - p.plane_src[i].d);
        ++r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    if (sv.size() < 3 || !(sv(2) > kRankTolerance * sv(0))) {
        throw DegenerateConfiguration("translation is not constrained in every direction");
    }
    t = svd.solve(b);
    return (A * t - b).squaredNorm();
}

}  // namespace

Eigen::Matrix3d rotation_from_cross_covariance(const Eigen::Matrix3d &target_source) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(target_source, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d &U = svd.matrixU();
    const Eigen::Matrix3d &V = svd.matrixV();
    Eigen::Vector3d d(1.0, 1.0, (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
    return U * d.asDiagonal() * V.transpose();
}

RigidTransform estimate_transform(const MatchSet &matches) {
    if (matches.size() < kMinimumMatches) {
        throw InsufficientMatches("at least 3 matched lines/planes are required");
    }
    const Prepared p = prepare(matches);
    const std::size_t n = p.directions.size();

    // Seeds: the least parallel pair of source directions.
    std::size_t seed_a = 0, seed_b = 1;
    double best_dot = 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dot = std::abs(p.directions[i].source.dot(p.directions[j].source));
            if (dot < best_dot) {
                best_dot = dot;
                seed_a = i;
                seed_b = j;
            }
        }
    }
    if (!(std::sqrt(std::max(0.0, 1.0 - best_dot * best_dot)) > kRankTolerance)) {
        throw DegenerateConfiguration("all directions and normals are parallel");
    }

    Hypothesis best;
    bool degenerate = false;
    constexpr std::array<std::array<double, 2>, 4> kSeedSigns{
        {{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}};
    for (const auto &seed_signs : kSeedSigns) {
        const DirectionPair &da = p.directions[seed_a];
        const DirectionPair &db = p.directions[seed_b];
        const Eigen::Matrix3d seed_cov = seed_signs[0] * da.target * da.source.transpose() +
                                         seed_signs[1] * db.target * db.source.transpose();
        const Eigen::Matrix3d seed_R = rotation_from_cross_covariance(seed_cov);

        std::vector<double> signs(n);
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (std::size_t k = 0; k < n; ++k) {
            const DirectionPair &dk = p.directions[k];
            if (k == seed_a || k == seed_b) {
                signs[k] = seed_signs[k == seed_a ? 0 : 1];
            } else {
                signs[k] = dk.target.dot(seed_R * dk.source) >= 0.0 ? 1.0 : -1.0;
            }
            cov += dk.weight * signs[k] * dk.target * dk.source.transpose();
        }
        Hypothesis h;
        h.T.R = rotation_from_cross_covariance(cov);
        double rotation_residual = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const DirectionPair &dk = p.directions[k];
            rotation_residual += dk.weight * (signs[k] * dk.target - h.T.R * dk.source).squaredNorm();
        }
        try {
            h.residual = rotation_residual + solve_translation(p, h.T.R, signs, h.T.t);
        } catch (const DegenerateConfiguration &) {
            degenerate = true;
            continue;
        }
        if (h.residual < best.residual) {
            best = h;
        }
    }
    if (degenerate || !std::isfinite(best.residual)) {
        throw DegenerateConfiguration("translation is not constrained in every direction");
    }
    return best.T;
}

double rotation_angle(const Eigen::Matrix3d &R) {
    const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    const double sine = 0.5 * axis.norm();
    const double cosine = 0.5 * (R.trace() - 1.0);
    return std::atan2(sine, cosine);
}

AlignmentError alignment_error(const RigidTransform &estimate, const RigidTransform &truth) {
    AlignmentError e;
    e.rotation_deg = rotation_angle(truth.R.transpose() * estimate.R) * kRadToDeg;
    e.translation_m = (truth.t - estimate.t).norm();
    return e;
}

bool verify(const AlignmentError &error, const VerificationThresholds &thresholds) {
    return error.rotation_deg < thresholds.max_rotation_deg &&
           error.translation_m < thresholds.max_translation_m;
}

bool verify(const RigidTransform &estimate, const RigidTransform &truth,
            const VerificationThresholds &thresholds) {
    return verify(alignment_error(estimate, truth), thresholds);
}

MatchResidual match_residual(const RigidTransform &T, const LinePD &source, const LinePD &target) {
    const LinePD mapped = transform_line(source, T);
    const LinePD tgt = canonical(target);
    const double cosine = std::min(1.0, std::abs(mapped.a.dot(tgt.a)));
    const double sine = mapped.a.cross(tgt.a).norm();
    const Eigen::Vector3d gap = mapped.p - tgt.p;
    return {std::atan2(sine, cosine), (gap - tgt.a * tgt.a.dot(gap)).norm()};
}

MatchResidual match_residual(const RigidTransform &T, const PlaneHesse &source,
                             const PlaneHesse &target) {
    const PlaneHesse mapped = transform_plane(source, T);
    const PlaneHesse tgt = canonical(target);
    const double dot = mapped.n.dot(tgt.n);
    const double sign = dot < 0.0 ? -1.0 : 1.0;
    const double sine = mapped.n.cross(tgt.n).norm();
    return {std::atan2(sine, std::abs(dot)), std::abs(sign * mapped.d - tgt.d)};
}

}  // namespace graff
