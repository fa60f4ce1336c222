#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <utility>
#include <vector>

#include "graff/graff_core.hpp"
#include "graff/rigid_transform.hpp"

namespace graff {

/// Matched landmarks; each pair is (source, target) with target = T(source).
struct MatchSet {
    std::vector<std::pair<LinePD, LinePD>> line_pairs;
    std::vector<std::pair<PlaneHesse, PlaneHesse>> plane_pairs;
    /// Optional per-pair weights; empty means unit weights.
    std::vector<double> line_weights;
    std::vector<double> plane_weights;

    std::size_t size() const { return line_pairs.size() + plane_pairs.size(); }
};

inline constexpr std::size_t kMinimumMatches = 3;

/// Fewer than kMinimumMatches pairs: the attempt counts as failed.
class InsufficientMatches : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The matches do not pin down all six degrees of freedom.
class DegenerateConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-form rigid transform aligning matched lines and planes.
///
/// Rotation maximizes the agreement of matched directions and normals via
/// SVD of their cross-covariance (with a determinant fix). Because a line
/// direction or a plane normal carries no sign, signs are resolved first:
/// the two least-parallel pairs seed four sign hypotheses, every other pair
/// takes the sign that agrees with the seed rotation, and the hypothesis
/// with the smallest total residual wins. Translation then solves the
/// stacked least-squares system
///   plane rows:  n'^T t = d' - d
///   line rows:   P t = P (p' - R p),   P = I - a' a'^T
/// Throws InsufficientMatches or DegenerateConfiguration.
RigidTransform estimate_transform(const MatchSet &matches);

/// Rotation R maximizing sum_i w_i target_i^T R source_i, det R = +1.
Eigen::Matrix3d rotation_from_cross_covariance(const Eigen::Matrix3d &target_source);

struct AlignmentError {
    double rotation_deg = 0.0;
    double translation_m = 0.0;
};

/// Geodesic rotation angle between the two rotations and the distance
/// between the translations.
AlignmentError alignment_error(const RigidTransform &estimate, const RigidTransform &truth);

/// Angle of a rotation matrix in radians, accurate near zero.
double rotation_angle(const Eigen::Matrix3d &R);

struct VerificationThresholds {
    double max_rotation_deg = 5.0;
    double max_translation_m = 1.0;
};

/// Strict: both errors must lie below their thresholds.
bool verify(const AlignmentError &error, const VerificationThresholds &thresholds = {});
bool verify(const RigidTransform &estimate, const RigidTransform &truth,
            const VerificationThresholds &thresholds = {});

/// How well T maps `source` onto `target`: direction angle (radians,
/// sign-free) and offset (meters). For lines the offset is the distance of
/// the mapped point from the target line; for planes it is the difference
/// in signed offsets after aligning normals.
struct MatchResidual {
    double angle_rad = 0.0;
    double offset_m = 0.0;
};

MatchResidual match_residual(const RigidTransform &T, const LinePD &source, const LinePD &target);
MatchResidual match_residual(const RigidTransform &T, const PlaneHesse &source,
                             const PlaneHesse &target);

}  // namespace graff
