#pragma once

// Lines and planes in R^3 as elements of the affine Grassmannian, plus the
// principal-angle machinery used to compare them.

#include <Eigen/Core>
#include <stdexcept>
#include <string>

#include "graff/rigid_transform.hpp"

namespace graff {

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Orthonormal basis of a 1- or 2-dimensional direction subspace of R^3.
using Basis = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 2>;
/// Angles in radians, at most 3 entries.
using AngleVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Tolerance on |A^T A - I| accepted at construction. Bases inside the
/// tolerance are re-orthonormalized.
inline constexpr double kOrthonormalTolerance = 1e-8;

/// Line in point-direction form. +a and -a denote the same line.
struct LinePD {
    Eigen::Vector3d a = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

/// Plane {x : n^T x = d}. Canonical form has d >= 0.
struct PlaneHesse {
    Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
    double d = 0.0;
};

/// A k-dimensional affine subspace A + b0 of R^3 with k in {1, 2}.
///
/// The displacement is always stored in canonical form, i.e. orthogonal to
/// the direction subspace, so two elements with the same affine span
/// share the same b0. The basis itself is only defined up to a k x k
/// orthogonal factor; nothing downstream may depend on that choice.
class GraffElement {
public:
    /// Builds from any basis/point pair. Throws InvalidInput when the basis
    /// has the wrong shape or is not orthonormal within
    /// kOrthonormalTolerance, or when any value is non-finite.
    static GraffElement from_basis(const Basis &A, const Eigen::Vector3d &b);

    int dim() const { return static_cast<int>(basis_.cols()); }
    bool is_line() const { return dim() == 1; }
    bool is_plane() const { return dim() == 2; }
    const Basis &basis() const { return basis_; }
    const Eigen::Vector3d &displacement() const { return b0_; }

    GraffElement translated(const Eigen::Vector3d &offset) const;
    GraffElement transformed(const RigidTransform &T) const;

private:
    GraffElement(Basis A, Eigen::Vector3d b0) : basis_(std::move(A)), b0_(b0) {}

    Basis basis_;
    Eigen::Vector3d b0_;
};

/// Orthonormal columns representing the embedding of an affine subspace
/// of R^3 as a linear subspace of R^4.
struct StiefelCoords {
    Eigen::Matrix<double, 4, Eigen::Dynamic, 0, 4, 3> Y;
};

/// b0 = (I - A A^T) b. Throws InvalidInput if A is not orthonormal.
Eigen::Vector3d orthogonal_displacement(const Basis &A, const Eigen::Vector3d &b);

/// Stiefel coordinates of `el` with its displacement scaled by 1/rho.
/// Throws InvalidInput for rho <= 0.
StiefelCoords stiefel_coordinates(const GraffElement &el, double rho);

/// Principal angles between the column spans of two orthonormal matrices
/// with equal row counts, ascending. The count is the smaller column count.
///
/// Cosines come from the SVD of Q1^T Q2 and are clamped to [0, 1] before
/// arccos. Angles below pi/4 are taken from the sines instead (the SVD of
/// the component of the smaller basis orthogonal to the larger), since
/// arccos near 1 amplifies roundoff to ~1e-8.
AngleVector principal_angles(const Eigen::Ref<const Eigen::MatrixXd> &Q1,
                             const Eigen::Ref<const Eigen::MatrixXd> &Q2);

AngleVector principal_angles(const StiefelCoords &Y1, const StiefelCoords &Y2);

/// arccos with the argument clamped to [0, 1].
double clamped_arccos(double cosine);

/// Geodesic distance between the embedded subspaces: the 2-norm of the
/// min(k1, k2) + 1 principal angles. A metric for fixed rho.
double graff_distance(const GraffElement &el1, const GraffElement &el2, double rho);

/// Principal angles behind graff_distance.
AngleVector graff_angles(const GraffElement &el1, const GraffElement &el2, double rho);

/// graff_distance after translating both elements by -b0 of el1.
///
/// Unchanged by rotations about the origin. Under a general rigid motion
/// the canonical b0 of el1 moves by the component of the translation that
/// lies in el1's direction space, so the value is exactly invariant only
/// when that shift along el1 leaves el2 in place (parallel pairs, or a
/// translation normal to el1). Not symmetric in general.
double shifted_graff_distance(const GraffElement &el1, const GraffElement &el2, double rho);

AngleVector shifted_graff_angles(const GraffElement &el1, const GraffElement &el2, double rho);

/// Grassmannian distance between the direction subspaces only, i.e. both
/// elements moved to pass through the origin.
double gr_distance(const GraffElement &el1, const GraffElement &el2);

LinePD canonical(const LinePD &l);
PlaneHesse canonical(const PlaneHesse &pi);

LinePD transform_line(const LinePD &l, const RigidTransform &T);
PlaneHesse transform_plane(const PlaneHesse &pi, const RigidTransform &T);

GraffElement from_pd(const LinePD &l);
GraffElement from_hesse(const PlaneHesse &pi);
LinePD to_pd(const GraffElement &el);
PlaneHesse to_hesse(const GraffElement &el);

/// Unit direction of a line or unit normal of a plane (sign arbitrary).
Eigen::Vector3d characteristic_direction(const GraffElement &el);

}  // namespace graff
