#include "graff/graff_core.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace graff {

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

constexpr double kQuarterPi = 0.78539816339744830962;

double orthonormality_defect(const Basis &A) {
    const Eigen::MatrixXd gram = A.transpose() * A;
    return (gram - Eigen::MatrixXd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff();
}

void require_orthonormal(const Basis &A) {
    if (A.cols() < 1 || A.cols() > 2) {
        throw InvalidInput("basis must have 1 or 2 columns");
    }
    if (!A.allFinite()) {
        throw InvalidInput("basis contains non-finite values");
    }
    if (orthonormality_defect(A) > kOrthonormalTolerance) {
        throw InvalidInput("basis is not orthonormal");
    }
}

Basis orthonormalized(const Basis &A) {
    if (orthonormality_defect(A) <= 1e-14) {
        return A;
    }
    const Eigen::MatrixXd dense = A;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(3, A.cols());
    // Keep the orientation of each input column.
    for (Eigen::Index c = 0; c < Q.cols(); ++c) {
        if (Q.col(c).dot(A.col(c)) < 0.0) {
            Q.col(c) = -Q.col(c);
        }
    }
    return Q;
}

Eigen::Vector3d any_unit_orthogonal(const Eigen::Vector3d &n) {
    Eigen::Index axis = 0;
    n.cwiseAbs().minCoeff(&axis);
    return n.cross(Eigen::Vector3d::Unit(axis)).normalized();
}

// Sign convention for plane normals through the origin: the component with
// the largest magnitude is positive.
Eigen::Vector3d fix_sign(const Eigen::Vector3d &n) {
    Eigen::Index i = 0;
    n.cwiseAbs().maxCoeff(&i);
    return n(i) < 0.0 ? Eigen::Vector3d(-n) : n;
}

}  // namespace

GraffElement GraffElement::from_basis(const Basis &A, const Eigen::Vector3d &b) {
    require_orthonormal(A);
    if (!b.allFinite()) {
        throw InvalidInput("displacement contains non-finite values");
    }
    Basis Q = orthonormalized(A);
    Eigen::Vector3d b0 = b - Q * (Q.transpose() * b);
    return GraffElement(std::move(Q), b0);
}

GraffElement GraffElement::translated(const Eigen::Vector3d &offset) const {
    Eigen::Vector3d b = b0_ + offset;
    return GraffElement(basis_, b - basis_ * (basis_.transpose() * b));
}

GraffElement GraffElement::transformed(const RigidTransform &T) const {
    Basis A = T.R * basis_;
    Eigen::Vector3d b = T.apply(b0_);
    return GraffElement(A, b - A * (A.transpose() * b));
}

Eigen::Vector3d orthogonal_displacement(const Basis &A, const Eigen::Vector3d &b) {
    require_orthonormal(A);
    return b - A * (A.transpose() * b);
}

StiefelCoords stiefel_coordinates(const GraffElement &el, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw InvalidInput("rho must be positive");
    }
    const Eigen::Index k = el.dim();
    const Eigen::Vector3d b = el.displacement() / rho;
    const double eta = std::sqrt(1.0 + b.squaredNorm());

    StiefelCoords out;
    out.Y.setZero(4, k + 1);
    out.Y.topLeftCorner(3, k) = el.basis();
    out.Y.block(0, k, 3, 1) = b / eta;
    out.Y(3, k) = 1.0 / eta;
    return out;
}

double clamped_arccos(double cosine) { return std::acos(std::clamp(cosine, 0.0, 1.0)); }

AngleVector principal_angles(const Eigen::Ref<const Eigen::MatrixXd> &Q1,
                             const Eigen::Ref<const Eigen::MatrixXd> &Q2) {
    if (Q1.rows() != Q2.rows()) {
        throw InvalidInput("principal_angles: row counts differ");
    }
    // Work with the smaller subspace as `small`.
    const bool swap = Q1.cols() > Q2.cols();
    const SmallMatrix small = swap ? Q2 : Q1;
    const SmallMatrix large = swap ? Q1 : Q2;

    const SmallMatrix cross = small.transpose() * large;
    const SmallMatrix residual = small - large * cross.transpose();

    Eigen::JacobiSVD<SmallMatrix> cos_svd(cross);
    Eigen::JacobiSVD<SmallMatrix> sin_svd(residual);
    // Cosines are sorted descending, sines descending as well; the k-th
    // smallest angle pairs the k-th largest cosine with the k-th smallest
    // sine.
    const auto &cosines = cos_svd.singularValues();
    const auto &sines = sin_svd.singularValues();
    const Eigen::Index count = small.cols();

    AngleVector theta(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const double c = i < cosines.size() ? cosines(i) : 0.0;
        const double s = sines(count - 1 - i);
        theta(i) = clamped_arccos(c);
        if (theta(i) < kQuarterPi) {
            theta(i) = std::asin(std::clamp(s, 0.0, 1.0));
        }
    }
    std::sort(theta.begin(), theta.end());
    return theta;
}

AngleVector principal_angles(const StiefelCoords &Y1, const StiefelCoords &Y2) {
    return principal_angles(Y1.Y, Y2.Y);
}

AngleVector graff_angles(const GraffElement &el1, const GraffElement &el2, double rho) {
    return principal_angles(stiefel_coordinates(el1, rho), stiefel_coordinates(el2, rho));
}

double graff_distance(const GraffElement &el1, const GraffElement &el2, double rho) {
    return graff_angles(el1, el2, rho).norm();
}

AngleVector shifted_graff_angles(const GraffElement &el1, const GraffElement &el2, double rho) {
    const Eigen::Vector3d shift = -el1.displacement();
    return graff_angles(el1.translated(shift), el2.translated(shift), rho);
}

double shifted_graff_distance(const GraffElement &el1, const GraffElement &el2, double rho) {
    return shifted_graff_angles(el1, el2, rho).norm();
}

double gr_distance(const GraffElement &el1, const GraffElement &el2) {
    return principal_angles(el1.basis(), el2.basis()).norm();
}

LinePD canonical(const LinePD &l) {
    const double norm = l.a.norm();
    if (!(norm > 0.0) || !l.a.allFinite() || !l.p.allFinite()) {
        throw InvalidInput("line direction must be finite and nonzero");
    }
    LinePD out;
    out.a = l.a / norm;
    out.p = l.p - out.a * out.a.dot(l.p);
    return out;
}

PlaneHesse canonical(const PlaneHesse &pi) {
    const double norm = pi.n.norm();
    if (!(norm > 0.0) || !pi.n.allFinite() || !std::isfinite(pi.d)) {
        throw InvalidInput("plane normal must be finite and nonzero");
    }
    PlaneHesse out{pi.n / norm, pi.d / norm};
    if (out.d < 0.0) {
        out.n = -out.n;
        out.d = -out.d;
    } else if (out.d == 0.0) {
        out.n = fix_sign(out.n);
    }
    return out;
}

LinePD transform_line(const LinePD &l, const RigidTransform &T) {
    const LinePD c = canonical(l);
    return canonical(LinePD{T.R * c.a, T.apply(c.p)});
}

PlaneHesse transform_plane(const PlaneHesse &pi, const RigidTransform &T) {
    const PlaneHesse c = canonical(pi);
    const Eigen::Vector3d n = T.R * c.n;
    return canonical(PlaneHesse{n, c.d + n.dot(T.t)});
}

GraffElement from_pd(const LinePD &l) {
    const LinePD c = canonical(l);
    return GraffElement::from_basis(Basis(c.a), c.p);
}

GraffElement from_hesse(const PlaneHesse &pi) {
    const PlaneHesse c = canonical(pi);
    const Eigen::Vector3d u = any_unit_orthogonal(c.n);
    const Eigen::Vector3d v = c.n.cross(u);
    Basis A(3, 2);
    A << u, v;
    return GraffElement::from_basis(A, c.d * c.n);
}

LinePD to_pd(const GraffElement &el) {
    if (!el.is_line()) {
        throw InvalidInput("to_pd: element is not a line");
    }
    return LinePD{el.basis().col(0), el.displacement()};
}

PlaneHesse to_hesse(const GraffElement &el) {
    if (!el.is_plane()) {
        throw InvalidInput("to_hesse: element is not a plane");
    }
    const Eigen::Vector3d n = el.basis().col(0).cross(el.basis().col(1)).normalized();
    return canonical(PlaneHesse{n, n.dot(el.displacement())});
}

Eigen::Vector3d characteristic_direction(const GraffElement &el) {
    if (el.is_line()) {
        return el.basis().col(0);
    }
    return el.basis().col(0).cross(el.basis().col(1)).normalized();
}

}  // namespace graff
