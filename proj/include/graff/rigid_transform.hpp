#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace graff {

/// Rigid body motion x -> R x + t. Translation in meters.
struct RigidTransform {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    Eigen::Vector3d apply(const Eigen::Vector3d &x) const { return R * x + t; }

    RigidTransform inverse() const { return {R.transpose(), -R.transpose() * t}; }

    /// (*this) after (other).
    RigidTransform compose(const RigidTransform &other) const {
        return {R * other.R, R * other.t + t};
    }
};

}  // namespace graff
