#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graff/registration.hpp"
#include "test_util.hpp"

using namespace graff;
using namespace graff::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Forward maps built from points, independent of the library's own
// transform helpers.
LinePD move_line(const LinePD &l, const RigidTransform &T) {
    return {T.R * l.a, T.R * l.p + T.t};
}

PlaneHesse move_plane(const PlaneHesse &pi, const RigidTransform &T) {
    const Eigen::Vector3d on_plane = pi.n * pi.d;
    const Eigen::Vector3d n = T.R * pi.n;
    return {n, n.dot(T.R * on_plane + T.t)};
}

LinePD rand_line(Rng &rng) { return {random_unit(rng), random_point(rng, 30.0)}; }
PlaneHesse rand_plane(Rng &rng) { return {random_unit(rng), uniform(rng, -30.0, 30.0)}; }

MatchSet mapped(Rng &rng, int lines, int planes, const RigidTransform &T) {
    MatchSet m;
    for (int i = 0; i < lines; ++i) {
        const LinePD l = rand_line(rng);
        m.line_pairs.emplace_back(l, move_line(l, T));
    }
    for (int i = 0; i < planes; ++i) {
        const PlaneHesse p = rand_plane(rng);
        m.plane_pairs.emplace_back(p, move_plane(p, T));
    }
    return m;
}

double rotation_gap_rad(const Eigen::Matrix3d &A, const Eigen::Matrix3d &B) {
    return Eigen::AngleAxisd(A.transpose() * B).angle();
}

void check_proper(const Eigen::Matrix3d &R) {
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-10);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-10);
}

}  // namespace

TEST_CASE("noise-free recovery over random configurations") {
    Rng rng(31);
    double worst_rot = 0.0;
    double worst_trans = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const RigidTransform T = random_transform(rng, 40.0);
        int lines = static_cast<int>(rng() % 8);
        int planes = static_cast<int>(rng() % 8);
        if (lines + planes < 3) {
            planes = 3 - lines;
        }
        const RigidTransform est = estimate_transform(mapped(rng, lines, planes, T));
        check_proper(est.R);
        worst_rot = std::max(worst_rot, rotation_gap_rad(est.R, T.R));
        worst_trans = std::max(worst_trans, (est.t - T.t).norm());
    }
    MESSAGE("worst rotation " << worst_rot << " rad, translation " << worst_trans << " m");
    CHECK(worst_rot < 1e-8);
    CHECK(worst_trans < 1e-8);
}

TEST_CASE("three generic planes") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const RigidTransform T = random_transform(rng, 20.0);
        const RigidTransform est = estimate_transform(mapped(rng, 0, 3, T));
        CHECK(rotation_gap_rad(est.R, T.R) < 1e-10);
        CHECK((est.t - T.t).norm() < 1e-9);
    }
}

TEST_CASE("two lines and one plane") {
    Rng rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const RigidTransform T = random_transform(rng, 20.0);
        const MatchSet m = mapped(rng, 2, 1, T);
        const RigidTransform est = estimate_transform(m);
        CHECK(rotation_gap_rad(est.R, T.R) < 1e-9);
        CHECK((est.t - T.t).norm() < 1e-8);
        for (const auto &[src, tgt] : m.line_pairs) {
            const MatchResidual r = match_residual(est, src, tgt);
            CHECK(r.angle_rad < 1e-9);
            CHECK(r.offset_m < 1e-8);
        }
    }
}

TEST_CASE("too few matches") {
    Rng rng(34);
    const RigidTransform T = random_transform(rng);
    CHECK_THROWS_AS(estimate_transform(MatchSet{}), InsufficientMatches);
    CHECK_THROWS_AS(estimate_transform(mapped(rng, 1, 1, T)), InsufficientMatches);
    CHECK_THROWS_AS(estimate_transform(mapped(rng, 0, 2, T)), InsufficientMatches);
}

TEST_CASE("degenerate configurations") {
    Rng rng(35);
    const RigidTransform T = random_transform(rng);

    MatchSet parallel_planes;
    for (double d : {1.0, 4.0, -7.0}) {
        const PlaneHesse p{Eigen::Vector3d::UnitZ(), d};
        parallel_planes.plane_pairs.emplace_back(p, move_plane(p, T));
    }
    CHECK_THROWS_AS(estimate_transform(parallel_planes), DegenerateConfiguration);

    MatchSet parallel_lines;
    for (int i = 0; i < 5; ++i) {
        const LinePD l{Eigen::Vector3d::UnitX(), random_point(rng, 10.0)};
        parallel_lines.line_pairs.emplace_back(l, move_line(l, T));
    }
    CHECK_THROWS_AS(estimate_transform(parallel_lines), DegenerateConfiguration);

    // Translation along the shared line direction is unobservable.
    MatchSet lines_in_planes = parallel_lines;
    lines_in_planes.line_pairs.resize(2);
    const PlaneHesse p{Eigen::Vector3d::UnitY(), 3.0};
    lines_in_planes.plane_pairs.emplace_back(p, move_plane(p, T));
    CHECK_THROWS_AS(estimate_transform(lines_in_planes), DegenerateConfiguration);
}

TEST_CASE("sign flips of the inputs do not change the estimate") {
    Rng rng(36);
    for (int trial = 0; trial < 200; ++trial) {
        const RigidTransform T = random_transform(rng);
        MatchSet m = mapped(rng, 3, 4, T);
        const RigidTransform base = estimate_transform(m);
        for (auto &[src, tgt] : m.line_pairs) {
            if (rng() % 2) {
                src.a = -src.a;
            }
            if (rng() % 2) {
                tgt.a = -tgt.a;
            }
        }
        for (auto &[src, tgt] : m.plane_pairs) {
            if (rng() % 2) {
                src = {-src.n, -src.d};
            }
            if (rng() % 2) {
                tgt = {-tgt.n, -tgt.d};
            }
        }
        const RigidTransform flipped = estimate_transform(m);
        CHECK(rotation_gap_rad(flipped.R, base.R) < 1e-10);
        CHECK((flipped.t - base.t).norm() < 1e-9);
    }
}

TEST_CASE("rotation stays proper on reflected data") {
    // Singular values (3, 2, 1) with U V^T a reflection.
    const Eigen::Matrix3d H = Eigen::Vector3d(3.0, 2.0, -1.0).asDiagonal();
    const Eigen::Matrix3d R = rotation_from_cross_covariance(H);
    check_proper(R);
    CHECK((R - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    // Targets mirrored through z = 0: no rotation fits, the output must
    // still be a rotation.
    Rng rng(37);
    MatchSet m;
    for (int i = 0; i < 6; ++i) {
        const PlaneHesse p = rand_plane(rng);
        PlaneHesse q = p;
        q.n.z() = -q.n.z();
        m.plane_pairs.emplace_back(p, q);
    }
    check_proper(estimate_transform(m).R);
}

TEST_CASE("composing an extra motion onto the targets") {
    Rng rng(38);
    for (int trial = 0; trial < 200; ++trial) {
        const RigidTransform truth = random_transform(rng);
        const RigidTransform G = random_transform(rng);
        MatchSet m = mapped(rng, 3, 3, truth);
        const RigidTransform first = estimate_transform(m);
        for (auto &pair : m.line_pairs) {
            pair.second = move_line(pair.second, G);
        }
        for (auto &pair : m.plane_pairs) {
            pair.second = move_plane(pair.second, G);
        }
        const RigidTransform expected = G.compose(first);
        const RigidTransform est = estimate_transform(m);
        CHECK(rotation_gap_rad(est.R, expected.R) < 1e-9);
        CHECK((est.t - expected.t).norm() < 1e-8);
    }
}

TEST_CASE("representative points along a line do not matter") {
    Rng rng(39);
    for (int trial = 0; trial < 200; ++trial) {
        const RigidTransform T = random_transform(rng);
        MatchSet m = mapped(rng, 4, 1, T);
        const RigidTransform base = estimate_transform(m);
        for (auto &[src, tgt] : m.line_pairs) {
            src.p += uniform(rng, -20.0, 20.0) * src.a;
            tgt.p += uniform(rng, -20.0, 20.0) * tgt.a;
        }
        const RigidTransform moved = estimate_transform(m);
        CHECK(rotation_gap_rad(moved.R, base.R) < 1e-10);
        CHECK((moved.t - base.t).norm() < 1e-8);
    }
}

TEST_CASE("weights") {
    Rng rng(40);
    const RigidTransform T = random_transform(rng);
    MatchSet m = mapped(rng, 2, 3, T);
    m.line_weights = {0.5, 3.0};
    m.plane_weights = {1.0, 2.0, 0.1};
    const RigidTransform est = estimate_transform(m);
    CHECK(rotation_gap_rad(est.R, T.R) < 1e-9);
    CHECK((est.t - T.t).norm() < 1e-8);

    m.plane_weights = {1.0};
    CHECK_THROWS_AS(estimate_transform(m), InvalidInput);
    m.plane_weights = {1.0, -1.0, 1.0};
    CHECK_THROWS_AS(estimate_transform(m), InvalidInput);
}

TEST_CASE("small noise gives small error") {
    Rng rng(41);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const RigidTransform T = random_transform(rng);
        MatchSet m = mapped(rng, 5, 15, T);
        for (auto &[src, tgt] : m.plane_pairs) {
            tgt.n = (tgt.n + 0.005 * random_unit(rng)).normalized();
            tgt.d += 0.03 * gauss(rng);
        }
        const AlignmentError e = alignment_error(estimate_transform(m), T);
        CHECK(e.rotation_deg < 1.5);
        CHECK(e.translation_m < 1.5);
    }
}

TEST_CASE("alignment error") {
    Rng rng(42);
    const RigidTransform truth = random_transform(rng);
    const AlignmentError same = alignment_error(truth, truth);
    CHECK(same.rotation_deg == doctest::Approx(0.0));
    CHECK(same.translation_m == 0.0);

    for (int i = 0; i < 20; ++i) {
        const Eigen::Matrix3d turn =
            Eigen::AngleAxisd(5.0 * kPi / 180.0, random_unit(rng)).toRotationMatrix();
        const RigidTransform est{truth.R * turn, truth.t};
        CHECK(alignment_error(est, truth).rotation_deg == doctest::Approx(5.0).epsilon(1e-10));
    }

    const RigidTransform shifted{truth.R, truth.t + Eigen::Vector3d(0.6, 0.8, 0.0)};
    CHECK(alignment_error(shifted, truth).translation_m == doctest::Approx(1.0).epsilon(1e-12));

    for (double angle : {1e-9, 1e-6, 1e-3, 3.0}) {
        const Eigen::Matrix3d R = Eigen::AngleAxisd(angle, random_unit(rng)).toRotationMatrix();
        CHECK(rotation_angle(R) == doctest::Approx(angle).epsilon(1e-6));
    }
    CHECK(rotation_angle(rot_x(kPi)) == doctest::Approx(kPi));
}

TEST_CASE("verification thresholds") {
    CHECK(verify(AlignmentError{0.3, 0.04}));
    CHECK_FALSE(verify(AlignmentError{5.1, 0.2}));
    CHECK_FALSE(verify(AlignmentError{1.0, 1.0}));
    CHECK_FALSE(verify(AlignmentError{5.0, 0.0}));
    CHECK(verify(AlignmentError{4.999, 0.999}));
    CHECK(verify(AlignmentError{9.0, 2.0}, VerificationThresholds{10.0, 3.0}));

    const RigidTransform truth{rot_z(0.4), {1.0, 2.0, 3.0}};
    const RigidTransform close{rot_z(0.4 + 0.3 * kPi / 180.0), {1.0, 2.04, 3.0}};
    CHECK(verify(close, truth));
    const RigidTransform far{rot_z(0.4), {1.0, 3.5, 3.0}};
    CHECK_FALSE(verify(far, truth));
}

TEST_CASE("match residuals") {
    const RigidTransform T{rot_z(0.7), {2.0, -1.0, 0.5}};
    const LinePD l{Eigen::Vector3d::UnitX(), {0.0, 1.0, 2.0}};
    LinePD tgt = move_line(l, T);
    MatchResidual r = match_residual(T, l, tgt);
    CHECK(r.angle_rad == doctest::Approx(0.0));
    CHECK(r.offset_m == doctest::Approx(0.0));

    // Slide along the line, flip it, then push it 0.3 m sideways.
    tgt.p += 7.0 * tgt.a;
    tgt.a = -tgt.a;
    tgt.p += 0.3 * Eigen::Vector3d::UnitZ();
    r = match_residual(T, l, tgt);
    CHECK(r.angle_rad == doctest::Approx(0.0));
    CHECK(r.offset_m == doctest::Approx(0.3).epsilon(1e-12));

    const PlaneHesse p{Eigen::Vector3d::UnitY(), 4.0};
    PlaneHesse q = move_plane(p, T);
    q.d += 0.25;
    r = match_residual(T, p, q);
    CHECK(r.angle_rad == doctest::Approx(0.0));
    CHECK(r.offset_m == doctest::Approx(0.25).epsilon(1e-12));
    r = match_residual(T, p, PlaneHesse{-q.n, -q.d});
    CHECK(r.offset_m == doctest::Approx(0.25).epsilon(1e-12));

    const Eigen::Vector3d n = move_plane(p, T).n;
    const Eigen::Vector3d axis = n.cross(Eigen::Vector3d::UnitZ()).normalized();
    const PlaneHesse tilted{Eigen::AngleAxisd(2.0 * kPi / 180.0, axis) * n, 0.0};
    r = match_residual(RigidTransform{T.R, Eigen::Vector3d::Zero()}, PlaneHesse{p.n, 0.0}, tilted);
    CHECK(r.angle_rad == doctest::Approx(2.0 * kPi / 180.0).epsilon(1e-9));
}
