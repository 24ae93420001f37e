#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pcavoid/core/trajectory.hpp"

using namespace pcavoid;

namespace {

UavState at_rest(const Point3& p = Point3::Zero()) {
    UavState s;
    s.p = p;
    return s;
}

std::vector<double> offsets(const std::vector<UavState>& samples, double t0) {
    std::vector<double> out;
    for (const auto& s : samples) {
        out.push_back(s.t - t0);
    }
    return out;
}

}  // namespace

TEST(Propagate, ZeroControlMovesAtConstantVelocity) {
    UavState s;
    s.v = Vec3(1, 0, 0);
    const UavState out = propagate(s, Vec3::Zero(), 0.6);
    EXPECT_NEAR(out.p.x(), 0.6, 1e-15);
    EXPECT_EQ(out.v, Vec3(1, 0, 0));
    EXPECT_DOUBLE_EQ(out.t, 0.6);
}

TEST(Propagate, ConstantAccelerationFromRest) {
    const UavState out = propagate(at_rest(), Vec3(2, 0, 0), 0.6);
    EXPECT_NEAR(out.p.x(), 0.36, 1e-15);
    EXPECT_NEAR(out.v.x(), 1.2, 1e-15);
    EXPECT_EQ(out.a, Vec3(2, 0, 0));
    const auto [p, v] = oracle::rk4(Vec3::Zero(), Vec3::Zero(), Vec3(2, 0, 0), 0.6, 1e-4);
    EXPECT_LE((out.p - p).norm(), 1e-9);
    EXPECT_LE((out.v - v).norm(), 1e-9);
}

TEST(Propagate, ZeroDurationIsIdentity) {
    UavState s;
    s.t = 3.0;
    s.p = Vec3(1, 2, 3);
    s.v = Vec3(-1, 0.5, 2);
    s.a = Vec3(0.1, 0.2, 0.3);
    const UavState out = propagate(s, Vec3(2, -2, 0), 0.0);
    EXPECT_EQ(out.p, s.p);
    EXPECT_EQ(out.v, s.v);
    EXPECT_EQ(out.a, s.a);
    EXPECT_EQ(out.t, s.t);
}

TEST(Propagate, RejectsNonFiniteAndNegativeDuration) {
    UavState s;
    s.p.x() = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(propagate(s, Vec3::Zero(), 0.1), std::invalid_argument);
    EXPECT_THROW(propagate(UavState{}, Vec3(INFINITY, 0, 0), 0.1), std::invalid_argument);
    EXPECT_THROW(propagate(UavState{}, Vec3::Zero(), -0.1), std::invalid_argument);
    EXPECT_THROW(propagate(UavState{}, Vec3::Zero(), INFINITY), std::invalid_argument);
}

TEST(Propagate, TimeAdditive) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3), t(0, 1);
    for (int i = 0; i < 500; ++i) {
        UavState s;
        s.p = Vec3(u(rng), u(rng), u(rng));
        s.v = Vec3(u(rng), u(rng), u(rng));
        const Vec3 c(u(rng), u(rng), u(rng));
        const double t1 = t(rng), t2 = t(rng);
        const UavState a = propagate(propagate(s, c, t1), c, t2);
        const UavState b = propagate(s, c, t1 + t2);
        EXPECT_LE((a.p - b.p).norm(), 1e-9);
        EXPECT_LE((a.v - b.v).norm(), 1e-9);
    }
}

TEST(SampleTrajectory, GridIncludesEndpoint) {
    Trajectory traj(0.0);
    traj.append(ConstantAccelSegment{at_rest(), Vec3(1, 0, 0), 0.6});
    const auto off = offsets(sample_trajectory(traj, 0.2), 0.0);
    ASSERT_EQ(off.size(), 4u);
    EXPECT_NEAR(off[0], 0.0, 1e-12);
    EXPECT_NEAR(off[1], 0.2, 1e-12);
    EXPECT_NEAR(off[2], 0.4, 1e-12);
    EXPECT_NEAR(off[3], 0.6, 1e-12);

    Trajectory half(2.0);
    half.append(ConstantAccelSegment{at_rest(), Vec3::Zero(), 0.5});
    const auto off2 = offsets(sample_trajectory(half, 0.2), 2.0);
    ASSERT_EQ(off2.size(), 4u);
    EXPECT_NEAR(off2[2], 0.4, 1e-12);
    EXPECT_NEAR(off2[3], 0.5, 1e-12);
}

TEST(SampleTrajectory, RejectsNonPositiveStep) {
    Trajectory traj(0.0);
    traj.append(ConstantAccelSegment{at_rest(), Vec3::Zero(), 1.0});
    EXPECT_THROW(sample_trajectory(traj, 0.0), std::invalid_argument);
    EXPECT_THROW(sample_trajectory(traj, -0.1), std::invalid_argument);
}

TEST(SampleTrajectory, ChainedSegmentsMatchClosedForm) {
    const UavState s0 = at_rest(Vec3(1, 1, 1));
    const Vec3 u0(2, 0, -2), u1(-2, 2, 0);
    const UavState s1 = propagate(s0, u0, 0.6);
    Trajectory traj(0.0);
    traj.append(ConstantAccelSegment{s0, u0, 0.6});
    traj.append(ConstantAccelSegment{s1, u1, 0.6});
    for (const UavState& s : sample_trajectory(traj, 0.05)) {
        // Independent evaluation: plain kinematics per segment.
        Vec3 p;
        if (s.t <= 0.6) {
            p = s0.p + 0.5 * u0 * s.t * s.t;
        } else {
            const double tl = s.t - 0.6;
            const Vec3 p1 = s0.p + 0.5 * u0 * 0.36;
            const Vec3 v1 = u0 * 0.6;
            p = p1 + v1 * tl + 0.5 * u1 * tl * tl;
        }
        EXPECT_LE((s.p - p).norm(), 1e-9) << "t=" << s.t;
    }
}

TEST(Trajectory, JoinsAreContinuous) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> level(-1, 1);
    UavState s = at_rest();
    Trajectory traj(0.0);
    for (int k = 0; k < 12; ++k) {
        const Vec3 u = 2.0 * Vec3(level(rng), level(rng), level(rng));
        traj.append(ConstantAccelSegment{s, u, 0.6});
        s = propagate(s, u, 0.6);
    }
    traj.append(PolynomialSegment::connect(s, Vec3(5, 5, 5), Vec3::Zero(), Vec3::Zero(), 3.0));
    for (std::size_t i = 1; i < traj.segments().size(); ++i) {
        const double tj = traj.segment_start(i);
        const Segment& prev = traj.segments()[i - 1];
        const Segment& next = traj.segments()[i];
        const UavState a = std::visit([&](const auto& x) { return x.at(x.duration()); }, prev);
        const UavState b = std::visit([](const auto& x) { return x.at(0.0); }, next);
        EXPECT_LE((a.p - b.p).norm(), 1e-9) << "join " << i << " at " << tj;
        EXPECT_LE((a.v - b.v).norm(), 1e-9) << "join " << i;
    }
}

TEST(Trajectory, TruncatedKeepsPrefix) {
    Trajectory traj(1.0);
    UavState s = at_rest();
    s.t = 1.0;
    traj.append(ConstantAccelSegment{s, Vec3(2, 0, 0), 0.6});
    traj.append(ConstantAccelSegment{propagate(s, Vec3(2, 0, 0), 0.6), Vec3::Zero(), 0.6});
    const Trajectory cut = traj.truncated(1.9);
    EXPECT_NEAR(cut.end_time(), 1.9, 1e-12);
    ASSERT_EQ(cut.segments().size(), 2u);
    for (double t : {1.0, 1.3, 1.6, 1.85, 1.9}) {
        EXPECT_LE((cut.state_at(t).p - traj.state_at(t).p).norm(), 1e-12);
    }
    EXPECT_TRUE(traj.truncated(1.0).empty());
}

TEST(Trajectory, StateAtClampsOutsideRange) {
    Trajectory traj(0.0);
    traj.append(ConstantAccelSegment{at_rest(), Vec3(1, 0, 0), 1.0});
    EXPECT_EQ(traj.state_at(-5).p, Vec3::Zero());
    EXPECT_NEAR(traj.state_at(9).p.x(), 0.5, 1e-15);
    EXPECT_THROW(traj.append(ConstantAccelSegment{at_rest(), Vec3::Zero(), 0.0}), std::invalid_argument);
}

TEST(PolynomialSegment, MeetsBoundaryConditionsAndMatchesLinearSolve) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3), dur(0.2, 5);
    for (int i = 0; i < 200; ++i) {
        UavState s;
        s.p = Vec3(u(rng), u(rng), u(rng));
        s.v = Vec3(u(rng), u(rng), u(rng));
        s.a = Vec3(u(rng), u(rng), u(rng));
        const Vec3 p1(u(rng), u(rng), u(rng)), v1(u(rng), u(rng), u(rng)), a1(u(rng), u(rng), u(rng));
        const double T = dur(rng);
        const PolynomialSegment seg = PolynomialSegment::connect(s, p1, v1, a1, T);
        const UavState b = seg.at(0.0), e = seg.at(T);
        EXPECT_LE((b.p - s.p).norm(), 1e-9);
        EXPECT_LE((b.v - s.v).norm(), 1e-9);
        EXPECT_LE((b.a - s.a).norm(), 1e-9);
        EXPECT_LE((e.p - p1).norm(), 1e-6);
        EXPECT_LE((e.v - v1).norm(), 1e-6);
        EXPECT_LE((e.a - a1).norm(), 1e-6);
        for (int axis = 0; axis < 3; ++axis) {
            const auto c = oracle::quintic_solve(s.p[axis], s.v[axis], s.a[axis], p1[axis], v1[axis], a1[axis], T);
            for (int k = 0; k < 6; ++k) {
                EXPECT_NEAR(seg.coeffs(axis, k), c[k], 1e-7 * std::max(1.0, std::abs(c[k])));
            }
        }
    }
}

TEST(BrakeTrajectory, StopsWithinAccelerationLimit) {
    UavState s;
    s.t = 2.0;
    s.v = Vec3(2, -1, 0.5);
    const Trajectory traj = brake_trajectory(s, 2.0);
    EXPECT_DOUBLE_EQ(traj.start_time(), 2.0);
    const UavState end = traj.state_at(traj.end_time());
    EXPECT_LE(end.v.norm(), 1e-9);
    for (const UavState& x : sample_trajectory(traj, 0.01)) {
        EXPECT_LE(x.a.cwiseAbs().maxCoeff(), 2.0 + 1e-12);
    }
    // Full stop on x takes v/a = 1 s and covers v^2 / 2a = 1 m.
    EXPECT_NEAR(end.p.x(), 1.0, 1e-9);
}
