#include <gtest/gtest.h>

#include "pcavoid/planner/replan_manager.hpp"

using namespace pcavoid;

namespace {

// Bar of points across the x axis at x = x0, spanning |y| <= half, |z| <= z_half.
std::vector<Point3> bar(double x0, double half, double z_half = 1.0) {
    std::vector<Point3> pts;
    for (double y = -half; y <= half; y += 0.05) {
        for (double z = -z_half; z <= z_half; z += 0.05) {
            pts.emplace_back(x0, y, z);
        }
    }
    return pts;
}

Trajectory initial_plan(const PlannerConfig& cfg, const Point3& goal) {
    TemporalLocalMap empty;
    PlanResult res = plan(UavState{}, goal, cfg, empty);
    EXPECT_TRUE(res.ok());
    return *res.trajectory;
}

}  // namespace

TEST(ReplanManager, KeepsClearTrajectoryWithoutPlanning) {
    PlannerConfig cfg;
    const Point3 goal(8, 0, 0);
    const Trajectory traj = initial_plan(cfg, goal);
    TemporalLocalMap map;
    map.update(PointCloud{{Point3(4, 5, 0)}});
    const ReplanOutcome out = replan_manager_step(traj, 0.5, map, goal, cfg);
    EXPECT_EQ(out.action, ReplanAction::Keep);
    EXPECT_FALSE(out.plan);
    EXPECT_FALSE(out.trajectory);
}

TEST(ReplanManager, ReplacesWhenObstacleAppears) {
    PlannerConfig cfg;
    const Point3 goal(8, 0, 0);
    const Trajectory traj = initial_plan(cfg, goal);
    TemporalLocalMap map;
    map.update(PointCloud{bar(4.0, 0.3)});
    const double now = 0.4;
    const ReplanOutcome out = replan_manager_step(traj, now, map, goal, cfg);
    ASSERT_EQ(out.action, ReplanAction::Replaced);
    ASSERT_TRUE(out.collision);
    ASSERT_TRUE(out.trajectory);
    EXPECT_NEAR(out.replan_start_time, now + cfg.plan_budget, 1e-12);
    const Trajectory& next = *out.trajectory;
    // Identical to the old plan up to the handover, continuous across it.
    for (double t = 0.0; t <= out.replan_start_time; t += 0.01) {
        EXPECT_LE((next.state_at(t).p - traj.state_at(t).p).norm(), 1e-9);
    }
    const UavState before = traj.state_at(out.replan_start_time);
    const UavState after = next.state_at(out.replan_start_time + 1e-9);
    EXPECT_LE((before.p - after.p).norm(), 1e-6);
    EXPECT_LE((before.v - after.v).norm(), 1e-6);
    EXPECT_FALSE(check_trajectory(map, next, cfg.clearance, cfg.check_dt(), now));
    EXPECT_LE((next.state_at(next.end_time()).p - goal).norm(), cfg.goal_tolerance);
}

TEST(ReplanManager, SealedCorridorReportsFailure) {
    PlannerConfig cfg;
    cfg.max_expansions = 800;
    cfg.bounds = Box{Point3(-1, -1.5, -1.5), Point3(10, 1.5, 1.5)};
    const Point3 goal(8, 0, 0);
    const Trajectory traj = initial_plan(cfg, goal);
    TemporalLocalMap map;
    map.update(PointCloud{bar(4.0, 2.0, 2.0)});
    const ReplanOutcome out = replan_manager_step(traj, 0.2, map, goal, cfg);
    EXPECT_EQ(out.action, ReplanAction::Failure);
    ASSERT_TRUE(out.plan);
    EXPECT_FALSE(out.plan->ok());
    EXPECT_FALSE(out.trajectory);
}

TEST(ReplanManager, RelaxesClearanceWhenStartIsTooClose) {
    PlannerConfig cfg;
    TemporalLocalMap map;
    map.update(PointCloud{{Point3(0, 0.35, 0)}});
    double used = 0.0;
    bool relaxed = false;
    const PlanResult res = plan_with_relaxation(UavState{}, Point3(5, 0, 0), cfg, map, used, relaxed);
    EXPECT_TRUE(relaxed);
    EXPECT_LT(used, 0.35);
    EXPECT_GE(used, cfg.min_relaxed_clearance);
    EXPECT_TRUE(res.ok());

    cfg.relax_on_start_collision = false;
    const PlanResult strict = plan_with_relaxation(UavState{}, Point3(5, 0, 0), cfg, map, used, relaxed);
    EXPECT_FALSE(relaxed);
    EXPECT_EQ(strict.status, PlanStatus::StartInCollision);
}
