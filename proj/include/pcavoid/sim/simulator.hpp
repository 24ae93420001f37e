#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcavoid/core/cloud_io.hpp"
#include "pcavoid/core/trajectory.hpp"
#include "pcavoid/gridmap/occupancy_grid.hpp"
#include "pcavoid/planner/replan_manager.hpp"
#include "pcavoid/sim/lidar.hpp"
#include "pcavoid/sim/scenario.hpp"
#include "pcavoid/spatial/temporal_map.hpp"

namespace pcavoid::sim {

enum class Outcome { GoalReached, Collision, PlannerFailure, Timeout };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::GoalReached:
            return "goal_reached";
        case Outcome::Collision:
            return "collision";
        case Outcome::PlannerFailure:
            return "planner_failure";
        case Outcome::Timeout:
            return "timeout";
    }
    return "unknown";
}

struct Event {
    int frame = 0;
    double t = 0.0;
    std::string kind;
    std::string detail;
};

struct FrameRecord {
    int frame = 0;
    UavState uav;  // state after this frame's advance
    std::size_t scan_points = 0;
    std::size_t map_points = 0;
    int tree_index = 0;
    double gt_distance = 0.0;
    std::string action;  // keep / replaced / failure / initial / hover / none
    bool hovering = false;
};

struct StageTiming {
    std::vector<double> map_update_ms;  // accumulate + filter + tree build
    std::vector<double> tree_build_ms;
    std::vector<double> plan_ms;
};

struct MapSnapshot {
    int frame = 0;
    double t = 0.0;
    std::vector<PointCloud> trees;
};

struct RunLog {
    std::string scenario;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Timeout;
    std::vector<Event> events;
    std::vector<FrameRecord> frames;
    int plan_count = 0;
    int replan_count = 0;  // replacements of a tracked trajectory after a collision
    int failure_count = 0;
    double min_gt_clearance = std::numeric_limits<double>::infinity();
    // Same as above but ignoring frames flagged as planner-failure hover.
    double min_gt_clearance_nominal = std::numeric_limits<double>::infinity();
    std::map<std::string, double> min_distance_by_obstacle;
    double path_length = 0.0;
    double flight_duration = 0.0;
    StageTiming timing;  // wall-clock; not reproducible, never written to the run log
    std::optional<Trajectory> final_trajectory;
    std::vector<MapSnapshot> snapshots;
};

struct SimOptions {
    bool keep_snapshots = false;
};

namespace detail {

inline std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string fmt(const Vec3& v, int decimals = 4) {
    return "(" + fmt(v.x(), decimals) + "," + fmt(v.y(), decimals) + "," + fmt(v.z(), decimals) + ")";
}

inline std::string describe(const SearchReport& r) {
    return "expansions=" + std::to_string(r.expansions) + " open=" + std::to_string(r.open_size) +
           " closed=" + std::to_string(r.closed_size) + " analytic_attempts=" + std::to_string(r.analytic_attempts) +
           " analytic=" + (r.analytic_success ? "1" : "0") + " cost=" + fmt(r.cost);
}

}  // namespace detail

/// Closed-loop run: per frame, scan at the current pose, update the temporal map,
/// run the replan manager, then advance the vehicle along the tracked trajectory.
class Simulator {
public:
    explicit Simulator(Scenario scenario, SimOptions options = {})
        : sc_(std::move(scenario)), options_(options), map_(sc_.map), pattern_(sc_.sensor, sc_.seed) {
        sc_.validate();
    }

    const TemporalLocalMap& map() const { return map_; }

    RunLog run() {
        using Clock = std::chrono::steady_clock;
        RunLog log;
        log.scenario = sc_.name;
        log.seed = sc_.seed;
        for (const auto& ob : sc_.env.obstacles) {
            log.min_distance_by_obstacle[ob.name] = std::numeric_limits<double>::infinity();
        }

        const double dt = sc_.sensor.frame_period();
        const int max_frames = static_cast<int>(std::ceil(sc_.sim.timeout / dt));
        UavState uav = sc_.start;
        uav.t = 0.0;
        double yaw = sc_.start_yaw ? *sc_.start_yaw
                                   : std::atan2(sc_.goal.y() - uav.p.y(), sc_.goal.x() - uav.p.x());
        std::optional<Trajectory> tracked;
        bool hovering = false;
        int failure_streak = 0;

        const double start_distance = sc_.env.empty() ? std::numeric_limits<double>::infinity()
                                                      : sc_.env.distance(uav.p, 0.0);
        if (start_distance < sc_.sim.collision_radius) {
            throw ScenarioError("start position is inside an obstacle");
        }
        log.events.push_back({0, 0.0, "start", "position=" + detail::fmt(uav.p) + " goal=" + detail::fmt(sc_.goal)});

        for (int frame = 0; frame < max_frames; ++frame) {
            const double t = frame * dt;
            FrameRecord rec;
            rec.frame = frame;

            // Scan at the current pose; sensor faces the horizontal velocity.
            const double vh = std::hypot(uav.v.x(), uav.v.y());
            if (vh > 0.1) {
                yaw = std::atan2(uav.v.y(), uav.v.x());
            }
            const PointCloud scan = generate_scan(sc_.env, sc_.sensor, SensorPose::level(uav.p, yaw), t, pattern_);
            mark_seen(uav.p, scan);
            const MapUpdateInfo info = map_.update(scan);
            log.timing.map_update_ms.push_back(info.accumulate_filter_ms + info.build_ms);
            log.timing.tree_build_ms.push_back(info.build_ms);
            rec.scan_points = scan.size();
            rec.map_points = map_.total_points();
            rec.tree_index = info.tree_index;
            log.events.push_back({frame, t, "scan",
                                  "points=" + std::to_string(scan.size()) + " tree=" + std::to_string(info.tree_index) +
                                      " tree_points=" + std::to_string(info.tree_size) +
                                      (info.cleared ? " restart=1" : "") + (info.wrapped ? " wrap=1" : "")});

            // Planning.
            const bool need_fresh = !tracked || hovering ||
                                    (t >= tracked->end_time() && (uav.p - sc_.goal).norm() > sc_.planner.goal_tolerance);
            if (need_fresh) {
                UavState from = uav;
                from.t = t;
                double clearance_used = 0.0;
                bool relaxed = false;
                const auto t0 = Clock::now();
                PlanResult res = plan_with_relaxation(from, sc_.goal, sc_.planner, map_, clearance_used, relaxed);
                log.timing.plan_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
                ++log.plan_count;
                if (res.ok()) {
                    tracked = *res.trajectory;
                    hovering = false;
                    failure_streak = 0;
                    rec.action = "initial";
                    log.events.push_back({frame, t, "plan",
                                          "status=success kind=fresh " + detail::describe(res.report) +
                                              relax_note(relaxed, clearance_used) + unseen_note(*tracked, t)});
                    snapshot(log, frame, t);
                } else {
                    rec.action = "failure";
                    on_failure(log, frame, t, uav, res, tracked, hovering, failure_streak);
                }
            } else {
                const auto t0 = Clock::now();
                ReplanOutcome out = replan_manager_step(*tracked, t, map_, sc_.goal, sc_.planner);
                if (out.plan) {
                    log.timing.plan_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
                    ++log.plan_count;
                }
                rec.action = to_string(out.action);
                if (out.action == ReplanAction::Replaced) {
                    tracked = *out.trajectory;
                    ++log.replan_count;
                    failure_streak = 0;
                    log.events.push_back(
                        {frame, t, "replan",
                         "collision_t=" + detail::fmt(out.collision->time) +
                             " obstacle_point=" + detail::fmt(out.collision->hit.nearest.point) +
                             " start_t=" + detail::fmt(out.replan_start_time) + " " + detail::describe(out.plan->report) +
                             relax_note(out.relaxed, out.clearance_used) + unseen_note(*tracked, t)});
                    snapshot(log, frame, t);
                } else if (out.action == ReplanAction::Failure) {
                    log.events.push_back({frame, t, "collision_ahead",
                                          "collision_t=" + detail::fmt(out.collision->time) +
                                              " obstacle_point=" + detail::fmt(out.collision->hit.nearest.point)});
                    on_failure(log, frame, t, uav, *out.plan, tracked, hovering, failure_streak);
                }
            }

            // Advance one step along the tracked trajectory.
            const double t_next = t + dt;
            UavState next = uav;
            if (tracked) {
                const UavState ref = tracked->state_at(t_next);
                if (sc_.sim.tracking_lag > 0.0) {
                    const double k = 1.0 - std::exp(-dt / sc_.sim.tracking_lag);
                    next.p = uav.p + k * (ref.p - uav.p);
                    next.v = (next.p - uav.p) / dt;
                    next.a = ref.a;
                } else {
                    next = ref;
                }
                if (t_next >= tracked->end_time()) {
                    next.v = Vec3::Zero();
                    next.a = Vec3::Zero();
                }
            }
            next.t = t_next;
            log.path_length += (next.p - uav.p).norm();
            uav = next;
            rec.uav = uav;
            rec.hovering = hovering;

            // Ground-truth audit at the new time, independent of the map.
            double gt = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < sc_.env.obstacles.size(); ++i) {
                const double d = sc_.env.distance_to(i, uav.p, t_next);
                auto& slot = log.min_distance_by_obstacle[sc_.env.obstacles[i].name];
                slot = std::min(slot, d);
                gt = std::min(gt, d);
            }
            rec.gt_distance = gt;
            log.min_gt_clearance = std::min(log.min_gt_clearance, gt);
            if (!hovering) {
                log.min_gt_clearance_nominal = std::min(log.min_gt_clearance_nominal, gt);
            }
            log.frames.push_back(rec);

            if (gt < sc_.sim.collision_radius) {
                log.outcome = Outcome::Collision;
                log.events.push_back({frame, t_next, "collision", "gt_distance=" + detail::fmt(gt)});
                return finish(log, t_next, tracked);
            }
            if ((uav.p - sc_.goal).norm() <= sc_.planner.goal_tolerance) {
                log.outcome = Outcome::GoalReached;
                log.events.push_back({frame, t_next, "goal_reached", "position=" + detail::fmt(uav.p)});
                return finish(log, t_next, tracked);
            }
            if (failure_streak >= sc_.sim.failure_patience) {
                log.outcome = Outcome::PlannerFailure;
                log.events.push_back({frame, t_next, "planner_failure",
                                      "consecutive_failures=" + std::to_string(failure_streak)});
                return finish(log, t_next, tracked);
            }
        }
        log.outcome = Outcome::Timeout;
        log.events.push_back({max_frames, max_frames * dt, "timeout", ""});
        return finish(log, max_frames * dt, tracked);
    }

private:
    RunLog& finish(RunLog& log, double t, const std::optional<Trajectory>& tracked) {
        log.flight_duration = t;
        log.final_trajectory = tracked;
        return log;
    }

    static std::string relax_note(bool relaxed, double clearance) {
        return relaxed ? " relaxed_clearance=" + detail::fmt(clearance) : "";
    }

    void on_failure(RunLog& log, int frame, double t, const UavState& uav, const PlanResult& res,
                    std::optional<Trajectory>& tracked, bool& hovering, int& failure_streak) {
        ++log.failure_count;
        ++failure_streak;
        log.events.push_back(
            {frame, t, "plan", std::string("status=") + to_string(res.status) + " " + detail::describe(res.report)});
        if (!hovering) {
            UavState s = tracked ? tracked->state_at(t) : uav;
            s.t = t;
            tracked = brake_trajectory(s, sc_.planner.limits.a_max);
            hovering = true;
            log.events.push_back({frame, t, "hover", "position=" + detail::fmt(s.p)});
        }
    }

    void snapshot(RunLog& log, int frame, double t) {
        if (!options_.keep_snapshots) {
            return;
        }
        MapSnapshot snap{frame, t, {}};
        for (std::size_t i = 0; i < map_.tree_count(); ++i) {
            const auto pts = map_.tree(i).points();
            snap.trees.push_back(PointCloud{std::vector<Point3>(pts.begin(), pts.end()), t});
        }
        log.snapshots.push_back(std::move(snap));
    }

    // Coarse record of space crossed by sensor rays, for logging plans that
    // pass through never-scanned cells. Every 8th ray is enough at this cell size.
    void mark_seen(const Point3& origin, const PointCloud& scan) {
        for (std::size_t i = 0; i < scan.points.size(); i += 8) {
            for (const CellIndex& c : gridmap::traverse(origin, scan.points[i], sc_.sim.unseen_cell)) {
                seen_.insert(c);
            }
        }
    }

    std::string unseen_note(const Trajectory& traj, double t_from) const {
        std::size_t unseen = 0;
        std::size_t total = 0;
        for (const UavState& s : sample_trajectory(traj, sc_.planner.check_dt(), t_from)) {
            ++total;
            if (!seen_.count(cell_of(s.p, sc_.sim.unseen_cell))) {
                ++unseen;
            }
        }
        return " unseen_samples=" + std::to_string(unseen) + "/" + std::to_string(total);
    }

    Scenario sc_;
    SimOptions options_;
    TemporalLocalMap map_;
    ScanPatternGenerator pattern_;
    std::unordered_set<CellIndex, CellIndexHash> seen_;
};

inline RunLog simulate(const Scenario& scenario, SimOptions options = {}) {
    Simulator sim(scenario, options);
    return sim.run();
}

}  // namespace pcavoid::sim
