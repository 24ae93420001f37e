#pragma once

#include <algorithm>
#include <optional>

#include "pcavoid/planner/kinodynamic_astar.hpp"
#include "pcavoid/spatial/trajectory_check.hpp"

namespace pcavoid {

enum class ReplanAction { Keep, Replaced, Failure };

inline const char* to_string(ReplanAction a) {
    switch (a) {
        case ReplanAction::Keep:
            return "keep";
        case ReplanAction::Replaced:
            return "replaced";
        case ReplanAction::Failure:
            return "failure";
    }
    return "unknown";
}

struct ReplanOutcome {
    ReplanAction action = ReplanAction::Keep;
    std::optional<Trajectory> trajectory;          // set when replaced
    std::optional<TrajectoryCollision> collision;  // what triggered the replan
    std::optional<PlanResult> plan;                // set whenever the planner ran
    double replan_start_time = 0.0;
    double clearance_used = 0.0;
    bool relaxed = false;
};

/// Plans from `start`; if the start sits inside clearance + margin and relaxation is
/// enabled, retries once with the clearance shrunk below the current obstacle distance.
inline PlanResult plan_with_relaxation(const UavState& start, const Point3& goal, const PlannerConfig& cfg,
                                       const TemporalLocalMap& map, double& clearance_used, bool& relaxed) {
    clearance_used = cfg.clearance;
    relaxed = false;
    if (cfg.relax_on_start_collision) {
        const auto d = map.distance_within(start.p, cfg.clearance + cfg.collision_margin);
        if (d) {
            const double shrunk = *d - cfg.collision_margin - 1e-3;
            if (shrunk >= cfg.min_relaxed_clearance) {
                PlannerConfig relaxed_cfg = cfg;
                relaxed_cfg.clearance = std::min(cfg.clearance, shrunk);
                clearance_used = relaxed_cfg.clearance;
                relaxed = true;
                return plan(start, goal, relaxed_cfg, map);
            }
        }
    }
    return plan(start, goal, cfg, map);
}

/// One tick of the event-driven replanner: keep the tracked trajectory while its
/// remainder is clear of the map; otherwise plan from the state `plan_budget`
/// ahead of the tracking time and splice the new plan in at that instant.
inline ReplanOutcome replan_manager_step(const Trajectory& current, double tracking_time,
                                         const TemporalLocalMap& map, const Point3& goal,
                                         const PlannerConfig& cfg) {
    ReplanOutcome out;
    out.clearance_used = cfg.clearance;
    auto hit = check_trajectory(map, current, cfg.clearance, cfg.check_dt(), tracking_time);
    if (!hit) {
        out.action = ReplanAction::Keep;
        return out;
    }
    out.collision = hit;
    const double t_start = std::clamp(tracking_time + cfg.plan_budget, current.start_time(), current.end_time());
    out.replan_start_time = t_start;
    const UavState start = current.state_at(t_start);

    PlanResult result = plan_with_relaxation(start, goal, cfg, map, out.clearance_used, out.relaxed);
    if (!result.ok()) {
        out.action = ReplanAction::Failure;
        out.plan = std::move(result);
        return out;
    }
    Trajectory replacement = current.truncated(t_start);
    if (replacement.empty()) {
        replacement = *result.trajectory;
    } else {
        replacement.append_all(*result.trajectory);
    }
    out.action = ReplanAction::Replaced;
    out.trajectory = std::move(replacement);
    out.plan = std::move(result);
    return out;
}

}  // namespace pcavoid
