#pragma once

#include <optional>
#include <stdexcept>

#include "pcavoid/core/types.hpp"

namespace pcavoid {

enum class VelocityLimitMode {
    PerAxis,  // |v_i| <= v_max for each axis
    Norm,     // ||v|| <= v_max
};

struct Box {
    Point3 min = Point3::Constant(-1e9);
    Point3 max = Point3::Constant(1e9);

    bool contains(const Point3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

struct PlannerConfig {
    KinodynamicLimits limits;
    double clearance = 0.45;
    double goal_tolerance = 0.5;
    double prune_cell = 0.225;  // 0.5 * clearance
    double time_weight = 1.0;   // rho, cost per second of flight
    int max_expansions = 4000;
    VelocityLimitMode velocity_limit = VelocityLimitMode::PerAxis;

    // Distance the popped node must gain on the goal before analytic expansion is retried.
    double analytic_trigger_distance = 1.0;
    // Search paths must keep clearance + margin at probes and clearance + margin/2 everywhere.
    double collision_margin = 0.02;
    // Replan handover lead time: the new plan starts this far ahead of the tracking time.
    double plan_budget = 0.03;
    // On a start-in-collision error the replan manager retries with the clearance
    // shrunk to just below the current obstacle distance, down to this floor.
    double min_relaxed_clearance = 0.15;
    bool relax_on_start_collision = true;

    std::optional<Box> bounds;

    void validate() const {
        limits.validate();
        if (!(clearance > 0.0) || !(goal_tolerance > 0.0) || !(prune_cell > 0.0) || !(time_weight > 0.0)) {
            throw std::invalid_argument("planner: clearance, goal_tolerance, prune_cell and time_weight must be positive");
        }
        if (max_expansions < 1) {
            throw std::invalid_argument("planner: max_expansions must be >= 1");
        }
        if (!(analytic_trigger_distance > 0.0) || !(collision_margin >= 0.0) || !(plan_budget >= 0.0)) {
            throw std::invalid_argument("planner: invalid analytic trigger, margin or plan budget");
        }
    }

    double check_dt() const { return clearance / (2.0 * limits.v_max); }
};

}  // namespace pcavoid
