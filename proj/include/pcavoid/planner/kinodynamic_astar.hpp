#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcavoid/core/trajectory.hpp"
#include "pcavoid/core/voxel_filter.hpp"
#include "pcavoid/planner/config.hpp"
#include "pcavoid/spatial/temporal_map.hpp"
#include "pcavoid/spatial/trajectory_check.hpp"

namespace pcavoid {

struct SearchNode {
    UavState state;
    double g_cost = 0.0;
    double f_cost = 0.0;
    int parent = -1;  // index into the search's node store, -1 for the root
    Vec3 u = Vec3::Zero();
};

/// The 27 controls {-a_max, 0, +a_max}^3 in a fixed order (x slowest, z fastest).
inline std::array<Vec3, 27> control_set(double a_max) {
    std::array<Vec3, 27> out;
    const double levels[3] = {-a_max, 0.0, a_max};
    int k = 0;
    for (double ux : levels) {
        for (double uy : levels) {
            for (double uz : levels) {
                out[static_cast<std::size_t>(k++)] = Vec3(ux, uy, uz);
            }
        }
    }
    return out;
}

inline double edge_cost(const Vec3& u, double tau, double time_weight) {
    return (u.squaredNorm() + time_weight) * tau;
}

/// Time lower bound to the goal scaled by the time weight.
inline double heuristic(const UavState& state, const Point3& goal, const PlannerConfig& cfg) {
    return (state.p - goal).norm() / cfg.limits.v_max * cfg.time_weight;
}

inline bool velocity_feasible(const Vec3& v, const PlannerConfig& cfg) {
    constexpr double kTol = 1e-9;
    if (cfg.velocity_limit == VelocityLimitMode::Norm) {
        return v.norm() <= cfg.limits.v_max + kTol;
    }
    return v.cwiseAbs().maxCoeff() <= cfg.limits.v_max + kTol;
}

inline bool within_bounds(const Segment& seg, const PlannerConfig& cfg) {
    if (!cfg.bounds) {
        return true;
    }
    const double duration = segment_duration(seg);
    const int n = std::max(2, static_cast<int>(std::ceil(duration / cfg.check_dt())));
    for (int i = 0; i <= n; ++i) {
        const double t = duration * i / n;
        const Point3 p = std::visit([t](const auto& s) { return s.at(t).p; }, seg);
        if (!cfg.bounds->contains(p)) {
            return false;
        }
    }
    return true;
}

/// Children of `node` under the 27 primitives: collision-free, velocity-feasible,
/// in bounds. Children carry g but not f; the caller adds the heuristic.
/// `skip(end_state, g)` lets the search drop a child before its collision check.
template <class Skip>
std::vector<SearchNode> expand(const SearchNode& node, const PlannerConfig& cfg, const TemporalLocalMap& map,
                               Skip&& skip) {
    std::vector<SearchNode> children;
    if (map.collides(node.state.p, cfg.clearance)) {
        return children;
    }
    const double tau = cfg.limits.primitive_duration;
    for (const Vec3& u : control_set(cfg.limits.a_max)) {
        // Velocity is linear along a primitive, so per-axis and norm extremes sit at the endpoints.
        const UavState end = propagate(node.state, u, tau);
        if (!velocity_feasible(end.v, cfg)) {
            continue;
        }
        const double g = node.g_cost + edge_cost(u, tau, cfg.time_weight);
        if (skip(end, g)) {
            continue;
        }
        UavState start = node.state;
        start.a = u;
        const Segment seg = ConstantAccelSegment{start, u, tau};
        if (!within_bounds(seg, cfg) || !segment_clear(map, seg, cfg.clearance, cfg.collision_margin)) {
            continue;
        }
        SearchNode child;
        child.state = end;
        child.g_cost = g;
        child.u = u;
        children.push_back(child);
    }
    return children;
}

inline std::vector<SearchNode> expand(const SearchNode& node, const PlannerConfig& cfg, const TemporalLocalMap& map) {
    return expand(node, cfg, map, [](const UavState&, double) { return false; });
}

inline double polynomial_cost(const PolynomialSegment& seg, double time_weight) {
    // Composite Simpson on ||a||^2; a is cubic so ||a||^2 is degree 6 and 64 panels are plenty.
    constexpr int kPanels = 64;
    const double h = seg.duration() / kPanels;
    double acc = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
        const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * seg.at(h * i).a.squaredNorm();
    }
    return acc * h / 3.0 + time_weight * seg.duration();
}

inline constexpr double kMinExpansionDuration = 0.05;

/// Quintic from `state` to (goal, 0, 0), trying durations d/v, 1.5 d/v, 2 d/v.
/// Returns the first candidate that is within limits at every sample and clear of the map.
inline std::optional<PolynomialSegment> analytic_expansion(const UavState& state, const Point3& goal,
                                                          const PlannerConfig& cfg, const TemporalLocalMap& map) {
    const double d = (goal - state.p).norm();
    const double base = d / cfg.limits.v_max;
    for (double factor : {1.0, 1.5, 2.0}) {
        const double duration = std::max(kMinExpansionDuration, factor * base);
        const PolynomialSegment seg =
            PolynomialSegment::connect(state, goal, Vec3::Zero(), Vec3::Zero(), duration);
        const int n = std::max(8, static_cast<int>(std::ceil(duration / std::min(cfg.check_dt(), duration / 32.0))));
        bool feasible = true;
        for (int i = 0; i <= n && feasible; ++i) {
            const UavState s = seg.at(duration * i / n);
            feasible = velocity_feasible(s.v, cfg) && s.a.cwiseAbs().maxCoeff() <= cfg.limits.a_max + 1e-9;
        }
        if (!feasible || !within_bounds(seg, cfg)) {
            continue;
        }
        if (!segment_clear(map, seg, cfg.clearance, cfg.collision_margin)) {
            continue;
        }
        return seg;
    }
    return std::nullopt;
}

enum class PlanStatus {
    Success,
    StartInCollision,
    NoPath,           // open set exhausted
    ExpansionLimit,   // max_expansions reached
};

inline const char* to_string(PlanStatus s) {
    switch (s) {
        case PlanStatus::Success:
            return "success";
        case PlanStatus::StartInCollision:
            return "start_in_collision";
        case PlanStatus::NoPath:
            return "no_path";
        case PlanStatus::ExpansionLimit:
            return "expansion_limit";
    }
    return "unknown";
}

struct SearchReport {
    int expansions = 0;
    std::size_t open_size = 0;
    std::size_t closed_size = 0;
    std::size_t nodes_generated = 0;
    int analytic_attempts = 0;
    bool analytic_success = false;
    double cost = 0.0;
    double wall_ms = 0.0;  // not deterministic; kept out of run logs
};

struct PlanResult {
    PlanStatus status = PlanStatus::NoPath;
    std::optional<Trajectory> trajectory;
    SearchReport report;
    std::vector<double> chain_costs;  // g along the returned node chain, root first

    bool ok() const { return status == PlanStatus::Success; }
};

/// Kinodynamic A* from `start` toward `goal` over the local map.
inline PlanResult plan(const UavState& start, const Point3& goal, const PlannerConfig& cfg,
                       const TemporalLocalMap& map) {
    using Clock = std::chrono::steady_clock;
    const auto t_begin = Clock::now();
    PlanResult result;
    auto finish = [&](PlanStatus status) {
        result.status = status;
        result.report.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t_begin).count();
        return result;
    };

    if (map.collides(start.p, cfg.clearance)) {
        return finish(PlanStatus::StartInCollision);
    }

    std::vector<SearchNode> nodes;
    struct OpenEntry {
        double f;
        double h;
        std::uint64_t seq;
        int node;
    };
    // Lower f first, then lower h, then insertion order.
    auto worse = [](const OpenEntry& a, const OpenEntry& b) {
        if (a.f != b.f) {
            return a.f > b.f;
        }
        if (a.h != b.h) {
            return a.h > b.h;
        }
        return a.seq > b.seq;
    };
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, decltype(worse)> open(worse);
    std::unordered_map<CellIndex, double, CellIndexHash> best_g;
    std::unordered_map<CellIndex, bool, CellIndexHash> closed;
    std::uint64_t seq = 0;

    SearchNode root;
    root.state = start;
    const double h0 = heuristic(start, goal, cfg);
    root.f_cost = h0;
    nodes.push_back(root);
    best_g[cell_of(start.p, cfg.prune_cell)] = 0.0;
    open.push({h0, h0, seq++, 0});

    auto build_chain = [&](int leaf) {
        std::vector<int> chain;
        for (int i = leaf; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
            chain.push_back(i);
        }
        std::reverse(chain.begin(), chain.end());
        Trajectory traj(start.t);
        for (std::size_t k = 0; k < chain.size(); ++k) {
            const SearchNode& n = nodes[static_cast<std::size_t>(chain[k])];
            result.chain_costs.push_back(n.g_cost);
            if (k > 0) {
                UavState s0 = nodes[static_cast<std::size_t>(chain[k - 1])].state;
                s0.a = n.u;
                traj.append(ConstantAccelSegment{s0, n.u, cfg.limits.primitive_duration});
            }
        }
        return traj;
    };

    double last_attempt_distance = std::numeric_limits<double>::infinity();
    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        const SearchNode current = nodes[static_cast<std::size_t>(top.node)];
        const CellIndex cell = cell_of(current.state.p, cfg.prune_cell);
        if (current.g_cost > best_g[cell]) {
            continue;  // superseded by a cheaper node in the same cell
        }
        closed[cell] = true;
        if (result.report.expansions >= cfg.max_expansions) {
            result.report.open_size = open.size() + 1;
            result.report.closed_size = closed.size();
            result.report.nodes_generated = nodes.size();
            return finish(PlanStatus::ExpansionLimit);
        }
        ++result.report.expansions;

        const double dist = (current.state.p - goal).norm();
        if (dist <= cfg.goal_tolerance && top.node != 0) {
            result.trajectory = build_chain(top.node);
            result.report.cost = current.g_cost;
            result.report.open_size = open.size();
            result.report.closed_size = closed.size();
            result.report.nodes_generated = nodes.size();
            return finish(PlanStatus::Success);
        }

        if (top.node == 0 || dist <= last_attempt_distance - cfg.analytic_trigger_distance) {
            last_attempt_distance = dist;
            ++result.report.analytic_attempts;
            if (auto tail = analytic_expansion(current.state, goal, cfg, map)) {
                Trajectory traj = build_chain(top.node);
                traj.append(*tail);
                const double tail_cost = polynomial_cost(*tail, cfg.time_weight);
                result.chain_costs.push_back(current.g_cost + tail_cost);
                result.trajectory = std::move(traj);
                result.report.analytic_success = true;
                result.report.cost = current.g_cost + tail_cost;
                result.report.open_size = open.size();
                result.report.closed_size = closed.size();
                result.report.nodes_generated = nodes.size();
                return finish(PlanStatus::Success);
            }
        }

        // Children that the prune grid would reject anyway skip the collision check;
        // best_g only decreases, so this drops nothing the loop below would keep.
        auto pruned = [&](const UavState& end, double g) {
            const auto it = best_g.find(cell_of(end.p, cfg.prune_cell));
            return it != best_g.end() && it->second <= g;
        };
        for (SearchNode& child : expand(current, cfg, map, pruned)) {
            const CellIndex child_cell = cell_of(child.state.p, cfg.prune_cell);
            auto it = best_g.find(child_cell);
            if (it != best_g.end() && it->second <= child.g_cost) {
                continue;
            }
            best_g[child_cell] = child.g_cost;
            const double h = heuristic(child.state, goal, cfg);
            child.f_cost = child.g_cost + h;
            child.parent = top.node;
            nodes.push_back(child);
            open.push({child.f_cost, h, seq++, static_cast<int>(nodes.size() - 1)});
        }
    }
    result.report.closed_size = closed.size();
    result.report.nodes_generated = nodes.size();
    return finish(PlanStatus::NoPath);
}

/// Per-sample audit of a returned trajectory: limits on every segment and map clearance
/// at the check density. Returns an empty string when everything passes.
inline std::string audit_trajectory(const Trajectory& traj, const PlannerConfig& cfg, const TemporalLocalMap& map,
                                    double clearance) {
    const double dt = cfg.check_dt();
    for (std::size_t i = 0; i < traj.segments().size(); ++i) {
        const Segment& seg = traj.segments()[i];
        const double duration = segment_duration(seg);
        const int n = std::max(1, static_cast<int>(std::ceil(duration / dt)));
        for (int k = 0; k <= n; ++k) {
            const UavState s = std::visit([&](const auto& x) { return x.at(duration * k / n); }, seg);
            if (!velocity_feasible(s.v, cfg)) {
                return "velocity limit exceeded in segment " + std::to_string(i);
            }
            if (s.a.cwiseAbs().maxCoeff() > cfg.limits.a_max + 1e-9) {
                return "acceleration limit exceeded in segment " + std::to_string(i);
            }
        }
    }
    if (auto hit = check_trajectory(map, traj, clearance, dt)) {
        return "clearance violated at t=" + std::to_string(hit->time);
    }
    return {};
}

}  // namespace pcavoid
