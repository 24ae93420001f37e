#pragma once

// Text exports of a RunLog. Formats:
//
//   events.log      "<frame> <t> <kind> <key=value ...>" one event per line
//   frames.csv      per-frame state rows (see write_frames_csv header)
//   trajectory.csv  final tracked trajectory sampled every 0.02 s
//   report.json     RunReport summary
//   timing.csv      per-stage wall-clock samples (the only non-reproducible output)
//
// Everything except timing.csv is a pure function of (scenario, seed).

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcavoid/sim/simulator.hpp"

namespace pcavoid::sim {

inline void write_events(std::ostream& os, const RunLog& log) {
    for (const Event& e : log.events) {
        os << e.frame << ' ' << detail::fmt(e.t, 3) << ' ' << e.kind;
        if (!e.detail.empty()) {
            os << ' ' << e.detail;
        }
        os << '\n';
    }
}

inline void write_frames_csv(std::ostream& os, const RunLog& log) {
    os << "frame,t,x,y,z,vx,vy,vz,ax,ay,az,scan_points,map_points,tree,gt_distance,action,hover\n";
    for (const FrameRecord& r : log.frames) {
        os << r.frame << ',' << detail::fmt(r.uav.t, 3);
        for (const Vec3* v : {&r.uav.p, &r.uav.v, &r.uav.a}) {
            for (int k = 0; k < 3; ++k) {
                os << ',' << detail::fmt((*v)[k], 6);
            }
        }
        os << ',' << r.scan_points << ',' << r.map_points << ',' << r.tree_index << ','
           << detail::fmt(std::min(r.gt_distance, 1e6), 6) << ',' << (r.action.empty() ? "none" : r.action) << ','
           << (r.hovering ? 1 : 0) << '\n';
    }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, double dt = 0.02) {
    os << "t,x,y,z,vx,vy,vz,ax,ay,az\n";
    if (traj.empty()) {
        return;
    }
    for (const UavState& s : sample_trajectory(traj, dt)) {
        os << detail::fmt(s.t, 4);
        for (const Vec3* v : {&s.p, &s.v, &s.a}) {
            for (int k = 0; k < 3; ++k) {
                os << ',' << detail::fmt((*v)[k], 6);
            }
        }
        os << '\n';
    }
}

/// Machine-readable run summary.
inline nlohmann::ordered_json run_report(const RunLog& log) {
    auto finite_or_null = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) {
            return v;
        }
        return nullptr;
    };
    nlohmann::ordered_json j;
    j["scenario"] = log.scenario;
    j["seed"] = log.seed;
    j["outcome"] = to_string(log.outcome);
    j["replan_count"] = log.replan_count;
    j["plan_count"] = log.plan_count;
    j["failure_count"] = log.failure_count;
    j["frames"] = log.frames.size();
    j["min_gt_clearance"] = finite_or_null(log.min_gt_clearance);
    j["min_gt_clearance_nominal"] = finite_or_null(log.min_gt_clearance_nominal);
    nlohmann::ordered_json by_obstacle = nlohmann::ordered_json::object();
    for (const auto& [name, d] : log.min_distance_by_obstacle) {
        by_obstacle[name] = finite_or_null(d);
    }
    j["min_distance_by_obstacle"] = by_obstacle;
    j["path_length"] = log.path_length;
    j["flight_duration"] = log.flight_duration;
    return j;
}

struct StageStats {
    std::size_t count = 0;
    double min = 0.0;
    double mean = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

/// Nearest-rank statistics; an empty sample yields all zeros.
inline StageStats stage_stats(std::vector<double> samples) {
    StageStats s;
    s.count = samples.size();
    if (samples.empty()) {
        return s;
    }
    std::sort(samples.begin(), samples.end());
    s.min = samples.front();
    s.max = samples.back();
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(samples.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
    s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

inline void write_timing_csv(std::ostream& os, const StageTiming& timing) {
    os << "stage,index,ms\n";
    auto dump = [&](const char* name, const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            os << name << ',' << i << ',' << detail::fmt(v[i], 4) << '\n';
        }
    };
    dump("map_update", timing.map_update_ms);
    dump("tree_build", timing.tree_build_ms);
    dump("plan", timing.plan_ms);
}

}  // namespace pcavoid::sim
