#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <variant>

#include "pcavoid/core/trajectory.hpp"
#include "pcavoid/spatial/temporal_map.hpp"

namespace pcavoid {

struct TrajectoryCollision {
    double time = 0.0;
    Point3 position;
    CollisionHit hit;
};

/// Sampling step that keeps the gap between samples at or below half the clearance at full speed.
inline double collision_check_dt(double clearance, double v_max) { return clearance / (2.0 * v_max); }

/// Samples `traj` every dt from t_from (end time included) and reports the first
/// sample within `clearance` of any map point.
inline std::optional<TrajectoryCollision> check_trajectory(const TemporalLocalMap& map, const Trajectory& traj,
                                                           double clearance, double dt, double t_from) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("check_trajectory: dt must be positive");
    }
    if (traj.empty()) {
        return std::nullopt;
    }
    for (const UavState& s : sample_trajectory(traj, dt, t_from)) {
        if (auto hit = map.collision(s.p, clearance)) {
            return TrajectoryCollision{s.t, s.p, *hit};
        }
    }
    return std::nullopt;
}

inline std::optional<TrajectoryCollision> check_trajectory(const TemporalLocalMap& map, const Trajectory& traj,
                                                           double clearance, double dt) {
    return check_trajectory(map, traj, clearance, dt, traj.start_time());
}

/// Upper bound on speed over a segment. Exact for constant acceleration (velocity
/// is linear per axis); for polynomials a dense sampled maximum padded by the
/// sampled acceleration times the half sample spacing.
inline double speed_bound(const Segment& seg) {
    if (const auto* ca = std::get_if<ConstantAccelSegment>(&seg)) {
        const Vec3 v0 = ca->start.v;
        const Vec3 v1 = ca->end().v;
        return v0.cwiseAbs().cwiseMax(v1.cwiseAbs()).norm();
    }
    const auto& poly = std::get<PolynomialSegment>(seg);
    constexpr int kSamples = 64;
    const double h = poly.duration() / kSamples;
    double v_peak = 0.0;
    double a_peak = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
        const UavState s = poly.at(h * i);
        v_peak = std::max(v_peak, s.v.norm());
        a_peak = std::max(a_peak, s.a.norm());
    }
    return 1.05 * v_peak + a_peak * h;
}

/// Conservative advancement along a segment: from each probe the path may move
/// (d - clearance - margin/2) before it could come within `clearance` of the
/// nearest point at distance d. Rejects as soon as a probe sits within
/// clearance + margin, so every accepted path keeps at least clearance + margin/2
/// at every instant, not just at samples.
inline bool segment_clear(const TemporalLocalMap& map, const Segment& seg, double clearance, double margin) {
    const double duration = segment_duration(seg);
    const double vmax = speed_bound(seg);
    double t = 0.0;
    for (;;) {
        const Point3 p = std::visit([t](const auto& s) { return s.at(t).p; }, seg);
        const double reach = clearance + margin + vmax * (duration - t);
        const auto d = map.distance_within(p, reach);
        if (!d) {
            return true;
        }
        if (*d < clearance + margin) {
            return false;
        }
        if (vmax <= 0.0) {
            return true;
        }
        t += (*d - clearance - 0.5 * margin) / vmax;
        if (t >= duration) {
            return true;
        }
    }
}

}  // namespace pcavoid
