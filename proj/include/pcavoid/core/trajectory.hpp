#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pcavoid/core/types.hpp"

namespace pcavoid {

/// Closed-form double-integrator propagation under constant control `u` for `tau` seconds.
inline UavState propagate(const UavState& s, const Vec3& u, double tau) {
    if (!s.finite() || !is_finite(u) || !std::isfinite(tau)) {
        throw std::invalid_argument("propagate: non-finite input");
    }
    if (tau < 0.0) {
        throw std::invalid_argument("propagate: negative duration");
    }
    if (tau == 0.0) {
        return s;
    }
    UavState out;
    out.t = s.t + tau;
    out.p = s.p + s.v * tau + 0.5 * u * tau * tau;
    out.v = s.v + u * tau;
    out.a = u;
    return out;
}

/// One constant-acceleration piece; the motion primitive of the search.
struct ConstantAccelSegment {
    UavState start;
    Vec3 u = Vec3::Zero();
    double tau = 0.0;

    double duration() const { return tau; }

    // Evaluates at local time in [0, tau]. The returned state carries a = u even at 0.
    UavState at(double local_t) const {
        UavState s = propagate(start, u, std::clamp(local_t, 0.0, tau));
        s.a = u;
        return s;
    }

    UavState end() const { return at(tau); }
};

/// Quintic per axis: p(t) = sum_k coeffs(axis, k) * t^k, local time in [0, duration].
struct PolynomialSegment {
    Eigen::Matrix<double, 3, 6> coeffs = Eigen::Matrix<double, 3, 6>::Zero();
    double duration_s = 0.0;

    double duration() const { return duration_s; }

    UavState at(double local_t, double t_offset = 0.0) const {
        const double t = std::clamp(local_t, 0.0, duration_s);
        UavState s;
        s.t = t_offset + t;
        for (int axis = 0; axis < 3; ++axis) {
            double p = 0.0, v = 0.0, a = 0.0;
            // Horner on the polynomial and its derivatives.
            for (int k = 5; k >= 0; --k) {
                p = p * t + coeffs(axis, k);
            }
            for (int k = 5; k >= 1; --k) {
                v = v * t + k * coeffs(axis, k);
            }
            for (int k = 5; k >= 2; --k) {
                a = a * t + k * (k - 1) * coeffs(axis, k);
            }
            s.p[axis] = p;
            s.v[axis] = v;
            s.a[axis] = a;
        }
        return s;
    }

    /// Quintic connecting `from` to a target (position, velocity, acceleration) in `duration` seconds.
    static PolynomialSegment connect(const UavState& from, const Vec3& p1, const Vec3& v1, const Vec3& a1,
                                     double duration) {
        if (!(duration > 0.0)) {
            throw std::invalid_argument("PolynomialSegment::connect: duration must be positive");
        }
        PolynomialSegment seg;
        seg.duration_s = duration;
        const double T = duration;
        const double T2 = T * T;
        for (int axis = 0; axis < 3; ++axis) {
            const double p0 = from.p[axis];
            const double v0 = from.v[axis];
            const double a0 = from.a[axis];
            const double dp = p1[axis] - (p0 + v0 * T + 0.5 * a0 * T2);
            const double dv = v1[axis] - (v0 + a0 * T);
            const double da = a1[axis] - a0;
            seg.coeffs(axis, 0) = p0;
            seg.coeffs(axis, 1) = v0;
            seg.coeffs(axis, 2) = 0.5 * a0;
            seg.coeffs(axis, 3) = (10.0 * dp - 4.0 * dv * T + 0.5 * da * T2) / (T2 * T);
            seg.coeffs(axis, 4) = (-15.0 * dp + 7.0 * dv * T - da * T2) / (T2 * T2);
            seg.coeffs(axis, 5) = (6.0 * dp - 3.0 * dv * T + 0.5 * da * T2) / (T2 * T2 * T);
        }
        return seg;
    }
};

using Segment = std::variant<ConstantAccelSegment, PolynomialSegment>;

inline double segment_duration(const Segment& seg) {
    return std::visit([](const auto& s) { return s.duration(); }, seg);
}

/// Time-contiguous chain of segments starting at t0. Position and velocity are
/// continuous across joins; acceleration may jump.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(double t0) : t0_(t0) {}

    double start_time() const { return t0_; }
    double duration() const { return starts_.empty() ? 0.0 : starts_.back() + segment_duration(segments_.back()); }
    double end_time() const { return t0_ + duration(); }
    bool empty() const { return segments_.empty(); }
    const std::vector<Segment>& segments() const { return segments_; }

    /// Absolute start time of segment i.
    double segment_start(std::size_t i) const { return t0_ + starts_.at(i); }

    void append(Segment seg) {
        if (!(segment_duration(seg) > 0.0)) {
            throw std::invalid_argument("Trajectory::append: segment duration must be positive");
        }
        starts_.push_back(duration());
        segments_.push_back(std::move(seg));
    }

    /// State at absolute time t, clamped to [start_time, end_time].
    UavState state_at(double t) const {
        if (segments_.empty()) {
            throw std::logic_error("Trajectory::state_at on empty trajectory");
        }
        const double local = std::clamp(t - t0_, 0.0, duration());
        // Last segment whose start <= local.
        auto it = std::upper_bound(starts_.begin(), starts_.end(), local);
        std::size_t idx = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
        const double seg_local = local - starts_[idx];
        UavState s = std::visit([&](const auto& seg) { return seg.at(seg_local); }, segments_[idx]);
        s.t = t0_ + local;
        return s;
    }

    /// Copy keeping only [start_time, t_end]; the segment straddling t_end is shortened.
    Trajectory truncated(double t_end) const {
        Trajectory out(t0_);
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const double s0 = t0_ + starts_[i];
            if (s0 >= t_end) {
                break;
            }
            Segment seg = segments_[i];
            const double keep = std::min(segment_duration(seg), t_end - s0);
            std::visit(
                [keep](auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, ConstantAccelSegment>) {
                        s.tau = keep;
                    } else {
                        s.duration_s = keep;
                    }
                },
                seg);
            if (keep > 0.0) {
                out.append(std::move(seg));
            }
        }
        return out;
    }

    void append_all(const Trajectory& other) {
        for (const auto& seg : other.segments_) {
            append(seg);
        }
    }

private:
    double t0_ = 0.0;
    std::vector<double> starts_;  // offsets from t0_
    std::vector<Segment> segments_;
};

/// States at t0, t0+dt, ... plus the exact final time.
inline std::vector<UavState> sample_trajectory(const Trajectory& traj, double dt, double t_from) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("sample_trajectory: dt must be positive");
    }
    std::vector<UavState> out;
    if (traj.empty()) {
        return out;
    }
    const double t_begin = std::clamp(t_from, traj.start_time(), traj.end_time());
    const double span = traj.end_time() - t_begin;
    const double eps = 1e-9 * std::max(1.0, span);
    for (std::size_t k = 0;; ++k) {
        const double offset = static_cast<double>(k) * dt;
        if (offset >= span - eps) {
            break;
        }
        out.push_back(traj.state_at(t_begin + offset));
    }
    out.push_back(traj.state_at(traj.end_time()));
    return out;
}

inline std::vector<UavState> sample_trajectory(const Trajectory& traj, double dt) {
    return sample_trajectory(traj, dt, traj.start_time());
}

/// Stop each axis at full deceleration, then hold. Used for emergency hover.
inline Trajectory brake_trajectory(const UavState& s, double a_max) {
    Trajectory traj(s.t);
    UavState cur = s;
    cur.a = Vec3::Zero();
    for (int guard = 0; guard < 3; ++guard) {
        Vec3 u = Vec3::Zero();
        double tau = std::numeric_limits<double>::infinity();
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(cur.v[axis]) > 1e-12) {
                u[axis] = cur.v[axis] > 0.0 ? -a_max : a_max;
                tau = std::min(tau, std::abs(cur.v[axis]) / a_max);
            }
        }
        if (!std::isfinite(tau) || tau <= 0.0) {
            break;
        }
        traj.append(ConstantAccelSegment{cur, u, tau});
        cur = propagate(cur, u, tau);
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(cur.v[axis]) < 1e-9) {
                cur.v[axis] = 0.0;
            }
        }
        cur.a = Vec3::Zero();
    }
    // Short hold so the trajectory is never empty.
    traj.append(ConstantAccelSegment{cur, Vec3::Zero(), 1.0});
    return traj;
}

}  // namespace pcavoid
