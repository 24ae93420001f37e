#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Geometry>

#include "pcavoid/core/types.hpp"

namespace pcavoid::sim {

struct Sphere {
    Point3 center = Point3::Zero();
    double radius = 1.0;
};

/// Segment p0-p1 swept by a ball; thin bars and branches.
struct Capsule {
    Point3 p0 = Point3::Zero();
    Point3 p1 = Point3::UnitX();
    double radius = 0.01;
};

struct AlignedBox {
    Point3 min = Point3::Zero();
    Point3 max = Point3::Ones();
};

using Shape = std::variant<Sphere, Capsule, AlignedBox>;

struct RigidPose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Point3 apply(const Point3& p) const { return rotation * p + translation; }
    Point3 apply_inverse(const Point3& p) const { return rotation.transpose() * (p - translation); }
    Vec3 rotate_inverse(const Vec3& d) const { return rotation.transpose() * d; }
    bool identity() const { return translation.isZero(0.0) && rotation.isIdentity(0.0); }
};

struct Keyframe {
    double t = 0.0;
    Vec3 translation = Vec3::Zero();
    Vec3 rotation = Vec3::Zero();  // axis * angle, radians
};

/// Time -> rigid pose. Rotation is about `pivot`; translation and rotation vector
/// are interpolated linearly between keyframes and held outside their range.
struct MotionSchedule {
    Point3 pivot = Point3::Zero();
    std::vector<Keyframe> keyframes;

    RigidPose pose_at(double t) const {
        RigidPose pose;
        if (keyframes.empty()) {
            return pose;
        }
        Vec3 trans, rotvec;
        if (t <= keyframes.front().t) {
            trans = keyframes.front().translation;
            rotvec = keyframes.front().rotation;
        } else if (t >= keyframes.back().t) {
            trans = keyframes.back().translation;
            rotvec = keyframes.back().rotation;
        } else {
            auto it = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                                       [](double x, const Keyframe& k) { return x < k.t; });
            const Keyframe& b = *it;
            const Keyframe& a = *(it - 1);
            const double s = (t - a.t) / (b.t - a.t);
            trans = (1.0 - s) * a.translation + s * b.translation;
            rotvec = (1.0 - s) * a.rotation + s * b.rotation;
        }
        const double angle = rotvec.norm();
        if (angle > 0.0) {
            pose.rotation = Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
        }
        // p' = R (p - pivot) + pivot + trans
        pose.translation = pivot - pose.rotation * pivot + trans;
        return pose;
    }
};

struct Obstacle {
    std::string name;
    Shape shape;
    std::optional<MotionSchedule> motion;
    bool background = false;  // a backdrop surface, removable for see-through ablations

    RigidPose pose_at(double t) const { return motion ? motion->pose_at(t) : RigidPose{}; }
};

namespace detail {

inline std::optional<double> ray_sphere(const Point3& o, const Vec3& d, const Point3& c, double r) {
    const Vec3 oc = o - c;
    const double b = oc.dot(d);
    const double cc = oc.squaredNorm() - r * r;
    const double disc = b * b - cc;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double sq = std::sqrt(disc);
    const double t0 = -b - sq;
    if (t0 >= 0.0) {
        return t0;
    }
    const double t1 = -b + sq;
    if (t1 >= 0.0) {
        return 0.0;  // origin inside
    }
    return std::nullopt;
}

inline std::optional<double> ray_capsule(const Point3& o, const Vec3& d, const Capsule& cap) {
    const Vec3 axis = cap.p1 - cap.p0;
    const double len2 = axis.squaredNorm();
    std::optional<double> best;
    auto consider = [&](std::optional<double> t) {
        if (t && (!best || *t < *best)) {
            best = t;
        }
    };
    consider(ray_sphere(o, d, cap.p0, cap.radius));
    consider(ray_sphere(o, d, cap.p1, cap.radius));
    if (len2 > 0.0) {
        // Infinite cylinder, then clip to the segment's slab.
        const Vec3 w = o - cap.p0;
        const double dd = d.dot(axis) / len2;
        const double wd = w.dot(axis) / len2;
        const Vec3 dp = d - dd * axis;
        const Vec3 wp = w - wd * axis;
        const double A = dp.squaredNorm();
        const double B = 2.0 * dp.dot(wp);
        const double C = wp.squaredNorm() - cap.radius * cap.radius;
        if (A > 1e-300) {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
                    if (t < 0.0) {
                        continue;
                    }
                    const double s = wd + t * dd;
                    if (s >= 0.0 && s <= 1.0) {
                        consider(t);
                        break;
                    }
                }
            }
        }
    }
    return best;
}

inline std::optional<double> ray_box(const Point3& o, const Vec3& d, const AlignedBox& box) {
    double t_near = 0.0;
    double t_far = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-300) {
            if (o[k] < box.min[k] || o[k] > box.max[k]) {
                return std::nullopt;
            }
            continue;
        }
        double t0 = (box.min[k] - o[k]) / d[k];
        double t1 = (box.max[k] - o[k]) / d[k];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) {
            return std::nullopt;
        }
    }
    return t_near;
}

inline double segment_distance(const Point3& p, const Point3& a, const Point3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (p - (a + s * ab)).norm();
}

}  // namespace detail

/// Ray parameter of the first hit of a local-frame shape (dir unit length).
inline std::optional<double> intersect(const Shape& shape, const Point3& o, const Vec3& d) {
    return std::visit(
        [&](const auto& s) -> std::optional<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return detail::ray_sphere(o, d, s.center, s.radius);
            } else if constexpr (std::is_same_v<T, Capsule>) {
                return detail::ray_capsule(o, d, s);
            } else {
                return detail::ray_box(o, d, s);
            }
        },
        shape);
}

/// Signed distance from a local-frame point to the shape surface (negative inside).
inline double signed_distance(const Shape& shape, const Point3& p) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return (p - s.center).norm() - s.radius;
            } else if constexpr (std::is_same_v<T, Capsule>) {
                return detail::segment_distance(p, s.p0, s.p1) - s.radius;
            } else {
                const Vec3 q = (p - s.min).cwiseMin(s.max - p);  // >= 0 on all axes iff inside
                if ((q.array() >= 0.0).all()) {
                    return -q.minCoeff();
                }
                const Vec3 outside = (s.min - p).cwiseMax(p - s.max).cwiseMax(Vec3::Zero());
                return outside.norm();
            }
        },
        shape);
}

struct RayHit {
    double range = 0.0;
    Point3 point;
    int obstacle = -1;
};

struct Environment {
    std::vector<Obstacle> obstacles;

    bool empty() const { return obstacles.empty(); }

    /// Nearest intersection within max_range over all obstacles at their time-t poses.
    std::optional<RayHit> cast_ray(const Point3& origin, const Vec3& dir, double t, double max_range) const {
        std::optional<RayHit> best;
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            const Obstacle& ob = obstacles[i];
            std::optional<double> range;
            if (ob.motion) {
                const RigidPose pose = ob.pose_at(t);
                range = intersect(ob.shape, pose.apply_inverse(origin), pose.rotate_inverse(dir));
            } else {
                range = intersect(ob.shape, origin, dir);
            }
            if (range && *range <= max_range && (!best || *range < best->range)) {
                best = RayHit{*range, origin + *range * dir, static_cast<int>(i)};
            }
        }
        return best;
    }

    double distance_to(std::size_t obstacle, const Point3& p, double t) const {
        const Obstacle& ob = obstacles.at(obstacle);
        const Point3 local = ob.motion ? ob.pose_at(t).apply_inverse(p) : p;
        return signed_distance(ob.shape, local);
    }

    /// Ground-truth distance from p to the nearest obstacle surface at time t.
    double distance(const Point3& p, double t) const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            best = std::min(best, distance_to(i, p, t));
        }
        return best;
    }

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            if (obstacles[i].name == name) {
                return static_cast<int>(i);
            }
        }
        return -1;
    }
};

}  // namespace pcavoid::sim
