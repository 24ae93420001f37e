#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pcavoid {

using Vec3 = Eigen::Vector3d;
using Point3 = Eigen::Vector3d;

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// Squared distance with a fixed evaluation order. Every exact-comparison path
// (kd-tree, brute-force checks) goes through this so results compare bitwise.
inline double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

struct PointCloud {
    std::vector<Point3> points;
    double stamp = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Flat state of a double integrator: position, velocity, acceleration at time t.
struct UavState {
    double t = 0.0;
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();

    bool finite() const { return std::isfinite(t) && is_finite(p) && is_finite(v) && is_finite(a); }
};

struct KinodynamicLimits {
    double v_max = 2.0;
    double a_max = 2.0;
    double primitive_duration = 0.6;

    void validate() const {
        if (!(v_max > 0.0) || !(a_max > 0.0) || !(primitive_duration > 0.0)) {
            throw std::invalid_argument("kinodynamic limits must be strictly positive");
        }
    }
};

}  // namespace pcavoid
