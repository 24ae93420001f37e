#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "pcavoid/core/types.hpp"
#include "pcavoid/sim/environment.hpp"

namespace pcavoid::sim {

enum class ScanPattern { Rosette, UniformRandom };

struct SensorModel {
    double fov_h_deg = 70.4;
    double fov_v_deg = 77.2;
    double points_per_second = 240000.0;
    double frame_rate = 50.0;
    double max_range = 450.0;
    double range_noise_sigma = 0.02;
    ScanPattern pattern = ScanPattern::Rosette;

    // Rosette: two counter-rotating sweeps with an irrational frequency ratio,
    // replicated over `heads` laser heads spread evenly in phase.
    double rosette_f1_hz = 421.0;
    double rosette_ratio = 0.6180339887498949;  // (sqrt(5) - 1) / 2
    int heads = 6;

    void validate() const {
        if (!(fov_h_deg > 0.0 && fov_h_deg <= 180.0) || !(fov_v_deg > 0.0 && fov_v_deg <= 180.0)) {
            throw std::invalid_argument("sensor: fov must be in (0, 180] degrees");
        }
        if (!(points_per_second > 0.0) || !(frame_rate > 0.0) || !(max_range > 0.0)) {
            throw std::invalid_argument("sensor: rates and range must be positive");
        }
        if (!(range_noise_sigma >= 0.0)) {
            throw std::invalid_argument("sensor: range noise must be non-negative");
        }
        if (heads < 1) {
            throw std::invalid_argument("sensor: heads must be >= 1");
        }
        if (points_per_frame() < 1) {
            throw std::invalid_argument("sensor: fewer than one point per frame");
        }
    }

    int points_per_frame() const { return static_cast<int>(std::lround(points_per_second / frame_rate)); }
    double frame_period() const { return 1.0 / frame_rate; }
};

/// Sensor pose in the world; x forward, y left, z up in the sensor frame.
struct SensorPose {
    Point3 position = Point3::Zero();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

    /// Level pose facing `yaw` radians about +z.
    static SensorPose level(const Point3& position, double yaw) {
        SensorPose pose;
        pose.position = position;
        pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
        return pose;
    }
};

/// Maps a point of the unit disk onto the elliptical field of view and returns
/// a unit direction in the sensor frame.
inline Vec3 disk_to_direction(double x, double y, const SensorModel& sensor) {
    const double deg = std::numbers::pi / 180.0;
    const double az = x * 0.5 * sensor.fov_h_deg * deg;
    const double el = y * 0.5 * sensor.fov_v_deg * deg;
    return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
}

/// Ray directions (sensor frame) for the frame starting at `frame_time`. For the
/// rosette the pattern is a function of absolute time plus a per-seed phase, so
/// successive frames trace new curves instead of repeating.
class ScanPatternGenerator {
public:
    ScanPatternGenerator(const SensorModel& sensor, std::uint64_t seed) : sensor_(sensor), rng_(seed) {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        phase1_ = phase(rng_);
        phase2_ = phase(rng_);
    }

    std::vector<Vec3> directions(double frame_time) {
        const int n = sensor_.points_per_frame();
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(n));
        if (sensor_.pattern == ScanPattern::UniformRandom) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (int i = 0; i < n; ++i) {
                const double r = std::sqrt(unit(rng_));
                const double th = 2.0 * std::numbers::pi * unit(rng_);
                out.push_back(disk_to_direction(r * std::cos(th), r * std::sin(th), sensor_));
            }
            return out;
        }
        const double w1 = 2.0 * std::numbers::pi * sensor_.rosette_f1_hz;
        const double w2 = w1 * sensor_.rosette_ratio;
        const double dt = 1.0 / sensor_.points_per_second;
        const int heads = sensor_.heads;
        for (int i = 0; i < n; ++i) {
            const int head = i % heads;
            const double t = frame_time + (i / heads) * dt * heads + head * dt;
            const double head_rot = 2.0 * std::numbers::pi * head / heads;
            const double a = w1 * t + phase1_ + head_rot;
            const double b = -w2 * t + phase2_;
            const double x = 0.5 * (std::cos(a) + std::cos(b));
            const double y = 0.5 * (std::sin(a) + std::sin(b));
            out.push_back(disk_to_direction(x, y, sensor_));
        }
        return out;
    }

    /// Gaussian range noise truncated at 3 sigma.
    double range_noise() {
        if (sensor_.range_noise_sigma <= 0.0) {
            return 0.0;
        }
        for (;;) {
            const double z = normal_(rng_);
            if (std::abs(z) <= 3.0) {
                return z * sensor_.range_noise_sigma;
            }
        }
    }

private:
    SensorModel sensor_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double phase1_ = 0.0;
    double phase2_ = 0.0;
};

/// One frame of world-frame points; obstacles are posed at `t`, misses dropped.
inline PointCloud generate_scan(const Environment& env, const SensorModel& sensor, const SensorPose& pose, double t,
                                ScanPatternGenerator& pattern) {
    PointCloud cloud;
    cloud.stamp = t;
    const std::vector<Vec3> dirs = pattern.directions(t);
    if (env.empty()) {
        return cloud;
    }
    cloud.points.reserve(dirs.size());
    for (const Vec3& d_sensor : dirs) {
        const Vec3 d = pose.rotation * d_sensor;
        if (auto hit = env.cast_ray(pose.position, d, t, sensor.max_range)) {
            const double range = std::max(0.0, hit->range + pattern.range_noise());
            cloud.points.push_back(pose.position + range * d);
        }
    }
    return cloud;
}

}  // namespace pcavoid::sim
