#pragma once

#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcavoid/gridmap/occupancy_grid.hpp"
#include "pcavoid/sim/lidar.hpp"
#include "pcavoid/sim/scenario.hpp"
#include "pcavoid/spatial/temporal_map.hpp"

namespace pcavoid::gridmap {

struct ResolutionResult {
    double resolution = 0.0;
    std::size_t bar_cells = 0;
    std::size_t occupied_bar_cells = 0;
    double occupied_fraction = 0.0;
    std::size_t cell_updates = 0;
    double integrate_ms = 0.0;
};

struct ThinObjectReport {
    std::vector<ResolutionResult> with_background;
    ResolutionResult without_background;  // first resolution, backdrop removed
    std::size_t pointcloud_bar_points = 0;
    std::size_t pointcloud_points = 0;
    std::size_t raw_points = 0;
    int frames = 0;

    double bar_cell_occupied_fraction() const {
        return with_background.empty() ? 0.0 : with_background.front().occupied_fraction;
    }
};

/// Cells whose box comes within the capsule radius of the bar axis, found by
/// dense sampling along the axis.
inline std::set<CellIndex> capsule_cells(const sim::Capsule& cap, const sim::RigidPose& pose, double resolution) {
    const Point3 a = pose.apply(cap.p0);
    const Point3 b = pose.apply(cap.p1);
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / (resolution / 20.0))));
    std::set<CellIndex> out;
    for (int i = 0; i <= n; ++i) {
        const Point3 p = a + (b - a) * (static_cast<double>(i) / n);
        const CellIndex c = cell_of(p, resolution);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    const CellIndex q{c.x + dx, c.y + dy, c.z + dz};
                    const Point3 lo(q.x * resolution, q.y * resolution, q.z * resolution);
                    const Point3 hi = lo + Point3::Constant(resolution);
                    const Point3 nearest = p.cwiseMax(lo).cwiseMin(hi);
                    if ((nearest - p).norm() <= cap.radius) {
                        out.insert(q);
                    }
                }
            }
        }
    }
    return out;
}

namespace detail {

inline std::vector<PointCloud> record_scans(const sim::Scenario& sc, const sim::Environment& env,
                                            const sim::SensorPose& pose) {
    sim::ScanPatternGenerator pattern(sc.sensor, sc.seed);
    std::vector<PointCloud> scans;
    for (int k = 0; k < sc.compare.frames; ++k) {
        scans.push_back(sim::generate_scan(env, sc.sensor, pose, k * sc.sensor.frame_period(), pattern));
    }
    return scans;
}

inline ResolutionResult grid_run(const std::vector<PointCloud>& scans, const Point3& origin,
                                 OccupancyParams params, double resolution, const sim::Capsule& bar,
                                 const sim::RigidPose& bar_pose) {
    params.resolution = resolution;
    OccupancyGrid grid(params);
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& scan : scans) {
        grid.integrate_scan(origin, scan);
    }
    ResolutionResult r;
    r.integrate_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.resolution = resolution;
    r.cell_updates = grid.cells_updated();
    for (const CellIndex& c : capsule_cells(bar, bar_pose, resolution)) {
        ++r.bar_cells;
        if (grid.occupied(c)) {
            ++r.occupied_bar_cells;
        }
    }
    r.occupied_fraction = r.bar_cells ? static_cast<double>(r.occupied_bar_cells) / r.bar_cells : 0.0;
    return r;
}

}  // namespace detail

/// Feeds the same stationary-sensor scans to a log-odds grid at each configured
/// resolution and to the temporal point-cloud map, then measures how much of
/// the thin bar each representation retains. The grid pass is repeated at the
/// first resolution with backdrop obstacles removed.
inline ThinObjectReport thin_object_experiment(const sim::Scenario& sc) {
    const int bar_index = sc.env.find(sc.compare.bar);
    if (bar_index < 0) {
        throw sim::ScenarioError("compare.bar '" + sc.compare.bar + "' does not name an obstacle");
    }
    const sim::Obstacle& bar_ob = sc.env.obstacles[static_cast<std::size_t>(bar_index)];
    const auto* bar = std::get_if<sim::Capsule>(&bar_ob.shape);
    if (!bar) {
        throw sim::ScenarioError("compare.bar must be a capsule");
    }
    const double yaw = sc.start_yaw ? *sc.start_yaw
                                    : std::atan2(sc.goal.y() - sc.start.p.y(), sc.goal.x() - sc.start.p.x());
    const sim::SensorPose pose = sim::SensorPose::level(sc.start.p, yaw);
    const double t_end = (sc.compare.frames - 1) * sc.sensor.frame_period();
    const sim::RigidPose bar_pose = bar_ob.pose_at(t_end);

    ThinObjectReport report;
    report.frames = sc.compare.frames;
    const std::vector<PointCloud> scans = detail::record_scans(sc, sc.env, pose);

    TemporalLocalMap map(sc.map);
    for (const auto& scan : scans) {
        report.raw_points += scan.size();
        map.update(scan);
    }
    const double tol = 3.0 * sc.sensor.range_noise_sigma + sc.map.resolution * std::sqrt(3.0) / 2.0;
    for (std::size_t i = 0; i < map.tree_count(); ++i) {
        for (const Point3& p : map.tree(i).points()) {
            ++report.pointcloud_points;
            if (sc.env.distance_to(static_cast<std::size_t>(bar_index), p, t_end) <= tol) {
                ++report.pointcloud_bar_points;
            }
        }
    }

    for (double res : sc.compare.resolutions) {
        report.with_background.push_back(
            detail::grid_run(scans, pose.position, sc.compare.grid, res, *bar, bar_pose));
    }

    sim::Environment foreground;
    for (const auto& ob : sc.env.obstacles) {
        if (!ob.background) {
            foreground.obstacles.push_back(ob);
        }
    }
    const std::vector<PointCloud> fg_scans = detail::record_scans(sc, foreground, pose);
    report.without_background = detail::grid_run(fg_scans, pose.position, sc.compare.grid,
                                                  sc.compare.resolutions.front(), *bar, bar_pose);
    return report;
}

}  // namespace pcavoid::gridmap
