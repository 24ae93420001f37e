#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pcavoid/core/cloud_io.hpp"
#include "pcavoid/core/types.hpp"
#include "pcavoid/core/voxel_filter.hpp"

namespace pcavoid::gridmap {

/// Cells crossed by the segment a->b, in order, from cell_of(a) to cell_of(b)
/// inclusive (Amanatides-Woo). Takes exactly |dx|+|dy|+|dz| steps between the
/// end cells, so each visited cell appears once and the walk always terminates
/// on the endpoint cell.
inline std::vector<CellIndex> traverse(const Point3& a, const Point3& b, double resolution) {
    const CellIndex start = cell_of(a, resolution);
    const CellIndex goal = cell_of(b, resolution);
    std::vector<CellIndex> cells;
    cells.push_back(start);

    const Vec3 d = b - a;
    std::int64_t remaining[3] = {std::abs(goal.x - start.x), std::abs(goal.y - start.y), std::abs(goal.z - start.z)};
    const std::int64_t total = remaining[0] + remaining[1] + remaining[2];
    if (total == 0) {
        return cells;
    }
    cells.reserve(static_cast<std::size_t>(total) + 1);

    std::int64_t cur[3] = {start.x, start.y, start.z};
    int step[3];
    double t_max[3];
    double t_delta[3];
    for (int k = 0; k < 3; ++k) {
        if (d[k] > 0.0) {
            step[k] = 1;
            t_max[k] = ((static_cast<double>(cur[k]) + 1.0) * resolution - a[k]) / d[k];
            t_delta[k] = resolution / d[k];
        } else if (d[k] < 0.0) {
            step[k] = -1;
            t_max[k] = (static_cast<double>(cur[k]) * resolution - a[k]) / d[k];
            t_delta[k] = -resolution / d[k];
        } else {
            step[k] = 0;
            t_max[k] = std::numeric_limits<double>::infinity();
            t_delta[k] = std::numeric_limits<double>::infinity();
        }
    }
    for (std::int64_t n = 0; n < total; ++n) {
        int axis = -1;
        for (int k = 0; k < 3; ++k) {
            if (remaining[k] > 0 && (axis < 0 || t_max[k] < t_max[axis])) {
                axis = k;
            }
        }
        cur[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        --remaining[axis];
        cells.push_back({cur[0], cur[1], cur[2]});
    }
    return cells;
}

struct OccupancyParams {
    double resolution = 0.3;
    double hit = 0.85;         // log-odds added at the endpoint cell
    double miss = -0.4;        // log-odds added to every traversed cell before it
    double occupied_probability = 0.5;
    double clamp_min = -2.0;
    double clamp_max = 3.5;

    void validate() const {
        if (!(resolution > 0.0)) {
            throw std::invalid_argument("occupancy: resolution must be positive");
        }
        if (!(clamp_min < clamp_max) || !(occupied_probability > 0.0 && occupied_probability < 1.0)) {
            throw std::invalid_argument("occupancy: invalid clamp range or threshold");
        }
    }
};

inline double probability_from_log_odds(double l) { return 1.0 / (1.0 + std::exp(-l)); }
inline double log_odds_from_probability(double p) { return std::log(p / (1.0 - p)); }

/// Hashed log-odds grid; cells absent from the table are unknown (log-odds 0).
class OccupancyGrid {
public:
    explicit OccupancyGrid(OccupancyParams params = {}) : params_(params) {
        params_.validate();
        threshold_ = log_odds_from_probability(params_.occupied_probability);
    }

    const OccupancyParams& params() const { return params_; }
    double resolution() const { return params_.resolution; }
    std::size_t known_cells() const { return cells_.size(); }
    std::size_t cells_updated() const { return cells_updated_; }

    void integrate_scan(const Point3& sensor_origin, const PointCloud& scan) {
        for (const Point3& p : scan.points) {
            integrate_ray(sensor_origin, p);
        }
    }

    void integrate_ray(const Point3& origin, const Point3& end) {
        const std::vector<CellIndex> cells = traverse(origin, end, params_.resolution);
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            update(cells[i], params_.miss);
        }
        update(cells.back(), params_.hit);
    }

    double log_odds(const CellIndex& c) const {
        auto it = cells_.find(c);
        return it == cells_.end() ? 0.0 : it->second;
    }

    double probability(const CellIndex& c) const { return probability_from_log_odds(log_odds(c)); }

    bool occupied(const CellIndex& c) const {
        auto it = cells_.find(c);
        return it != cells_.end() && it->second > threshold_;
    }

    CellIndex cell(const Point3& p) const { return cell_of(p, params_.resolution); }

    /// Every known cell with its index and probability, sorted by index.
    std::vector<std::pair<CellIndex, double>> cells() const {
        std::vector<std::pair<CellIndex, double>> out;
        out.reserve(cells_.size());
        for (const auto& [c, l] : cells_) {
            out.emplace_back(c, probability_from_log_odds(l));
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    /// Rows of "ix iy iz probability", sorted; optionally only cells with z index == z_slice.
    void export_rows(std::ostream& os, std::optional<std::int64_t> z_slice = std::nullopt) const {
        os << "# resolution " << format_double(params_.resolution, 15) << "\n# ix iy iz probability\n";
        for (const auto& [c, p] : cells()) {
            if (z_slice && c.z != *z_slice) {
                continue;
            }
            os << c.x << ' ' << c.y << ' ' << c.z << ' ' << format_double(p, 6) << '\n';
        }
    }

private:
    void update(const CellIndex& c, double delta) {
        double& l = cells_[c];
        l = std::clamp(l + delta, params_.clamp_min, params_.clamp_max);
        ++cells_updated_;
    }

    OccupancyParams params_;
    double threshold_ = 0.0;
    std::unordered_map<CellIndex, double, CellIndexHash> cells_;
    std::size_t cells_updated_ = 0;
};

}  // namespace pcavoid::gridmap
