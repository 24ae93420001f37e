#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pcavoid/core/types.hpp"

namespace pcavoid {

/// Integer cell index on a grid anchored at the world origin, cells [k*r, (k+1)*r).
struct CellIndex {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const noexcept {
        // Large odd multipliers; collisions only cost a probe.
        std::uint64_t h = static_cast<std::uint64_t>(c.x) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(c.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(c.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

inline CellIndex cell_of(const Point3& p, double resolution) {
    return {static_cast<std::int64_t>(std::floor(p.x() / resolution)),
            static_cast<std::int64_t>(std::floor(p.y() / resolution)),
            static_cast<std::int64_t>(std::floor(p.z() / resolution))};
}

inline Point3 cell_center(const CellIndex& c, double resolution) {
    return {(static_cast<double>(c.x) + 0.5) * resolution, (static_cast<double>(c.y) + 0.5) * resolution,
            (static_cast<double>(c.z) + 0.5) * resolution};
}

namespace detail {

// Rounding in sum/count can land a centroid on the far face of its cell. Nudge it
// back so the representative stays inside; this keeps the filter idempotent.
inline double clamp_into_cell(double c, std::int64_t k, double resolution) {
    for (int guard = 0; guard < 64; ++guard) {
        const auto idx = static_cast<std::int64_t>(std::floor(c / resolution));
        if (idx == k) {
            return c;
        }
        c = std::nextafter(c, idx > k ? -INFINITY : INFINITY);
    }
    return c;
}

}  // namespace detail

/// Running per-voxel sums. Feeding points one by one and then calling centroids()
/// gives bitwise the same result as voxel_filter over the concatenated input, so
/// an accumulation buffer can be filtered incrementally.
class VoxelAccumulator {
public:
    explicit VoxelAccumulator(double resolution) : resolution_(resolution) {
        if (!(resolution > 0.0)) {
            throw std::invalid_argument("voxel resolution must be positive");
        }
    }

    double resolution() const { return resolution_; }
    std::size_t voxel_count() const { return cells_.size(); }

    void clear() {
        slots_.clear();
        cells_.clear();
    }

    void add(const Point3& p) {
        const CellIndex c = cell_of(p, resolution_);
        auto [it, inserted] = slots_.try_emplace(c, cells_.size());
        if (inserted) {
            cells_.push_back({c, Vec3::Zero(), 0});
        }
        Cell& cell = cells_[it->second];
        cell.sum += p;
        ++cell.count;
    }

    void add(const std::vector<Point3>& points) {
        for (const auto& p : points) {
            add(p);
        }
    }

    /// One centroid per occupied voxel, ordered by the voxel's first appearance.
    std::vector<Point3> centroids() const {
        std::vector<Point3> out;
        out.reserve(cells_.size());
        for (const auto& cell : cells_) {
            Point3 c = cell.sum / static_cast<double>(cell.count);
            c.x() = detail::clamp_into_cell(c.x(), cell.index.x, resolution_);
            c.y() = detail::clamp_into_cell(c.y(), cell.index.y, resolution_);
            c.z() = detail::clamp_into_cell(c.z(), cell.index.z, resolution_);
            out.push_back(c);
        }
        return out;
    }

private:
    struct Cell {
        CellIndex index;
        Vec3 sum;
        std::size_t count;
    };

    double resolution_;
    std::unordered_map<CellIndex, std::size_t, CellIndexHash> slots_;
    std::vector<Cell> cells_;
};

/// Voxel-grid downsampling: one centroid per occupied cell.
inline PointCloud voxel_filter(const PointCloud& cloud, double resolution) {
    VoxelAccumulator acc(resolution);
    acc.add(cloud.points);
    return PointCloud{acc.centroids(), cloud.stamp};
}

}  // namespace pcavoid
