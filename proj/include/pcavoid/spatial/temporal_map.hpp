#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcavoid/core/cloud_io.hpp"
#include "pcavoid/core/types.hpp"
#include "pcavoid/core/voxel_filter.hpp"
#include "pcavoid/spatial/kdtree.hpp"

namespace pcavoid {

struct MapConfig {
    int scans_per_tree = 50;  // H
    int tree_count = 2;       // N
    double resolution = 0.1;
    double clearance = 0.45;

    void validate() const {
        if (scans_per_tree < 1) {
            throw std::invalid_argument("map: scans_per_tree must be >= 1");
        }
        if (tree_count < 2) {
            throw std::invalid_argument("map: tree_count must be >= 2");
        }
        if (!(resolution > 0.0)) {
            throw std::invalid_argument("map: resolution must be positive");
        }
        if (!(clearance > 0.0)) {
            throw std::invalid_argument("map: clearance must be positive");
        }
    }
};

struct MapUpdateInfo {
    int tree_index = 0;
    bool cleared = false;  // accumulation restarted from this scan
    bool wrapped = false;  // counters reset, oldest tree overwritten
    std::size_t tree_size = 0;
    double accumulate_filter_ms = 0.0;
    double build_ms = 0.0;
};

struct CollisionHit {
    Neighbor nearest;
    int tree_index = 0;
};

/// Local map of N kd-trees, each holding the voxel-filtered accumulation of up
/// to H consecutive scans. The tree being filled is rebuilt from scratch on
/// every scan; when it is full the next tree is restarted from the new scan.
class TemporalLocalMap {
public:
    explicit TemporalLocalMap(MapConfig cfg = {}) : cfg_(cfg), accumulator_(cfg.resolution) {
        cfg_.validate();
        trees_.resize(static_cast<std::size_t>(cfg_.tree_count));
    }

    const MapConfig& config() const { return cfg_; }
    int scan_input_num() const { return scan_input_num_; }
    int tree_input_num() const { return tree_input_num_; }
    const KdTree& tree(std::size_t i) const { return trees_.at(i); }
    std::size_t tree_count() const { return trees_.size(); }
    const std::vector<Point3>& accumulated_raw() const { return cloud_accumulate_; }

    std::size_t total_points() const {
        std::size_t n = 0;
        for (const auto& t : trees_) {
            n += t.size();
        }
        return n;
    }

    MapUpdateInfo update(const PointCloud& scan) {
        using Clock = std::chrono::steady_clock;
        const auto t_begin = Clock::now();
        MapUpdateInfo info;
        const int capacity = cfg_.scans_per_tree * cfg_.tree_count;

        // The counter is kept in [0, H*N) (see the increment below), so the
        // reset-on-overflow case shows up here as scan_input_num_ == 0.
        tree_input_num_ = scan_input_num_ / cfg_.scans_per_tree;
        info.wrapped = scan_input_num_ == 0 && has_data_;

        if (scan_input_num_ % cfg_.scans_per_tree == 0) {
            cloud_accumulate_ = scan.points;
            accumulator_.clear();
            info.cleared = true;
        } else {
            cloud_accumulate_.insert(cloud_accumulate_.end(), scan.points.begin(), scan.points.end());
        }
        accumulator_.add(scan.points);
        std::vector<Point3> filtered = accumulator_.centroids();
        const auto t_filtered = Clock::now();

        trees_[static_cast<std::size_t>(tree_input_num_)].build(std::move(filtered));
        const auto t_built = Clock::now();

        scan_input_num_ = (scan_input_num_ + 1) % capacity;
        has_data_ = true;

        info.tree_index = tree_input_num_;
        info.tree_size = trees_[static_cast<std::size_t>(tree_input_num_)].size();
        info.accumulate_filter_ms = std::chrono::duration<double, std::milli>(t_filtered - t_begin).count();
        info.build_ms = std::chrono::duration<double, std::milli>(t_built - t_filtered).count();
        return info;
    }

    /// Nearest point within `clearance` over all trees; ties go to the lower tree, then lower index.
    std::optional<CollisionHit> collision(const Point3& q, double clearance) const {
        std::optional<CollisionHit> best;
        for (std::size_t i = 0; i < trees_.size(); ++i) {
            auto hit = trees_[i].nearest_within(q, clearance);
            if (hit && (!best || hit->distance < best->nearest.distance)) {
                best = CollisionHit{*hit, static_cast<int>(i)};
            }
        }
        return best;
    }

    bool collides(const Point3& q, double clearance) const {
        for (const auto& t : trees_) {
            if (t.any_within(q, clearance)) {
                return true;
            }
        }
        return false;
    }

    /// Distance to the nearest map point, if one lies within `radius`.
    std::optional<double> distance_within(const Point3& q, double radius) const {
        std::optional<double> best;
        for (const auto& t : trees_) {
            auto hit = t.nearest_within(q, best ? *best : radius);
            if (hit && (!best || hit->distance < *best)) {
                best = hit->distance;
            }
        }
        return best;
    }

    /// Writes tree_<i>.txt per tree plus counters.txt into an existing directory.
    void dump(const std::string& dir, double stamp) const {
        for (std::size_t i = 0; i < trees_.size(); ++i) {
            const auto pts = trees_[i].points();
            save_cloud(dir + "/tree_" + std::to_string(i) + ".txt",
                       PointCloud{std::vector<Point3>(pts.begin(), pts.end()), stamp});
        }
        std::ofstream os(dir + "/counters.txt");
        os << "scan_input_num " << scan_input_num_ << " tree_input_num " << tree_input_num_ << " tree_sizes";
        for (const auto& t : trees_) {
            os << ' ' << t.size();
        }
        os << '\n';
    }

private:
    MapConfig cfg_;
    std::vector<KdTree> trees_;
    std::vector<Point3> cloud_accumulate_;
    VoxelAccumulator accumulator_;
    int scan_input_num_ = 0;
    int tree_input_num_ = 0;
    bool has_data_ = false;
};

}  // namespace pcavoid
