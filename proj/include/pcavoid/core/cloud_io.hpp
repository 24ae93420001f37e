#pragma once

// Plain-text point cloud format:
//
//   stamp <seconds> count <n>
//   <x> <y> <z>
//   ...            (n lines)
//
// Values are written with 17 significant digits so a write/read cycle is exact.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pcavoid/core/types.hpp"

namespace pcavoid {

inline std::string format_double(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

inline void write_cloud(std::ostream& os, const PointCloud& cloud) {
    os << "stamp " << format_double(cloud.stamp) << " count " << cloud.size() << '\n';
    for (const auto& p : cloud.points) {
        os << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
    }
}

inline PointCloud read_cloud(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("read_cloud: missing header line");
    }
    std::istringstream header(line);
    std::string kw_stamp, kw_count;
    PointCloud cloud;
    std::size_t count = 0;
    if (!(header >> kw_stamp >> cloud.stamp >> kw_count >> count) || kw_stamp != "stamp" || kw_count != "count") {
        throw std::runtime_error("read_cloud: malformed header '" + line + "'");
    }
    cloud.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) {
            throw std::runtime_error("read_cloud: expected " + std::to_string(count) + " points, got " +
                                     std::to_string(i));
        }
        std::istringstream row(line);
        double x, y, z;
        if (!(row >> x >> y >> z)) {
            throw std::runtime_error("read_cloud: malformed point on line " + std::to_string(i + 2));
        }
        cloud.points.emplace_back(x, y, z);
    }
    return cloud;
}

inline void save_cloud(const std::string& path, const PointCloud& cloud) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_cloud(os, cloud);
}

inline PointCloud load_cloud(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_cloud(is);
}

}  // namespace pcavoid
