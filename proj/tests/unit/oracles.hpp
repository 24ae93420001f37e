#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// They share nothing with the library beyond the Point3 type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "pcavoid/core/types.hpp"

namespace oracle {

using pcavoid::Point3;
using pcavoid::Vec3;

inline std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n, const Point3& lo, const Point3& hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.emplace_back(lo.x() + (hi.x() - lo.x()) * u(rng), lo.y() + (hi.y() - lo.y()) * u(rng),
                         lo.z() + (hi.z() - lo.z()) * u(rng));
    }
    return out;
}

struct Nearest {
    std::size_t index;
    double d2;
};

/// Linear scan; same distance expression as the library so ties compare bitwise.
inline std::optional<Nearest> brute_nearest_within(const std::vector<Point3>& pts, const Point3& q, double r) {
    std::optional<Nearest> best;
    const double r2 = r * r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dx = pts[i].x() - q.x();
        const double dy = pts[i].y() - q.y();
        const double dz = pts[i].z() - q.z();
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 <= r2 && (!best || d2 < best->d2)) {
            best = Nearest{i, d2};
        }
    }
    return best;
}

/// Voxel filter by ordered map of (ix,iy,iz) -> list of member indices, then centroids.
/// Returns the set of (cell, centroid) rows sorted by cell.
inline std::map<std::tuple<long, long, long>, Point3> voxel_centroids(const std::vector<Point3>& pts, double res) {
    std::map<std::tuple<long, long, long>, std::pair<Vec3, long>> acc;
    for (const auto& p : pts) {
        const auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / res)),
                                         static_cast<long>(std::floor(p.y() / res)),
                                         static_cast<long>(std::floor(p.z() / res)));
        auto& slot = acc[key];
        if (slot.second == 0) {
            slot.first = Vec3::Zero();
        }
        slot.first += p;
        ++slot.second;
    }
    std::map<std::tuple<long, long, long>, Point3> out;
    for (const auto& [k, v] : acc) {
        out[k] = v.first / static_cast<double>(v.second);
    }
    return out;
}

/// Classical fourth-order Runge-Kutta on x' = [v; u] with fixed step h.
inline std::pair<Vec3, Vec3> rk4(const Vec3& p0, const Vec3& v0, const Vec3& u, double tau, double h) {
    Eigen::Matrix<double, 6, 1> x;
    x << p0, v0;
    auto f = [&](const Eigen::Matrix<double, 6, 1>& s) {
        Eigen::Matrix<double, 6, 1> d;
        d << s.tail<3>(), u;
        return d;
    };
    const int n = static_cast<int>(std::ceil(tau / h));
    const double step = n > 0 ? tau / n : 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k1 = f(x);
        const auto k2 = f(x + 0.5 * step * k1);
        const auto k3 = f(x + 0.5 * step * k2);
        const auto k4 = f(x + step * k3);
        x += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return {x.head<3>(), x.tail<3>()};
}

/// Quintic coefficients from a 6x6 linear solve of the boundary conditions.
inline Eigen::Matrix<double, 6, 1> quintic_solve(double p0, double v0, double a0, double p1, double v1, double a1,
                                                 double T) {
    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b;
    A(0, 0) = 1;
    A(1, 1) = 1;
    A(2, 2) = 2;
    for (int k = 0; k < 6; ++k) {
        A(3, k) = std::pow(T, k);
        if (k >= 1) A(4, k) = k * std::pow(T, k - 1);
        if (k >= 2) A(5, k) = k * (k - 1) * std::pow(T, k - 2);
    }
    b << p0, v0, a0, p1, v1, a1;
    return A.fullPivLu().solve(b);
}

/// Distance from p to the segment a-b, by ternary-free projection in long double.
inline double point_segment_distance(const Point3& p, const Point3& a, const Point3& b) {
    const Eigen::Matrix<long double, 3, 1> P = p.cast<long double>(), A = a.cast<long double>(),
                                           B = b.cast<long double>();
    const auto ab = B - A;
    long double s = ab.squaredNorm() > 0 ? (P - A).dot(ab) / ab.squaredNorm() : 0;
    s = std::max<long double>(0, std::min<long double>(1, s));
    return static_cast<double>((P - (A + s * ab)).norm());
}

/// Cells touched by a segment, by dense sampling every res/steps_per_cell plus both endpoints.
inline std::set<std::tuple<long, long, long>> sampled_cells(const Point3& a, const Point3& b, double res,
                                                            int steps_per_cell = 10) {
    std::set<std::tuple<long, long, long>> out;
    const double len = (b - a).norm();
    const long n = std::max(1L, static_cast<long>(std::ceil(len / (res / steps_per_cell))));
    for (long i = 0; i <= n; ++i) {
        const Point3 p = a + (b - a) * (static_cast<double>(i) / n);
        out.emplace(static_cast<long>(std::floor(p.x() / res)), static_cast<long>(std::floor(p.y() / res)),
                    static_cast<long>(std::floor(p.z() / res)));
    }
    return out;
}

/// Scans (by log index) that tree `tree` holds once scans 0..k have been applied:
/// scan j lands in tree (j mod H*N) / H, and a fresh window opens whenever j mod H == 0.
inline std::vector<std::size_t> window_members(std::size_t k, int H, int N, int tree) {
    const std::size_t h = static_cast<std::size_t>(H);
    const std::size_t hn = h * static_cast<std::size_t>(N);
    for (std::size_t j = k + 1; j-- > 0;) {
        if ((j % hn) / h == static_cast<std::size_t>(tree)) {
            std::vector<std::size_t> out;
            for (std::size_t m = j - j % h; m <= j; ++m) {
                out.push_back(m);
            }
            return out;
        }
    }
    return {};
}

inline std::vector<Point3> sorted_points(std::vector<Point3> v) {
    std::sort(v.begin(), v.end(), [](const Point3& a, const Point3& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    return v;
}

}  // namespace oracle
