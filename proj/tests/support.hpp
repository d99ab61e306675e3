#pragma once

// Reference computations used by the test suites. Each one follows a
// different numerical route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "viewlab/geometry.hpp"
#include "viewlab/rng.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    const char* base = std::getenv("VIEWLAB_TEST_TMP");
    std::filesystem::path root = base ? base : std::filesystem::temp_directory_path() / "viewlab_tests";
    const auto dir = root / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Angle at b between rays b->a and b->c, from side lengths (law of cosines).
inline double angle_from_sides(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    const long double ab = (a - b).norm(), cb = (c - b).norm(), ac = (a - c).norm();
    long double cosv = (ab * ab + cb * cb - ac * ac) / (2 * ab * cb);
    cosv = std::clamp(cosv, -1.0L, 1.0L);
    return static_cast<double>(std::acos(cosv) * 180.0L / std::numbers::pi_v<long double>);
}

/// Segment distance by minimizing the convex quadratic |p(s) - q(t)|^2 over
/// the unit square: interior stationary point plus the four clamped edges.
inline double segment_distance_box(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                   const Eigen::Vector3d& q0, const Eigen::Vector3d& q1) {
    auto dist = [&](double s, double t) { return ((p0 + s * (p1 - p0)) - (q0 + t * (q1 - q0))).norm(); };
    const Eigen::Vector3d u = p1 - p0, v = q1 - q0, w = p0 - q0;
    double best = std::numeric_limits<double>::infinity();
    // Edges: fix one parameter, the other minimizes a 1D quadratic.
    auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
    for (double s : {0.0, 1.0}) {
        const double vv = v.squaredNorm();
        const double t = vv > 0 ? clamp01((w + s * u).dot(v) / vv) : 0.0;
        best = std::min(best, dist(s, t));
    }
    for (double t : {0.0, 1.0}) {
        const double uu = u.squaredNorm();
        const double s = uu > 0 ? clamp01(-(w - t * v).dot(u) / uu) : 0.0;
        best = std::min(best, dist(s, t));
    }
    Eigen::Matrix2d h;
    h << u.dot(u), -u.dot(v), -u.dot(v), v.dot(v);
    const Eigen::Vector2d g(-w.dot(u), w.dot(v));
    if (std::abs(h.determinant()) > 1e-14 * (1.0 + h.norm() * h.norm())) {
        const Eigen::Vector2d st = h.inverse() * g;
        if (st.x() >= 0 && st.x() <= 1 && st.y() >= 0 && st.y() <= 1) best = std::min(best, dist(st.x(), st.y()));
    }
    return best;
}

/// Squared residual of projecting `target` onto span(columns), computed with
/// modified Gram-Schmidt in long double; near-dependent columns are skipped.
inline long double gram_schmidt_residual(const std::vector<std::vector<long double>>& columns,
                                         const std::vector<long double>& target) {
    std::vector<std::vector<long double>> basis;
    for (auto c : columns) {
        long double n0 = 0;
        for (auto x : c) n0 += x * x;
        for (const auto& q : basis) {
            long double d = 0;
            for (std::size_t i = 0; i < c.size(); ++i) d += q[i] * c[i];
            for (std::size_t i = 0; i < c.size(); ++i) c[i] -= d * q[i];
        }
        long double n = 0;
        for (auto x : c) n += x * x;
        if (n <= 1e-20L * std::max(n0, 1.0L)) continue;
        n = std::sqrt(n);
        for (auto& x : c) x /= n;
        basis.push_back(c);
    }
    auto r = target;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) {
            long double d = 0;
            for (std::size_t i = 0; i < r.size(); ++i) d += q[i] * r[i];
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d * q[i];
        }
    long double s = 0;
    for (auto x : r) s += x * x;
    return s;
}

/// Brute-force linear-combination-of-views residual: both coordinate rows of
/// the test view projected onto span{x_i, y_i, 1}, normalized by the centered
/// test norm.
inline double brute_lc_residual(const viewlab::View2& test, const std::vector<viewlab::View2>& views,
                                bool constant = true) {
    std::vector<std::vector<long double>> cols;
    for (const auto& v : views)
        for (int r = 0; r < 2; ++r) {
            std::vector<long double> c(8);
            for (int i = 0; i < 8; ++i) c[i] = v(r, i);
            cols.push_back(c);
        }
    if (constant) cols.emplace_back(8, 1.0L);
    long double total = 0, norm = 0;
    for (int r = 0; r < 2; ++r) {
        std::vector<long double> t(8);
        long double mean = 0;
        for (int i = 0; i < 8; ++i) mean += (t[i] = test(r, i));
        mean /= 8;
        for (int i = 0; i < 8; ++i) norm += (t[i] - mean) * (t[i] - mean);
        total += gram_schmidt_residual(cols, t);
    }
    return static_cast<double>(total / norm);
}

/// Kabsch/Procrustes RMSD between two 3x8 point sets after centering and the
/// best orthogonal alignment (rotation, or rotation plus reflection).
inline double procrustes_rmsd(const viewlab::Vertices3& a, const viewlab::Vertices3& b, bool allow_reflection) {
    const viewlab::Vertices3 ac = a.colwise() - a.rowwise().mean();
    const viewlab::Vertices3 bc = b.colwise() - b.rowwise().mean();
    const Eigen::Matrix3d h = ac * bc.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if (!allow_reflection && (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
    const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
    return std::sqrt((r * ac - bc).squaredNorm() / 8.0);
}

/// Independent 3D rotation from Rodrigues' formula about a unit axis.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(a) * k + (1 - std::cos(a)) * k * k;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing
