#include "viewlab/clipgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "viewlab/errors.hpp"
#include "viewlab/rng.hpp"

namespace viewlab {

namespace {

constexpr std::uint64_t kClipStream = 1;

}  // namespace

void GenConfig::check() const {
    if (!(step_low > 0.0 && step_low <= step_high))
        throw InvalidArgument(fmt::format("step_range must satisfy 0 < low <= high, got [{}, {}]",
                                          step_low, step_high));
    if (!(min_segment_angle_deg > 0.0 && min_segment_angle_deg < 180.0))
        throw InvalidArgument("min_segment_angle_deg must lie in (0, 180)");
    if (!(min_clearance >= 0.0))
        throw InvalidArgument("min_clearance must be non-negative");
    if (max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
}

std::string Violation::describe() const {
    if (kind == Kind::SharpEdge)
        return fmt::format("sharp edge at vertex {}: {:.6f} deg", first, measured);
    return fmt::format("clearance between segments {} and {}: {:.6f}", first, second, measured);
}

double interior_angle_deg(const Vertices3& v, int i) {
    const Eigen::Vector3d a = v.col(i - 1) - v.col(i);
    const Eigen::Vector3d b = v.col(i + 1) - v.col(i);
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

// Closest points between two segments, after Ericson, Real-Time Collision
// Detection, 5.1.9.
double segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                        const Eigen::Vector3d& q0, const Eigen::Vector3d& q1) {
    constexpr double eps = 1e-15;
    const Eigen::Vector3d d1 = p1 - p0;
    const Eigen::Vector3d d2 = q1 - q0;
    const Eigen::Vector3d r = p0 - q0;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    double s = 0.0;
    double t = 0.0;
    if (a <= eps && e <= eps) return r.norm();
    if (a <= eps) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p0 + d1 * s) - (q0 + d2 * t)).norm();
}

std::vector<Violation> validate(const Paperclip& clip, const GenConfig& config) {
    const Vertices3& v = clip.vertices;
    std::vector<Violation> out;
    for (int i = 1; i < kVertexCount - 1; ++i) {
        const double angle = interior_angle_deg(v, i);
        if (angle < config.min_segment_angle_deg)
            out.push_back({Violation::Kind::SharpEdge, i, -1, angle});
    }
    constexpr int segments = kVertexCount - 1;
    for (int i = 0; i < segments; ++i) {
        for (int j = i + 2; j < segments; ++j) {
            const double d = segment_distance(v.col(i), v.col(i + 1), v.col(j), v.col(j + 1));
            if (d < config.min_clearance) out.push_back({Violation::Kind::Clearance, i, j, d});
        }
    }
    return out;
}

Paperclip normalize(const Vertices3& raw, ClassId class_id) {
    const Eigen::Vector3d centroid = raw.rowwise().mean();
    Vertices3 centered = raw.colwise() - centroid;
    const double radius = centered.colwise().norm().maxCoeff();
    if (!(radius > 1e-12) || !std::isfinite(radius))
        throw DegenerateObject("cannot normalize: all vertices coincide");
    return {centered / radius, class_id};
}

Paperclip generate_paperclip(const GenConfig& config, ClassId class_id) {
    config.check();
    Rng rng(stream_key(config.seed, class_id, kClipStream));
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Vertices3 raw;
        raw.col(0).setZero();
        for (int i = 1; i < kVertexCount; ++i) {
            const double step = rng.uniform(config.step_low, config.step_high);
            raw.col(i) = raw.col(i - 1) + step * rng.unit_vector();
        }
        Paperclip clip = normalize(raw, class_id);
        if (validate(clip, config).empty()) return clip;
    }
    throw GenerationExhausted(fmt::format("class {}: no valid paperclip after {} attempts",
                                          class_id, config.max_attempts));
}

}  // namespace viewlab
