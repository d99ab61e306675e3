#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viewlab/geometry.hpp"

namespace viewlab {

/// An 8-vertex open polyline, centered at the origin with max vertex norm 1.
struct Paperclip {
    Vertices3 vertices = Vertices3::Zero();
    ClassId class_id = 0;
};

struct GenConfig {
    std::uint64_t seed = 0;
    double step_low = 0.3;
    double step_high = 1.0;
    double min_segment_angle_deg = 30.0;
    double min_clearance = 0.05;
    int max_attempts = 10000;

    /// Throws InvalidArgument when the configuration is unusable.
    void check() const;
};

struct Violation {
    enum class Kind { SharpEdge, Clearance };
    Kind kind;
    int first;   ///< vertex index (SharpEdge) or first segment index (Clearance)
    int second;  ///< unused (-1) for SharpEdge, second segment index for Clearance
    double measured;

    std::string describe() const;
};

/// Rejection-samples a chain of 8 vertices, normalizes it and returns the
/// first candidate passing validate(). Deterministic in (config.seed, class_id).
Paperclip generate_paperclip(const GenConfig& config, ClassId class_id);

/// Lists every sharp interior angle and every pair of non-adjacent segments
/// closer than the clearance threshold.
std::vector<Violation> validate(const Paperclip& clip, const GenConfig& config);

/// Translates the centroid to the origin and scales the farthest vertex to
/// unit norm. Throws DegenerateObject if all points coincide.
Paperclip normalize(const Vertices3& raw, ClassId class_id = 0);

/// Interior angle in degrees at vertex `i` (1..6); 180 means straight.
double interior_angle_deg(const Vertices3& v, int i);

/// Minimum Euclidean distance between segments [p0,p1] and [q0,q1].
double segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                        const Eigen::Vector3d& q0, const Eigen::Vector3d& q1);

}  // namespace viewlab
