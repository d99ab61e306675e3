#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "viewlab/clipgen.hpp"
#include "viewlab/geometry.hpp"
#include "viewlab/scene.hpp"

namespace viewlab {

/// Training-view selection along a single axis, angles in [0, 360).
///
/// Text forms:
///   "y:0,30,60"           explicit angles (negative values wrap)
///   "y:uniform:12"        12 equidistant views starting at 0
///   "y:uniform:12:15"     same, offset by 15 degrees
///   "y:range:-30:30:7"    7 evenly spaced views over [-30, 30], inclusive
struct TrainViews {
    Axis axis = Axis::Y;
    std::vector<double> angles_deg;

    static TrainViews parse(std::string_view text);
    static TrainViews uniform(Axis axis, int count, double offset_deg = 0.0);
    static TrainViews range(Axis axis, double lo_deg, double hi_deg, int count);

    std::vector<PoseSpec> poses() const;
    bool contains(const PoseSpec& pose) const;
    std::string to_string() const;
};

/// Wraps an angle into [0, 360).
double wrap_deg(double deg);

/// Circular distance between two angles, in [0, 180].
double angular_distance(double a_deg, double b_deg);

/// One rendered view of a clip in point form.
struct ViewSample {
    ClassId class_id = 0;
    PoseSpec pose;
    View2 plane;   ///< image-plane coordinates, object units, y up
    View2 pixels;  ///< pixel coordinates
};

ViewSample make_view(const Paperclip& clip, const PoseSpec& pose, const Camera& cam);

}  // namespace viewlab
