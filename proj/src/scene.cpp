#include "viewlab/scene.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

std::string_view to_string(AxisSet axes) {
    switch (axes) {
        case AxisSet::X: return "x";
        case AxisSet::Y: return "y";
        case AxisSet::Z: return "z";
        case AxisSet::XY: return "xy";
        case AxisSet::XZ: return "xz";
        case AxisSet::YZ: return "yz";
    }
    return "?";
}

AxisSet parse_axis_set(std::string_view text) {
    for (AxisSet a : {AxisSet::X, AxisSet::Y, AxisSet::Z, AxisSet::XY, AxisSet::XZ, AxisSet::YZ})
        if (to_string(a) == text) return a;
    throw InvalidArgument(fmt::format("unknown axis set '{}'", text));
}

bool is_dual(AxisSet axes) {
    return axes == AxisSet::XY || axes == AxisSet::XZ || axes == AxisSet::YZ;
}

std::vector<Axis> axes_of(AxisSet axes) {
    switch (axes) {
        case AxisSet::X: return {Axis::X};
        case AxisSet::Y: return {Axis::Y};
        case AxisSet::Z: return {Axis::Z};
        case AxisSet::XY: return {Axis::X, Axis::Y};
        case AxisSet::XZ: return {Axis::X, Axis::Z};
        case AxisSet::YZ: return {Axis::Y, Axis::Z};
    }
    return {};
}

PoseSpec PoseSpec::single(Axis axis, double deg) {
    static constexpr AxisSet sets[] = {AxisSet::X, AxisSet::Y, AxisSet::Z};
    return {sets[static_cast<int>(axis)], {deg, 0.0}};
}

PoseSpec PoseSpec::dual(AxisSet axes, double first_deg, double second_deg) {
    if (!is_dual(axes)) throw InvalidArgument("PoseSpec::dual needs a two-axis set");
    return {axes, {first_deg, second_deg}};
}

Eigen::Matrix3d rotation_matrix(Axis axis, double deg) {
    const double rad = deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    Eigen::Matrix3d r;
    switch (axis) {
        case Axis::X: r << 1, 0, 0, 0, c, -s, 0, s, c; break;
        case Axis::Y: r << c, 0, s, 0, 1, 0, -s, 0, c; break;
        case Axis::Z: r << c, -s, 0, s, c, 0, 0, 0, 1; break;
    }
    return r;
}

Eigen::Matrix3d pose_rotation(const PoseSpec& pose, Composition composition) {
    const auto axes = axes_of(pose.axes);
    if (axes.size() == 1) return rotation_matrix(axes[0], pose.angles_deg[0]);
    const Eigen::Matrix3d first = rotation_matrix(axes[0], pose.angles_deg[0]);
    const Eigen::Matrix3d second = rotation_matrix(axes[1], pose.angles_deg[1]);
    return composition == Composition::Extrinsic ? Eigen::Matrix3d(second * first)
                                                 : Eigen::Matrix3d(first * second);
}

Vertices3 apply_pose(const Vertices3& points, const PoseSpec& pose, Composition composition) {
    return pose_rotation(pose, composition) * points;
}

Eigen::Matrix3Xd apply_pose(const Eigen::Matrix3Xd& points, const PoseSpec& pose,
                            Composition composition) {
    return pose_rotation(pose, composition) * points;
}

std::vector<PoseSpec> pose_grid(const std::vector<AxisSet>& axes_set, int single_stride,
                                int dual_stride) {
    if (single_stride <= 0 || 360 % single_stride != 0 || dual_stride <= 0 ||
        360 % dual_stride != 0)
        throw InvalidArgument("pose grid strides must be positive divisors of 360");
    std::vector<PoseSpec> poses;
    for (AxisSet axes : axes_set) {
        if (is_dual(axes)) {
            for (int a = 0; a < 360; a += dual_stride)
                for (int b = 0; b < 360; b += dual_stride)
                    poses.push_back(PoseSpec::dual(axes, a, b));
        } else {
            const Axis axis = axes_of(axes)[0];
            for (int a = 0; a < 360; a += single_stride) poses.push_back(PoseSpec::single(axis, a));
        }
    }
    return poses;
}

std::vector<AxisSet> full_protocol_axes() {
    return {AxisSet::X, AxisSet::Y, AxisSet::Z, AxisSet::XY, AxisSet::XZ, AxisSet::YZ};
}

Camera Camera::orthographic(double scale, int image_size) {
    Camera cam;
    cam.mode = Projection::Orthographic;
    cam.scale = scale;
    cam.image_size = image_size;
    return cam;
}

Camera Camera::perspective(double distance, double scale, int image_size) {
    Camera cam;
    cam.mode = Projection::Perspective;
    cam.distance = distance;
    cam.focal = distance;
    cam.scale = scale;
    cam.image_size = image_size;
    return cam;
}

void Camera::check() const {
    if (!(scale > 0.0)) throw InvalidArgument("camera scale must be positive");
    if (image_size <= 0) throw InvalidArgument("camera image_size must be positive");
    if (mode == Projection::Perspective && (!(distance > 1.0) || !(focal > 0.0)))
        throw InvalidArgument("perspective camera needs distance > 1 and focal > 0");
}

Eigen::Matrix2Xd image_plane(const Eigen::Matrix3Xd& points, const Camera& cam) {
    if (cam.mode == Projection::Orthographic) return points.topRows<2>();
    Eigen::Matrix2Xd out(2, points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        const double depth = cam.distance - points(2, i);
        if (!(depth > 0.0))
            throw BehindCamera(fmt::format("point {} has depth {} (camera distance {})", i, depth,
                                           cam.distance));
        out.col(i) = points.col(i).head<2>() * (cam.focal / depth);
    }
    return out;
}

Eigen::Matrix2Xd to_pixels(const Eigen::Matrix2Xd& plane, const Camera& cam) {
    const double k = cam.pixels_per_unit();
    const double half = 0.5 * cam.image_size;
    Eigen::Matrix2Xd px(2, plane.cols());
    px.row(0) = (plane.row(0).array() * k + half).matrix();
    px.row(1) = (half - plane.row(1).array() * k).matrix();
    return px;
}

Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const Camera& cam) {
    return to_pixels(image_plane(points, cam), cam);
}

}  // namespace viewlab
