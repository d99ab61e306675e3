#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "viewlab/geometry.hpp"

namespace viewlab {

enum class Axis { X, Y, Z };
enum class AxisSet { X, Y, Z, XY, XZ, YZ };

/// Dual-axis composition. Extrinsic applies the first listed axis first, both
/// about fixed world axes; intrinsic applies the second about the body frame.
enum class Composition { Extrinsic, Intrinsic };

std::string_view to_string(AxisSet axes);
AxisSet parse_axis_set(std::string_view text);
bool is_dual(AxisSet axes);
/// The one or two axes of an axis set, in listed order.
std::vector<Axis> axes_of(AxisSet axes);

struct PoseSpec {
    AxisSet axes = AxisSet::Y;
    std::array<double, 2> angles_deg{0.0, 0.0};  ///< second entry unused for single-axis

    static PoseSpec single(Axis axis, double deg);
    static PoseSpec dual(AxisSet axes, double first_deg, double second_deg);

    bool operator==(const PoseSpec&) const = default;
};

/// 3x3 right-handed rotation by `deg` degrees about a world axis.
Eigen::Matrix3d rotation_matrix(Axis axis, double deg);

/// Rotation matrix a pose applies to object coordinates.
Eigen::Matrix3d pose_rotation(const PoseSpec& pose,
                              Composition composition = Composition::Extrinsic);

Vertices3 apply_pose(const Vertices3& points, const PoseSpec& pose,
                     Composition composition = Composition::Extrinsic);
Eigen::Matrix3Xd apply_pose(const Eigen::Matrix3Xd& points, const PoseSpec& pose,
                            Composition composition = Composition::Extrinsic);

/// Enumerates poses: single axes at `single_stride` degrees, dual axes on a
/// `dual_stride` x `dual_stride` lattice. Strides must divide 360.
std::vector<PoseSpec> pose_grid(const std::vector<AxisSet>& axes_set, int single_stride = 1,
                                int dual_stride = 10);

/// All six axis sets: x, y, z, xy, xz, yz.
std::vector<AxisSet> full_protocol_axes();

enum class Projection { Orthographic, Perspective };

/// Camera on the +z axis looking down -z at the origin. Image-plane
/// coordinates are in object units with y up; pixel coordinates have their
/// origin at the top-left corner with v down.
struct Camera {
    Projection mode = Projection::Orthographic;
    double distance = 3.0;  ///< perspective: camera to origin
    double focal = 3.0;     ///< perspective: pinhole focal length, object units
    double scale = 2.5;     ///< object units spanned by the image height
    int image_size = 224;

    static Camera orthographic(double scale = 2.5, int image_size = 224);
    static Camera perspective(double distance = 3.0, double scale = 2.5, int image_size = 224);

    void check() const;
    double pixels_per_unit() const { return image_size / scale; }
};

/// Image-plane coordinates in object units. Throws BehindCamera in
/// perspective mode for points at or behind the camera plane.
Eigen::Matrix2Xd image_plane(const Eigen::Matrix3Xd& points, const Camera& cam);

/// Pixel coordinates of the projected points.
Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const Camera& cam);

/// Maps image-plane coordinates to pixel coordinates.
Eigen::Matrix2Xd to_pixels(const Eigen::Matrix2Xd& plane, const Camera& cam);

}  // namespace viewlab
