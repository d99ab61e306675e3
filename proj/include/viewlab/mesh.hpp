#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "viewlab/geometry.hpp"
#include "viewlab/raster.hpp"
#include "viewlab/scene.hpp"

namespace viewlab {

struct Mesh {
    Eigen::Matrix3Xd vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Reads `v` and `f` records of a Wavefront OBJ file. Polygons are fan
/// triangulated; texture/normal indices and other records are ignored;
/// zero-area triangles are dropped.
Mesh load_obj(const std::filesystem::path& path);
Mesh parse_obj(std::istream& in, const std::string& origin = "<stream>");

/// Removes triangles with out-of-range indices or area below `min_area`.
void drop_degenerate(Mesh& mesh, double min_area = 1e-14);

/// Centers and scales the mesh like a paperclip, then applies a random
/// rotation drawn from the (seed, class_id) stream so the object does not
/// sit in its canonical pose.
Mesh prepare_mesh(Mesh mesh, std::uint64_t seed, ClassId class_id);

/// Uniformly distributed random rotation.
Eigen::Matrix3d random_rotation(std::uint64_t seed, ClassId class_id);

/// Z-buffered, flat-shaded render with one directional light and gray albedo
/// on a black background. `light_dir` points from the surface to the light.
RasterImage render_mesh_flat(const Mesh& mesh, const PoseSpec& pose, const Camera& cam,
                             const Eigen::Vector3d& light_dir = Eigen::Vector3d(0.3, 0.5, 1.0));

}  // namespace viewlab
