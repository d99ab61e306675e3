#include "viewlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Geometry>
#include <fmt/format.h>

#include "viewlab/errors.hpp"
#include "viewlab/rng.hpp"

namespace viewlab {

namespace {

constexpr std::uint64_t kMeshRotationStream = 2;
constexpr double kAlbedo = 0.8;
constexpr double kAmbient = 0.15;

int resolve_index(const std::string& token, int vertex_count, const std::string& origin,
                  int line_no) {
    const std::string head = token.substr(0, token.find('/'));
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        throw SchemaError(fmt::format("{}:{}: bad face index '{}'", origin, line_no, token));
    }
    if (idx > 0) return idx - 1;
    if (idx < 0) return vertex_count + idx;
    throw SchemaError(fmt::format("{}:{}: face index 0 is invalid", origin, line_no));
}

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

}  // namespace

Mesh parse_obj(std::istream& in, const std::string& origin) {
    std::vector<Eigen::Vector3d> verts;
    Mesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw SchemaError(fmt::format("{}:{}: malformed vertex", origin, line_no));
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok)
                poly.push_back(resolve_index(tok, static_cast<int>(verts.size()), origin, line_no));
            if (poly.size() < 3)
                throw SchemaError(fmt::format("{}:{}: face with fewer than 3 vertices", origin, line_no));
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    mesh.vertices.resize(3, static_cast<Eigen::Index>(verts.size()));
    for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = verts[i];
    for (const auto& t : mesh.triangles)
        for (int idx : t)
            if (idx < 0 || idx >= static_cast<int>(verts.size()))
                throw SchemaError(fmt::format("{}: face references vertex {} of {}", origin, idx + 1, verts.size()));
    drop_degenerate(mesh);
    return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open mesh");
    return parse_obj(in, path.string());
}

void drop_degenerate(Mesh& mesh, double min_area) {
    const int n = static_cast<int>(mesh.vertices.cols());
    std::erase_if(mesh.triangles, [&](const std::array<int, 3>& t) {
        for (int i : t)
            if (i < 0 || i >= n) return true;
        const Eigen::Vector3d a = mesh.vertices.col(t[0]);
        const Eigen::Vector3d ab = Eigen::Vector3d(mesh.vertices.col(t[1])) - a;
        const Eigen::Vector3d ac = Eigen::Vector3d(mesh.vertices.col(t[2])) - a;
        return 0.5 * ab.cross(ac).norm() < min_area;
    });
}

Eigen::Matrix3d random_rotation(std::uint64_t seed, ClassId class_id) {
    Rng rng(stream_key(seed, class_id, kMeshRotationStream));
    // Shoemake's uniform quaternion.
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const double tau = 2.0 * std::numbers::pi;
    const Eigen::Quaterniond q(b * std::cos(tau * u3), a * std::sin(tau * u2),
                               a * std::cos(tau * u2), b * std::sin(tau * u3));
    return q.normalized().toRotationMatrix();
}

Mesh prepare_mesh(Mesh mesh, std::uint64_t seed, ClassId class_id) {
    if (mesh.vertices.cols() == 0 || mesh.triangles.empty()) throw EmptyMesh("mesh has no triangles");
    const Eigen::Vector3d centroid = mesh.vertices.rowwise().mean();
    mesh.vertices.colwise() -= centroid;
    const double radius = mesh.vertices.colwise().norm().maxCoeff();
    if (!(radius > 1e-12)) throw DegenerateObject("mesh vertices coincide");
    mesh.vertices = random_rotation(seed, class_id) * (mesh.vertices / radius);
    return mesh;
}

RasterImage render_mesh_flat(const Mesh& mesh, const PoseSpec& pose, const Camera& cam,
                             const Eigen::Vector3d& light_dir) {
    if (mesh.triangles.empty() || mesh.vertices.cols() == 0) throw EmptyMesh("render_mesh_flat: empty mesh");
    const Eigen::Matrix3Xd world = apply_pose(mesh.vertices, pose);
    const Eigen::Matrix2Xd px = project(world, cam);
    const bool persp = cam.mode == Projection::Perspective;
    // Screen-space-linear closeness: z for orthographic, 1/depth for perspective.
    Eigen::VectorXd near(world.cols());
    for (Eigen::Index i = 0; i < world.cols(); ++i)
        near[i] = persp ? 1.0 / (cam.distance - world(2, i)) : world(2, i);

    const Eigen::Vector3d light = light_dir.normalized();
    const int size = cam.image_size;
    RasterImage img(size, size);
    std::vector<double> zbuf(static_cast<std::size_t>(size) * size,
                             -std::numeric_limits<double>::infinity());

    for (const auto& tri : mesh.triangles) {
        const Eigen::Vector3d wa = world.col(tri[0]);
        const Eigen::Vector3d wb = world.col(tri[1]);
        const Eigen::Vector3d wc = world.col(tri[2]);
        Eigen::Vector3d normal = (wb - wa).cross(wc - wa);
        if (normal.norm() == 0.0) continue;
        normal.normalize();
        const Eigen::Vector3d to_viewer =
            persp ? Eigen::Vector3d(Eigen::Vector3d(0, 0, cam.distance) - (wa + wb + wc) / 3.0)
                  : Eigen::Vector3d(0, 0, 1);
        if (normal.dot(to_viewer) < 0.0) normal = -normal;
        const double shade = kAlbedo * (kAmbient + (1.0 - kAmbient) * std::max(0.0, normal.dot(light)));
        const auto level = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(shade, 0.0, 1.0)));

        const Eigen::Vector2d a = px.col(tri[0]);
        const Eigen::Vector2d b = px.col(tri[1]);
        const Eigen::Vector2d c = px.col(tri[2]);
        const double area = edge(a, b, c.x(), c.y());
        if (area == 0.0) continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
        const int x1 = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
        const int y1 = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double cx = x + 0.5;
                const double cy = y + 0.5;
                const double w0 = edge(b, c, cx, cy) / area;
                const double w1 = edge(c, a, cx, cy) / area;
                const double w2 = edge(a, b, cx, cy) / area;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double z = w0 * near[tri[0]] + w1 * near[tri[1]] + w2 * near[tri[2]];
                double& depth = zbuf[static_cast<std::size_t>(y) * size + x];
                if (z > depth) {
                    depth = z;
                    img.at(x, y) = level;
                }
            }
        }
    }
    return img;
}

}  // namespace viewlab
