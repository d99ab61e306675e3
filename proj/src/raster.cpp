#include "viewlab/raster.hpp"

#include <algorithm>
#include <cmath>

#include <png.h>

#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

namespace {

std::uint8_t to_level(double coverage) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(coverage, 0.0, 1.0)));
}

double point_segment_distance(double px, double py, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
    const Eigen::Vector2d d = b - a;
    const Eigen::Vector2d p(px, py);
    const double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * d)).norm();
}

// Max-blends a shape whose coverage falls off linearly over one pixel beyond
// `radius` from the segment [a, b].
void stamp_capsule(RasterImage& img, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                   double radius) {
    const double reach = radius + 0.5;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - reach)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - reach)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + reach)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dist = point_segment_distance(x + 0.5, y + 0.5, a, b);
            const std::uint8_t level = to_level(reach - dist);
            if (level == 0) continue;
            for (int c = 0; c < img.channels; ++c) img.at(x, y, c) = std::max(img.at(x, y, c), level);
        }
    }
}

bool finite_points(const Eigen::Matrix2Xd& points) { return points.allFinite(); }

}  // namespace

RasterImage::RasterImage(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || (c != 1 && c != 3))
        throw InvalidArgument(fmt::format("bad image shape {}x{}x{}", w, h, c));
}

std::size_t RasterImage::count_nonzero() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pixels.size(); i += channels) {
        bool lit = false;
        for (int c = 0; c < channels; ++c) lit = lit || pixels[i + c] != 0;
        n += lit;
    }
    return n;
}

RasterImage render_wireframe(const Eigen::Matrix2Xd& points, const Camera& cam,
                             const StrokeStyle& style) {
    if (!finite_points(points)) throw InvalidArgument("render_wireframe: non-finite point");
    RasterImage img(cam.image_size, cam.image_size);
    for (Eigen::Index i = 0; i + 1 < points.cols(); ++i)
        stamp_capsule(img, points.col(i), points.col(i + 1), 0.5 * style.line_width);
    return img;
}

RasterImage render_coord_image(const Eigen::Matrix2Xd& points, const Camera& cam,
                               const StrokeStyle& style) {
    if (!finite_points(points)) throw InvalidArgument("render_coord_image: non-finite point");
    RasterImage img(cam.image_size, cam.image_size);
    for (Eigen::Index i = 0; i < points.cols(); ++i)
        stamp_capsule(img, points.col(i), points.col(i), style.disc_radius);
    return img;
}

Eigen::VectorXd coord_array(const Eigen::Matrix2Xd& points, const Camera& cam, int bins) {
    if (bins < 2) throw InvalidArgument("coord_array needs at least 2 bins");
    const double size = cam.image_size;
    const double weight = 1.0 / kVertexCount;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * bins);
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        const double u = points(0, i);
        const double v = points(1, i);
        if (!(u >= 0.0 && u < size && v >= 0.0 && v < size)) continue;
        const int bx = std::clamp(static_cast<int>(std::floor(u / size * bins)), 0, bins - 1);
        const int by = std::clamp(static_cast<int>(std::floor(v / size * bins)), 0, bins - 1);
        out[bx] += weight;
        out[bins + by] += weight;
    }
    return out;
}

RasterImage composite_background(const RasterImage& fg, const RasterImage& bg) {
    if (fg.width != bg.width || fg.height != bg.height || fg.channels != bg.channels)
        throw SizeMismatch(fmt::format("foreground {}x{}x{} vs background {}x{}x{}", fg.width,
                                       fg.height, fg.channels, bg.width, bg.height, bg.channels));
    RasterImage out = fg;
    const int ch = fg.channels;
    for (std::size_t i = 0; i < fg.pixels.size(); i += ch) {
        bool black = true;
        for (int c = 0; c < ch; ++c) black = black && fg.pixels[i + c] == 0;
        if (black)
            for (int c = 0; c < ch; ++c) out.pixels[i + c] = bg.pixels[i + c];
    }
    return out;
}

RasterImage expand_to_rgb(const RasterImage& img) {
    if (img.channels == 3) return img;
    RasterImage out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        for (int c = 0; c < 3; ++c) out.pixels[i * 3 + c] = img.pixels[i];
    return out;
}

RasterImage resize_nearest(const RasterImage& img, int width, int height) {
    RasterImage out(width, height, img.channels);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(img.height - 1, y * img.height / height);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(img.width - 1, x * img.width / width);
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& img) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(img.width);
    desc.height = static_cast<png_uint_32>(img.height);
    desc.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&desc, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw IoError(path.string(), "png write failed: " + msg);
    }
}

RasterImage read_png(const std::filesystem::path& path) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&desc, path.c_str()))
        throw IoError(path.string(), std::string("png read failed: ") + desc.message);
    const bool gray = (desc.format & PNG_FORMAT_FLAG_COLOR) == 0;
    desc.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    RasterImage img(static_cast<int>(desc.width), static_cast<int>(desc.height), gray ? 1 : 3);
    if (!png_image_finish_read(&desc, nullptr, img.pixels.data(), 0, nullptr)) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw IoError(path.string(), "png decode failed: " + msg);
    }
    return img;
}

}  // namespace viewlab
