#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "viewlab/scene.hpp"

namespace viewlab {

/// 8-bit row-major image with 1 or 3 interleaved channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, int c = 1, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t count_nonzero() const;

    bool operator==(const RasterImage&) const = default;
};

struct StrokeStyle {
    double line_width = 2.0;
    double disc_radius = 2.0;
};

/// Consecutive vertices joined by anti-aliased segments, white on black.
/// `points` are pixel coordinates; geometry outside the frame is clipped.
RasterImage render_wireframe(const Eigen::Matrix2Xd& points, const Camera& cam,
                             const StrokeStyle& style = {});

/// Filled anti-aliased discs at each vertex, white on black.
RasterImage render_coord_image(const Eigen::Matrix2Xd& points, const Camera& cam,
                               const StrokeStyle& style = {});

inline constexpr int kDefaultBins = 64;

/// Two concatenated L-bin histograms (x half, then y half) of the pixel
/// positions; every in-frame vertex adds 1/8 to one bin of each half.
/// Vertices outside the frame contribute nothing.
Eigen::VectorXd coord_array(const Eigen::Matrix2Xd& points, const Camera& cam,
                            int bins = kDefaultBins);

/// Background where the foreground is black, foreground elsewhere.
/// Throws SizeMismatch unless width, height and channels agree.
RasterImage composite_background(const RasterImage& fg, const RasterImage& bg);

/// Replicates a single-channel image into three channels.
RasterImage expand_to_rgb(const RasterImage& img);

/// Nearest-neighbour resize, used to fit backgrounds to the frame.
RasterImage resize_nearest(const RasterImage& img, int width, int height);

void write_png(const std::filesystem::path& path, const RasterImage& img);
RasterImage read_png(const std::filesystem::path& path);

}  // namespace viewlab
