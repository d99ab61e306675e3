#include "viewlab/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 380.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Piecewise-linear approximation of viridis.
std::string heat_color(double v) {
    static constexpr std::array<std::array<double, 3>, 5> stops{{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    v = std::clamp(v, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(v), stops.size() - 2);
    const double t = v - static_cast<double>(i);
    std::array<int, 3> rgb{};
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<int>(std::lround(stops[i][c] + t * (stops[i + 1][c] - stops[i][c])));
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

std::string header(double w, double h, const std::string& title) {
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        w, h, w, h);
    s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", w, h);
    if (!title.empty())
        s += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", w / 2,
                         escape(title));
    return s;
}

std::string line_plot(const GeneralizationProfile& p, const PlotOptions& o) {
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double deg) { return kLeft + pw * deg / 360.0; };
    auto sy = [&](double acc) { return kTop + ph * (1.0 - acc); };
    const auto angle = [&](std::size_t b) { return static_cast<double>(b) * p.stride; };

    std::string s = header(kWidth, kHeight, o.title);
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);
    for (int t = 0; t <= 360; t += 60)
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", sx(t), kTop + ph + 18, t);
    for (int t = 0; t <= 5; ++t)
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 6,
                         sy(t / 5.0) + 4, t / 5.0);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}-axis rotation (deg)</text>\n",
                     kLeft + pw / 2, kHeight - 10, to_string(p.axes));

    if (o.baseline && o.baseline->size() == p.size()) {
        std::string poly;
        for (std::size_t b = 0; b < p.size(); ++b)
            poly += fmt::format("{:.2f},{:.2f} ", sx(angle(b)), sy(p.accuracy[b]));
        for (std::size_t b = p.size(); b-- > 0;)
            poly += fmt::format("{:.2f},{:.2f} ", sx(angle(b)), sy(o.baseline->accuracy[b]));
        s += fmt::format("<polygon points=\"{}\" fill=\"#ff7f0e\" fill-opacity=\"0.35\" stroke=\"none\"/>\n", poly);
        std::string path;
        for (std::size_t b = 0; b < p.size(); ++b)
            path += fmt::format("{}{:.2f},{:.2f}", b ? " L" : "M", sx(angle(b)), sy(o.baseline->accuracy[b]));
        s += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"#7f7f7f\" stroke-width=\"1.5\"/>\n", path);
    }
    if (o.chance)
        s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" y2=\"{:.2f}\" stroke=\"black\" "
                         "stroke-dasharray=\"4 3\" stroke-width=\"0.8\"/>\n",
                         kLeft, sy(*o.chance), kLeft + pw, sy(*o.chance));
    for (double a : o.training_angles) {
        const double x = sx(wrap_deg(a));
        s += fmt::format("<line class=\"training-view\" x1=\"{:.2f}\" y1=\"{:.1f}\" x2=\"{:.2f}\" y2=\"{:.1f}\" stroke=\"#1f77b4\" "
                         "stroke-dasharray=\"2 2\"/>\n",
                         x, kTop, x, kTop + ph);
    }
    std::string path;
    for (std::size_t b = 0; b < p.size(); ++b)
        path += fmt::format("{}{:.2f},{:.2f}", b ? " L" : "M", sx(angle(b)), sy(p.accuracy[b]));
    s += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.8\"/>\n", path);
    s += "</svg>\n";
    return s;
}

std::string heatmap(const GeneralizationProfile& p, const PlotOptions& o) {
    const int n = p.bins_per_axis();
    const double cell = 10.0;
    const double w = kLeft + n * cell + 80.0;
    const double h = kTop + n * cell + kBottom;
    const auto axes = axes_of(p.axes);
    static constexpr const char* names[] = {"x", "y", "z"};

    std::string s = header(w, h, o.title);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double acc = p.accuracy[static_cast<std::size_t>(i * n + j)];
            // first angle along the vertical, second along the horizontal
            s += fmt::format("<rect class=\"cell\" x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
                             kLeft + j * cell, kTop + i * cell, cell, cell, heat_color(acc));
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (p.training[static_cast<std::size_t>(i * n + j)])
                s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"#1f77b4\"/>\n",
                                 kLeft + (j + 0.5) * cell, kTop + (i + 0.5) * cell);
    for (int t = 0; t < n; t += 6) {
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + (t + 0.5) * cell,
                         kTop + n * cell + 16, t * p.stride);
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6,
                         kTop + (t + 0.5) * cell + 4, t * p.stride);
    }
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}-axis (deg)</text>\n",
                     kLeft + n * cell / 2, h - 10, names[static_cast<int>(axes[1])]);
    s += fmt::format("<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">{}-axis "
                     "(deg)</text>\n",
                     kTop + n * cell / 2, kTop + n * cell / 2, names[static_cast<int>(axes[0])]);
    const double lx = kLeft + n * cell + 20.0;
    for (int k = 0; k < 10; ++k)
        s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"14\" height=\"{:.1f}\" fill=\"{}\"/>\n", lx,
                         kTop + k * n * cell / 10.0, n * cell / 10.0, heat_color(1.0 - (k + 0.5) / 10.0));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">1.0</text>\n", lx + 18, kTop + 10);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">0.0</text>\n", lx + 18, kTop + n * cell);
    s += "</svg>\n";
    return s;
}

}  // namespace

std::string plot_svg(const GeneralizationProfile& profile, const PlotOptions& options) {
    if (profile.accuracy.empty()) throw InvalidArgument("plot_svg: empty profile");
    return is_dual(profile.axes) ? heatmap(profile, options) : line_plot(profile, options);
}

}  // namespace viewlab
