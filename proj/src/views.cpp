#include "viewlab/views.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

double to_double(std::string_view s, std::string_view context) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const double v = std::stod(str, &used);
        if (used != str.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument(fmt::format("bad number '{}' in train-view spec '{}'", s, context));
    }
}

Axis parse_single_axis(std::string_view s) {
    const AxisSet set = parse_axis_set(s);
    if (is_dual(set)) throw InvalidArgument("train views use a single axis");
    return axes_of(set)[0];
}

std::string_view axis_name(Axis a) {
    static constexpr std::string_view names[] = {"x", "y", "z"};
    return names[static_cast<int>(a)];
}

}  // namespace

double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0) w -= 360.0;
    return w;
}

double angular_distance(double a_deg, double b_deg) {
    const double d = wrap_deg(a_deg - b_deg);
    return std::min(d, 360.0 - d);
}

TrainViews TrainViews::uniform(Axis axis, int count, double offset_deg) {
    if (count < 1) throw InvalidArgument("uniform train views need count >= 1");
    TrainViews tv{axis, {}};
    for (int i = 0; i < count; ++i) tv.angles_deg.push_back(wrap_deg(offset_deg + 360.0 * i / count));
    return tv;
}

TrainViews TrainViews::range(Axis axis, double lo_deg, double hi_deg, int count) {
    if (count < 1 || hi_deg < lo_deg) throw InvalidArgument("range train views need count >= 1 and lo <= hi");
    TrainViews tv{axis, {}};
    for (int i = 0; i < count; ++i) {
        const double a = count == 1 ? 0.5 * (lo_deg + hi_deg) : lo_deg + (hi_deg - lo_deg) * i / (count - 1);
        tv.angles_deg.push_back(wrap_deg(a));
    }
    return tv;
}

TrainViews TrainViews::parse(std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() < 2) throw InvalidArgument(fmt::format("bad train-view spec '{}'", text));
    const Axis axis = parse_single_axis(parts[0]);
    if (parts[1] == "uniform") {
        if (parts.size() != 3 && parts.size() != 4)
            throw InvalidArgument(fmt::format("expected axis:uniform:N[:offset], got '{}'", text));
        const int n = static_cast<int>(to_double(parts[2], text));
        const double offset = parts.size() == 4 ? to_double(parts[3], text) : 0.0;
        return uniform(axis, n, offset);
    }
    if (parts[1] == "range") {
        if (parts.size() != 5)
            throw InvalidArgument(fmt::format("expected axis:range:lo:hi:N, got '{}'", text));
        return range(axis, to_double(parts[2], text), to_double(parts[3], text),
                     static_cast<int>(to_double(parts[4], text)));
    }
    if (parts.size() != 2) throw InvalidArgument(fmt::format("bad train-view spec '{}'", text));
    TrainViews tv{axis, {}};
    for (auto a : split(parts[1], ',')) tv.angles_deg.push_back(wrap_deg(to_double(a, text)));
    return tv;
}

std::vector<PoseSpec> TrainViews::poses() const {
    std::vector<PoseSpec> out;
    for (double a : angles_deg) out.push_back(PoseSpec::single(axis, a));
    return out;
}

bool TrainViews::contains(const PoseSpec& pose) const {
    if (is_dual(pose.axes) || axes_of(pose.axes)[0] != axis) return false;
    return std::any_of(angles_deg.begin(), angles_deg.end(),
                       [&](double a) { return angular_distance(a, pose.angles_deg[0]) < 1e-9; });
}

std::string TrainViews::to_string() const {
    std::string s = fmt::format("{}:", axis_name(axis));
    for (std::size_t i = 0; i < angles_deg.size(); ++i)
        s += fmt::format("{}{}", i ? "," : "", angles_deg[i]);
    return s;
}

ViewSample make_view(const Paperclip& clip, const PoseSpec& pose, const Camera& cam) {
    ViewSample v;
    v.class_id = clip.class_id;
    v.pose = pose;
    const Eigen::Matrix3Xd rotated = apply_pose(clip.vertices, pose);
    v.plane = image_plane(rotated, cam);
    v.pixels = to_pixels(v.plane, cam);
    return v;
}

}  // namespace viewlab
