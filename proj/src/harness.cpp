#include "viewlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

namespace {

long long angle_key(double deg) { return std::llround(wrap_deg(deg) * 1000.0); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw SchemaError(fmt::format("{}: bad number '{}'", what, s));
    }
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "1" || s == "true" || s == "True") return true;
    if (s == "0" || s == "false" || s == "False") return false;
    throw SchemaError(fmt::format("{}: bad boolean '{}'", what, s));
}

std::vector<double> sorted_unique_angles(std::span<const double> angles) {
    std::vector<double> out;
    for (double a : angles) out.push_back(wrap_deg(a));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

// --- profile -----------------------------------------------------------------

GeneralizationProfile GeneralizationProfile::empty(AxisSet axes, int stride, int classes) {
    if (stride <= 0 || 360 % stride != 0) throw InvalidArgument("profile stride must divide 360");
    GeneralizationProfile p;
    p.axes = axes;
    p.stride = stride;
    p.classes = classes;
    const std::size_t n = static_cast<std::size_t>(360 / stride);
    const std::size_t size = is_dual(axes) ? n * n : n;
    p.accuracy.assign(size, 0.0);
    p.training.assign(size, false);
    return p;
}

std::vector<PoseSpec> GeneralizationProfile::poses() const {
    return is_dual(axes) ? pose_grid({axes}, 1, stride) : pose_grid({axes}, stride, 10);
}

std::size_t GeneralizationProfile::index_of(const PoseSpec& pose) const {
    if (pose.axes != axes) throw InvalidArgument("pose axes do not match the profile");
    auto bin = [&](double deg) {
        const double w = wrap_deg(deg) / stride;
        const long long b = std::llround(w);
        if (std::abs(w - static_cast<double>(b)) > 1e-6)
            throw InvalidArgument(fmt::format("angle {} is not on the {}-degree grid", deg, stride));
        return static_cast<std::size_t>(b % bins_per_axis());
    };
    const std::size_t i = bin(pose.angles_deg[0]);
    if (!is_dual(axes)) return i;
    return i * static_cast<std::size_t>(bins_per_axis()) + bin(pose.angles_deg[1]);
}

double GeneralizationProfile::mean() const {
    if (accuracy.empty()) return 0.0;
    return std::accumulate(accuracy.begin(), accuracy.end(), 0.0) / static_cast<double>(accuracy.size());
}

// --- view sources ------------------------------------------------------------

ClipViewSource::ClipViewSource(std::vector<Paperclip> clips, Camera cam) : clips_(std::move(clips)), cam_(cam) {
    for (std::size_t i = 0; i < clips_.size(); ++i) index_[clips_[i].class_id] = i;
}

std::vector<ClassId> ClipViewSource::classes() const {
    std::vector<ClassId> out;
    for (const auto& [id, _] : index_) out.push_back(id);
    return out;
}

std::optional<ViewSample> ClipViewSource::view(ClassId class_id, const PoseSpec& pose) const {
    const auto it = index_.find(class_id);
    if (it == index_.end()) return std::nullopt;
    return make_view(clips_[it->second], pose, cam_);
}

ManifestViewSource::Key ManifestViewSource::key(ClassId class_id, const PoseSpec& pose) {
    return {class_id, static_cast<int>(pose.axes), angle_key(pose.angles_deg[0]),
            is_dual(pose.axes) ? angle_key(pose.angles_deg[1]) : 0LL};
}

ManifestViewSource::ManifestViewSource(const DatasetManifest& manifest) : cam_(manifest.camera) {
    std::set<ClassId> ids;
    for (const auto& r : manifest.records) {
        if (!r.points) throw SchemaError("manifest records carry no 'points'; point classifiers need them");
        points_[key(r.class_id, r.pose)] = *r.points;
        ids.insert(r.class_id);
    }
    classes_.assign(ids.begin(), ids.end());
}

std::vector<ClassId> ManifestViewSource::classes() const { return classes_; }

std::optional<ViewSample> ManifestViewSource::view(ClassId class_id, const PoseSpec& pose) const {
    const auto it = points_.find(key(class_id, pose));
    if (it == points_.end()) return std::nullopt;
    ViewSample v;
    v.class_id = class_id;
    v.pose = pose;
    v.plane = it->second;
    v.pixels = to_pixels(v.plane, cam_);
    return v;
}

// --- evaluation --------------------------------------------------------------

std::vector<PoseSpec> training_poses_on(AxisSet axes, const TrainViews& views) {
    std::vector<PoseSpec> out;
    const auto list = axes_of(axes);
    for (std::size_t slot = 0; slot < list.size(); ++slot) {
        if (list[slot] != views.axis) continue;
        for (double a : views.angles_deg) {
            PoseSpec p{axes, {0.0, 0.0}};
            p.angles_deg[slot] = a;
            out.push_back(p);
        }
    }
    return out;
}

namespace {

void mark_training(GeneralizationProfile& p, const std::optional<TrainViews>& train_views) {
    if (!train_views) return;
    for (const PoseSpec& pose : training_poses_on(p.axes, *train_views)) {
        try {
            p.training[p.index_of(pose)] = true;
        } catch (const InvalidArgument&) {
            // off-grid training angle: nothing to mark
        }
    }
}

}  // namespace

GeneralizationProfile evaluate(const ViewClassifier& classifier, const ViewSource& source, AxisSet axes, int stride,
                               const std::optional<TrainViews>& train_views) {
    const auto classes = source.classes();
    if (classes.empty()) throw MissingPoses("view source has no classes");
    GeneralizationProfile profile = GeneralizationProfile::empty(axes, stride, static_cast<int>(classes.size()));
    const auto poses = profile.poses();
    std::vector<ViewSample> batch(classes.size());
    for (std::size_t b = 0; b < poses.size(); ++b) {
        for (std::size_t k = 0; k < classes.size(); ++k) {
            auto v = source.view(classes[k], poses[b]);
            if (!v)
                throw MissingPoses(fmt::format("no view for class {} at {} ({}, {})", classes[k],
                                               to_string(poses[b].axes), poses[b].angles_deg[0],
                                               poses[b].angles_deg[1]));
            batch[k] = std::move(*v);
        }
        const auto predicted = classifier.classify_all(batch);
        std::size_t correct = 0;
        for (std::size_t k = 0; k < classes.size(); ++k) correct += predicted[k] == classes[k];
        profile.accuracy[b] = static_cast<double>(correct) / static_cast<double>(classes.size());
    }
    mark_training(profile, train_views);
    return profile;
}

GeneralizationProfile evaluate_predictions(std::span<const PredictionRecord> records, AxisSet axes, int stride,
                                           const std::optional<TrainViews>& train_views) {
    std::set<ClassId> ids;
    for (const auto& r : records)
        if (r.pose.axes == axes) ids.insert(r.class_id);
    if (ids.empty()) throw MissingPoses(fmt::format("no predictions for axes '{}'", to_string(axes)));
    GeneralizationProfile profile = GeneralizationProfile::empty(axes, stride, static_cast<int>(ids.size()));
    std::vector<std::size_t> correct(profile.size(), 0);
    std::set<std::pair<ClassId, std::size_t>> seen;
    for (const auto& r : records) {
        if (r.pose.axes != axes) continue;
        std::size_t bin = 0;
        try {
            bin = profile.index_of(r.pose);
        } catch (const InvalidArgument&) {
            continue;
        }
        if (!seen.insert({r.class_id, bin}).second)
            throw SchemaError(fmt::format("duplicate prediction for class {} at bin {}", r.class_id, bin));
        correct[bin] += r.correct;
    }
    const std::size_t expected = ids.size() * profile.size();
    if (seen.size() != expected)
        throw MissingPoses(fmt::format("predictions cover {} of {} (class, pose) pairs", seen.size(), expected));
    for (std::size_t b = 0; b < profile.size(); ++b)
        profile.accuracy[b] = static_cast<double>(correct[b]) / static_cast<double>(ids.size());
    mark_training(profile, train_views);
    return profile;
}

std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open predictions");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty predictions file");
    const auto header = split_csv_line(line);
    auto column = [&](const char* name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(fmt::format("{}: missing column '{}'", path.string(), name));
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_class = column("class_id"), c_axes = column("axes"), c_a1 = column("angle1"),
                      c_a2 = column("angle2"), c_pred = column("predicted_class"), c_ok = column("correct");
    std::vector<PredictionRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        const std::string where = fmt::format("{}:{}", path.string(), line_no);
        if (cells.size() != header.size()) throw SchemaError(where + ": wrong number of columns");
        PredictionRecord r;
        r.class_id = static_cast<ClassId>(parse_number(cells[c_class], where + " class_id"));
        try {
            r.pose.axes = parse_axis_set(cells[c_axes]);
        } catch (const InvalidArgument& e) {
            throw SchemaError(where + ": axes: " + e.what());
        }
        r.pose.angles_deg[0] = parse_number(cells[c_a1], where + " angle1");
        if (is_dual(r.pose.axes)) r.pose.angles_deg[1] = parse_number(cells[c_a2], where + " angle2");
        r.predicted = static_cast<ClassId>(parse_number(cells[c_pred], where + " predicted_class"));
        r.correct = parse_bool(cells[c_ok], where + " correct");
        out.push_back(r);
    }
    return out;
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
    std::string text = "class_id,axes,angle1,angle2,predicted_class,correct\n";
    for (const auto& r : records) {
        text += fmt::format("{},{},{},{},{},{}\n", r.class_id, to_string(r.pose.axes), r.pose.angles_deg[0],
                            is_dual(r.pose.axes) ? fmt::format("{}", r.pose.angles_deg[1]) : std::string(),
                            r.predicted, r.correct ? 1 : 0);
    }
    write_file_atomic(path, text);
}

// --- baseline and metrics ----------------------------------------------------

GeneralizationProfile view_based_baseline(const GeneralizationProfile& single_view,
                                          std::span<const double> training_angles_deg) {
    if (is_dual(single_view.axes)) throw InvalidArgument("view-based baseline needs a single-axis profile");
    GeneralizationProfile out = single_view;
    const int n = single_view.bins_per_axis();
    std::fill(out.accuracy.begin(), out.accuracy.end(), 0.0);
    std::fill(out.training.begin(), out.training.end(), false);
    for (double v : training_angles_deg) {
        const double shift_bins = wrap_deg(v) / single_view.stride;
        const long long s = std::llround(shift_bins);
        if (std::abs(shift_bins - static_cast<double>(s)) > 1e-6)
            throw InvalidArgument(fmt::format("training angle {} is off the profile grid", v));
        for (int b = 0; b < n; ++b) {
            const auto src = static_cast<std::size_t>(((b - s) % n + n) % n);
            out.accuracy[static_cast<std::size_t>(b)] =
                std::max(out.accuracy[static_cast<std::size_t>(b)], single_view.accuracy[src]);
        }
        out.training[static_cast<std::size_t>(s % n)] = true;
    }
    return out;
}

std::vector<bool> extrapolation_mask(const GeneralizationProfile& profile, std::span<const double> training_angles_deg) {
    std::vector<bool> mask(profile.size(), false);
    if (is_dual(profile.axes)) return mask;
    const auto angles = sorted_unique_angles(training_angles_deg);
    if (angles.empty()) {
        std::fill(mask.begin(), mask.end(), true);
        return mask;
    }
    double gap = -1.0;
    double gap_start = 0.0;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const double a = angles[i];
        const double next = i + 1 < angles.size() ? angles[i + 1] : angles[0] + 360.0;
        if (next - a > gap) {
            gap = next - a;
            gap_start = a;
        }
    }
    if (gap <= 180.0) return mask;
    for (std::size_t b = 0; b < profile.size(); ++b) {
        const double offset = wrap_deg(static_cast<double>(b) * profile.stride - gap_start);
        mask[b] = offset > 1e-9 && offset < gap - 1e-9;
    }
    return mask;
}

ProfileMetrics metrics(const GeneralizationProfile& profile, std::span<const double> training_angles_deg,
                       const GeneralizationProfile* baseline) {
    ProfileMetrics m;
    m.mean = profile.mean();
    if (!is_dual(profile.axes)) {
        const auto mask = extrapolation_mask(profile, training_angles_deg);
        double in_sum = 0.0, out_sum = 0.0;
        std::size_t in_n = 0, out_n = 0;
        for (std::size_t b = 0; b < profile.size(); ++b) {
            if (mask[b]) {
                out_sum += profile.accuracy[b];
                ++out_n;
            } else {
                in_sum += profile.accuracy[b];
                ++in_n;
            }
        }
        if (in_n && !training_angles_deg.empty()) m.intermediate_mean = in_sum / static_cast<double>(in_n);
        if (out_n) m.extrapolation_mean = out_sum / static_cast<double>(out_n);
    }
    if (baseline) {
        if (baseline->size() != profile.size()) throw InvalidArgument("baseline and profile differ in size");
        double s = 0.0;
        for (std::size_t b = 0; b < profile.size(); ++b) s += profile.accuracy[b] - baseline->accuracy[b];
        m.gap_to_baseline = s / static_cast<double>(profile.size());
    }
    return m;
}

double mean_over_arc(const GeneralizationProfile& profile, double lo_deg, double hi_deg) {
    if (is_dual(profile.axes)) throw InvalidArgument("mean_over_arc needs a single-axis profile");
    const double lo = wrap_deg(lo_deg);
    const double hi = wrap_deg(hi_deg);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < profile.size(); ++b) {
        const double a = static_cast<double>(b) * profile.stride;
        const bool inside = lo <= hi ? (a >= lo - 1e-9 && a <= hi + 1e-9) : (a >= lo - 1e-9 || a <= hi + 1e-9);
        if (inside) {
            s += profile.accuracy[b];
            ++n;
        }
    }
    if (n == 0) throw InvalidArgument("arc selects no bins");
    return s / static_cast<double>(n);
}

double half_width(const GeneralizationProfile& profile, double center_deg, double level) {
    if (is_dual(profile.axes)) throw InvalidArgument("half_width needs a single-axis profile");
    const int n = profile.bins_per_axis();
    const auto c = static_cast<int>(std::llround(wrap_deg(center_deg) / profile.stride)) % n;
    auto side = [&](int dir) {
        for (int k = 0; k <= n / 2; ++k) {
            const int b = ((c + dir * k) % n + n) % n;
            if (profile.accuracy[static_cast<std::size_t>(b)] < level) return static_cast<double>(k * profile.stride);
        }
        return 180.0;
    };
    return 0.5 * (side(+1) + side(-1));
}

GeneralizationProfile average(std::span<const GeneralizationProfile> profiles) {
    if (profiles.empty()) throw InvalidArgument("average of no profiles");
    GeneralizationProfile out = profiles.front();
    for (std::size_t i = 1; i < profiles.size(); ++i) {
        if (profiles[i].size() != out.size() || profiles[i].axes != out.axes)
            throw InvalidArgument("profiles differ in shape");
        for (std::size_t b = 0; b < out.size(); ++b) out.accuracy[b] += profiles[i].accuracy[b];
    }
    for (double& a : out.accuracy) a /= static_cast<double>(profiles.size());
    return out;
}

// --- result CSV ----------------------------------------------------------------

std::vector<ResultRow> profile_rows(const std::string& condition, const GeneralizationProfile& profile,
                                    std::optional<std::uint64_t> seed) {
    std::vector<ResultRow> rows;
    const auto poses = profile.poses();
    for (std::size_t b = 0; b < poses.size(); ++b) {
        ResultRow r;
        r.condition = condition;
        r.axes = profile.axes;
        r.angle1 = poses[b].angles_deg[0];
        if (is_dual(profile.axes)) r.angle2 = poses[b].angles_deg[1];
        r.accuracy = profile.accuracy[b];
        r.is_training_view = profile.training[b];
        r.seed = seed;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string write_results_csv(std::span<const ResultRow> rows) {
    std::string text = "condition,axis_pair,angle1,angle2,accuracy,is_training_view,seed\n";
    for (const auto& r : rows) {
        if (r.condition.find_first_of(",\n\r") != std::string::npos)
            throw InvalidArgument(fmt::format("condition name '{}' contains a separator", r.condition));
        text += fmt::format("{},{},{},{},{},{},{}\n", r.condition, to_string(r.axes), r.angle1,
                            r.angle2 ? fmt::format("{}", *r.angle2) : std::string(), r.accuracy,
                            r.is_training_view ? 1 : 0, r.seed ? fmt::format("{}", *r.seed) : std::string("mean"));
    }
    return text;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("condition,axis_pair,angle1,angle2,accuracy,is_training_view,seed", 0) != 0)
        throw SchemaError("results CSV: unexpected header");
    std::vector<ResultRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = fmt::format("results CSV line {}", line_no);
        if (cells.size() != 7) throw SchemaError(where + ": expected 7 columns");
        ResultRow r;
        r.condition = cells[0];
        try {
            r.axes = parse_axis_set(cells[1]);
        } catch (const InvalidArgument& e) {
            throw SchemaError(where + ": " + e.what());
        }
        r.angle1 = parse_number(cells[2], where);
        if (!cells[3].empty()) r.angle2 = parse_number(cells[3], where);
        r.accuracy = parse_number(cells[4], where);
        r.is_training_view = parse_bool(cells[5], where);
        if (cells[6] != "mean") r.seed = static_cast<std::uint64_t>(std::stoull(cells[6]));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace viewlab
