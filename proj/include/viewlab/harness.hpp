#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "viewlab/classifiers.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/dataset.hpp"
#include "viewlab/scene.hpp"
#include "viewlab/views.hpp"

namespace viewlab {

/// Accuracy over a rotation grid: 360/stride bins for a single axis, a
/// (360/stride)^2 row-major lattice (first angle major) for two axes.
struct GeneralizationProfile {
    AxisSet axes = AxisSet::Y;
    int stride = 1;
    int classes = 0;
    std::vector<double> accuracy;
    std::vector<bool> training;

    static GeneralizationProfile empty(AxisSet axes, int stride, int classes = 0);

    int bins_per_axis() const { return 360 / stride; }
    std::size_t size() const { return accuracy.size(); }
    std::vector<PoseSpec> poses() const;
    /// Bin index of a pose on this grid; throws InvalidArgument if off-grid.
    std::size_t index_of(const PoseSpec& pose) const;
    double mean() const;
};

/// Provides the view of a class at a pose.
class ViewSource {
public:
    virtual ~ViewSource() = default;
    virtual std::vector<ClassId> classes() const = 0;
    virtual std::optional<ViewSample> view(ClassId class_id, const PoseSpec& pose) const = 0;
};

/// Views generated on the fly from geometry.
class ClipViewSource final : public ViewSource {
public:
    ClipViewSource(std::vector<Paperclip> clips, Camera cam);
    std::vector<ClassId> classes() const override;
    std::optional<ViewSample> view(ClassId class_id, const PoseSpec& pose) const override;

private:
    std::vector<Paperclip> clips_;
    std::map<ClassId, std::size_t> index_;
    Camera cam_;
};

/// Views read from a dataset manifest's point records.
class ManifestViewSource final : public ViewSource {
public:
    explicit ManifestViewSource(const DatasetManifest& manifest);
    std::vector<ClassId> classes() const override;
    std::optional<ViewSample> view(ClassId class_id, const PoseSpec& pose) const override;

private:
    using Key = std::tuple<ClassId, int, long long, long long>;
    static Key key(ClassId class_id, const PoseSpec& pose);
    Camera cam_;
    std::vector<ClassId> classes_;
    std::map<Key, View2> points_;
};

/// Poses of `views` as they appear on a grid over `axes` (for dual grids the
/// other angle is zero). Empty when the training axis is not part of `axes`.
std::vector<PoseSpec> training_poses_on(AxisSet axes, const TrainViews& views);

/// Fraction of classes classified correctly at every grid pose. Throws
/// MissingPoses if the source lacks a required (class, pose).
GeneralizationProfile evaluate(const ViewClassifier& classifier, const ViewSource& source, AxisSet axes,
                               int stride, const std::optional<TrainViews>& train_views = std::nullopt);

/// One externally produced prediction.
struct PredictionRecord {
    ClassId class_id = 0;
    PoseSpec pose;
    ClassId predicted = 0;
    bool correct = false;
};

std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path);
void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records);

/// Profile from external predictions; classes are those present in the records.
GeneralizationProfile evaluate_predictions(std::span<const PredictionRecord> records, AxisSet axes, int stride,
                                           const std::optional<TrainViews>& train_views = std::nullopt);

/// baseline(theta) = max over training views v of single_view(theta - v).
GeneralizationProfile view_based_baseline(const GeneralizationProfile& single_view,
                                          std::span<const double> training_angles_deg);

/// Bins outside the circular hull of the training angles: the interior of
/// the largest gap between consecutive angles when that gap exceeds 180
/// degrees, none otherwise.
std::vector<bool> extrapolation_mask(const GeneralizationProfile& profile, std::span<const double> training_angles_deg);

struct ProfileMetrics {
    double mean = 0.0;
    std::optional<double> intermediate_mean;
    std::optional<double> extrapolation_mean;
    std::optional<double> gap_to_baseline;  ///< mean(observed - baseline)
};

ProfileMetrics metrics(const GeneralizationProfile& profile, std::span<const double> training_angles_deg,
                       const GeneralizationProfile* baseline = nullptr);

/// Mean accuracy over single-axis bins whose angle lies in [lo, hi] (degrees,
/// wrapped; lo > hi selects the wrap-around arc).
double mean_over_arc(const GeneralizationProfile& profile, double lo_deg, double hi_deg);

/// Angle where accuracy first drops below `level`, searching both directions
/// from `center_deg`; returns the mean of the two one-sided widths, or 180 if
/// the profile never drops.
double half_width(const GeneralizationProfile& profile, double center_deg, double level = 0.5);

/// Element-wise mean of equally shaped profiles.
GeneralizationProfile average(std::span<const GeneralizationProfile> profiles);

// --- result CSV -------------------------------------------------------------

struct ResultRow {
    std::string condition;
    AxisSet axes = AxisSet::Y;
    double angle1 = 0.0;
    std::optional<double> angle2;
    double accuracy = 0.0;
    bool is_training_view = false;
    std::optional<std::uint64_t> seed;  ///< empty for the across-seed mean

    bool operator==(const ResultRow&) const = default;
};

std::vector<ResultRow> profile_rows(const std::string& condition, const GeneralizationProfile& profile,
                                    std::optional<std::uint64_t> seed);
std::string write_results_csv(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);

}  // namespace viewlab
