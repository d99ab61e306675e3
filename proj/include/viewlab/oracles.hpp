#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewlab/clipgen.hpp"
#include "viewlab/geometry.hpp"
#include "viewlab/scene.hpp"
#include "viewlab/views.hpp"

namespace viewlab {

struct LibraryView {
    View2 points;
    PoseSpec pose;
};

/// Training views per class. Vertex order is shared across all views, so
/// correspondences are known.
class ViewLibrary {
public:
    void add(ClassId class_id, const View2& points, const PoseSpec& pose);

    /// Image-plane views of each clip at the selected training poses.
    static ViewLibrary from_clips(std::span<const Paperclip> clips, const TrainViews& views,
                                  const Camera& cam);

    const std::map<ClassId, std::vector<LibraryView>>& classes() const { return classes_; }
    bool empty() const { return classes_.empty(); }
    std::size_t size() const { return classes_.size(); }

    /// Point sets of one class, in insertion order.
    std::vector<View2> views_of(ClassId class_id) const;

private:
    std::map<ClassId, std::vector<LibraryView>> classes_;
};

/// Per-class scores plus the winning class. Lower-is-better or
/// higher-is-better depends on the oracle; `best` is always the decision.
struct OracleResult {
    std::vector<ClassId> classes;
    std::vector<double> scores;
    ClassId best = 0;
};

// ---------------------------------------------------------------------------
// Pure 2D matching

struct Match2dOptions {
    double sigma = 0.1;                   ///< RBF width in normalized coordinate units
    bool allow_flip = true;               ///< also match the horizontally mirrored test view
    bool allow_inplane_rotation = false;  ///< align in-plane rotation too
};

/// Centers a view and scales it to unit Frobenius norm. Throws
/// DegenerateObject when all points coincide.
View2 normalize_view(const View2& view);

/// Distance between two normalized views after the optional flip/rotation
/// alignment.
double aligned_distance(const View2& test_normalized, const View2& stored_normalized,
                        const Match2dOptions& options);

/// RBF nearest-view matcher over a fixed library.
class Matcher2D {
public:
    Matcher2D(const ViewLibrary& library, Match2dOptions options = {});

    /// scores[k] = max over the class's views of exp(-d^2 / 2 sigma^2).
    /// The decision uses the minimum distance, so it stays defined when every
    /// score underflows.
    OracleResult match(const View2& test) const;
    ClassId classify(const View2& test) const;
    /// Per-class minimum aligned distance.
    std::vector<double> distances(const View2& test) const;

    const Match2dOptions& options() const { return options_; }

private:
    Match2dOptions options_;
    std::vector<ClassId> classes_;
    std::vector<std::vector<View2>> normalized_;
};

OracleResult match2d(const View2& test, const ViewLibrary& library, const Match2dOptions& options = {});

// ---------------------------------------------------------------------------
// Linear combination of views

struct LcOptions {
    bool constant_column = true;
    double rank_tolerance = 1e-10;  ///< relative pivot threshold of the QR
};

/// min over coefficients of |x - B a|^2 + |y - B b|^2, B = [x1 y1 x2 y2 ... 1],
/// divided by the squared norm of the centered test view. Throws
/// DegenerateSpan when rank(B) < 3 and InvalidArgument for fewer than 2 views.
double lc_residual(const View2& test, std::span<const View2> class_views, const LcOptions& options = {});

/// Orthonormal basis of one class's view span.
class LcSpan {
public:
    LcSpan(std::span<const View2> class_views, const LcOptions& options = {});
    double residual(const View2& test) const;
    int rank() const { return static_cast<int>(basis_.cols()); }

private:
    Eigen::Matrix<double, kVertexCount, Eigen::Dynamic> basis_;
};

/// Argmin-residual classifier; classes whose views span fewer than 3
/// dimensions score +infinity. Ties go to the lowest class id.
class LcClassifier {
public:
    explicit LcClassifier(const ViewLibrary& library, LcOptions options = {});
    OracleResult score(const View2& test) const;
    ClassId classify(const View2& test) const;

private:
    std::vector<ClassId> classes_;
    std::vector<std::optional<LcSpan>> spans_;
};

ClassId lc_classify(const View2& test, const ViewLibrary& library, const LcOptions& options = {});

// ---------------------------------------------------------------------------
// Structure from motion + alignment

struct Shape3D {
    Vertices3 points = Vertices3::Zero();
    Eigen::VectorXd singular_values;  ///< of the centered measurement matrix
    double sigma3_over_sigma4 = std::numeric_limits<double>::infinity();
};

inline constexpr double kRankRatioThreshold = 1e-6;

/// Rank-3 factorization of the centered 2F x 8 measurement matrix followed by
/// the orthographic metric upgrade. The shape is recovered up to a global
/// rotation and reflection.
Shape3D sfm_reconstruct(std::span<const View2> views);

struct AlignResult {
    double residual = 0.0;                ///< after projecting onto scaled orthographic poses
    double unconstrained_residual = 0.0;  ///< best affine 2x3 fit
};

/// Fits test ~ M S + t, first with an unconstrained 2x3 M, then with M
/// snapped to the nearest scaled row-orthonormal matrix; both mirror
/// hypotheses of S are tried. Residuals are normalized by |test - mean|^2.
AlignResult align_residual(const View2& test, const Shape3D& shape);

OracleResult align_scores(const View2& test, const std::map<ClassId, Shape3D>& shapes);
ClassId align_classify(const View2& test, const std::map<ClassId, Shape3D>& shapes);

/// Reconstructs every class of a library.
std::map<ClassId, Shape3D> reconstruct_library(const ViewLibrary& library);

}  // namespace viewlab
