#include "viewlab/oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "viewlab/errors.hpp"

namespace viewlab {

namespace {

double centered_norm2(const View2& v) {
    return (v.colwise() - v.rowwise().mean()).squaredNorm();
}

ClassId argmin(const std::vector<ClassId>& classes, const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return classes[best];
}

// Coefficients of a^T L b in the 6 unknowns of the symmetric L.
Eigen::Matrix<double, 1, 6> gram_row(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b) {
    Eigen::Matrix<double, 1, 6> g;
    g << a(0) * b(0), a(0) * b(1) + a(1) * b(0), a(0) * b(2) + a(2) * b(0), a(1) * b(1),
        a(1) * b(2) + a(2) * b(1), a(2) * b(2);
    return g;
}

}  // namespace

void ViewLibrary::add(ClassId class_id, const View2& points, const PoseSpec& pose) {
    classes_[class_id].push_back({points, pose});
}

ViewLibrary ViewLibrary::from_clips(std::span<const Paperclip> clips, const TrainViews& views,
                                    const Camera& cam) {
    ViewLibrary lib;
    for (const Paperclip& clip : clips)
        for (const PoseSpec& pose : views.poses()) lib.add(clip.class_id, make_view(clip, pose, cam).plane, pose);
    return lib;
}

std::vector<View2> ViewLibrary::views_of(ClassId class_id) const {
    std::vector<View2> out;
    if (auto it = classes_.find(class_id); it != classes_.end())
        for (const auto& v : it->second) out.push_back(v.points);
    return out;
}

// --- 2D matching -----------------------------------------------------------

View2 normalize_view(const View2& view) {
    View2 c = view.colwise() - view.rowwise().mean();
    const double n = c.norm();
    if (!(n > 1e-15)) throw DegenerateObject("view collapses to a single point");
    return c / n;
}

double aligned_distance(const View2& a, const View2& b, const Match2dOptions& options) {
    auto best_corr = [&](const View2& t) {
        if (!options.allow_inplane_rotation) return (t.array() * b.array()).sum();
        // max over rotations R of <t, R b> for unit-norm views
        const double dot = (t.array() * b.array()).sum();
        const double cross = (b.row(0).array() * t.row(1).array() - b.row(1).array() * t.row(0).array()).sum();
        return std::hypot(dot, cross);
    };
    double corr = best_corr(a);
    if (options.allow_flip) {
        View2 flipped = a;
        flipped.row(0) *= -1.0;
        corr = std::max(corr, best_corr(flipped));
    }
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * corr));
}

Matcher2D::Matcher2D(const ViewLibrary& library, Match2dOptions options) : options_(options) {
    if (library.empty()) throw EmptyLibrary("match2d: library has no classes");
    if (!(options.sigma > 0.0)) throw InvalidArgument("match2d: sigma must be positive");
    for (const auto& [id, views] : library.classes()) {
        if (views.empty()) throw EmptyLibrary(fmt::format("match2d: class {} has no views", id));
        classes_.push_back(id);
        auto& normalized = normalized_.emplace_back();
        for (const auto& v : views) normalized.push_back(normalize_view(v.points));
    }
}

std::vector<double> Matcher2D::distances(const View2& test) const {
    const View2 t = normalize_view(test);
    std::vector<double> out(classes_.size(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < classes_.size(); ++k)
        for (const View2& v : normalized_[k]) out[k] = std::min(out[k], aligned_distance(t, v, options_));
    return out;
}

OracleResult Matcher2D::match(const View2& test) const {
    OracleResult r;
    r.classes = classes_;
    const auto d = distances(test);
    const double denom = 2.0 * options_.sigma * options_.sigma;
    for (double di : d) r.scores.push_back(std::exp(-di * di / denom));
    r.best = argmin(classes_, d);
    return r;
}

ClassId Matcher2D::classify(const View2& test) const { return argmin(classes_, distances(test)); }

OracleResult match2d(const View2& test, const ViewLibrary& library, const Match2dOptions& options) {
    return Matcher2D(library, options).match(test);
}

// --- linear combination of views ------------------------------------------

LcSpan::LcSpan(std::span<const View2> class_views, const LcOptions& options) {
    if (class_views.size() < 2)
        throw InvalidArgument(fmt::format("linear combination needs >= 2 views, got {}", class_views.size()));
    const Eigen::Index cols = 2 * static_cast<Eigen::Index>(class_views.size()) + (options.constant_column ? 1 : 0);
    Eigen::Matrix<double, kVertexCount, Eigen::Dynamic> b(kVertexCount, cols);
    Eigen::Index c = 0;
    for (const View2& v : class_views) {
        b.col(c++) = v.row(0).transpose();
        b.col(c++) = v.row(1).transpose();
    }
    if (options.constant_column) b.col(c).setOnes();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
    qr.setThreshold(options.rank_tolerance);
    const Eigen::Index rank = qr.rank();
    if (rank < 3) throw DegenerateSpan(fmt::format("training views span rank {} < 3", rank));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(kVertexCount, rank);
    basis_ = q;
}

double LcSpan::residual(const View2& test) const {
    const double norm2 = centered_norm2(test);
    if (!(norm2 > 0.0)) throw DegenerateObject("lc_residual: test view collapses to a point");
    double r = 0.0;
    for (int row = 0; row < 2; ++row) {
        const Eigen::Matrix<double, kVertexCount, 1> x = test.row(row).transpose();
        r += (x - basis_ * (basis_.transpose() * x)).squaredNorm();
    }
    return r / norm2;
}

double lc_residual(const View2& test, std::span<const View2> class_views, const LcOptions& options) {
    return LcSpan(class_views, options).residual(test);
}

LcClassifier::LcClassifier(const ViewLibrary& library, LcOptions options) {
    if (library.empty()) throw EmptyLibrary("lc: library has no classes");
    for (const auto& [id, views] : library.classes()) {
        classes_.push_back(id);
        std::vector<View2> pts;
        for (const auto& v : views) pts.push_back(v.points);
        try {
            spans_.emplace_back(LcSpan(pts, options));
        } catch (const DegenerateSpan&) {
            spans_.emplace_back(std::nullopt);
        }
    }
}

OracleResult LcClassifier::score(const View2& test) const {
    OracleResult r;
    r.classes = classes_;
    for (const auto& span : spans_)
        r.scores.push_back(span ? span->residual(test) : std::numeric_limits<double>::infinity());
    r.best = argmin(classes_, r.scores);
    return r;
}

ClassId LcClassifier::classify(const View2& test) const { return score(test).best; }

ClassId lc_classify(const View2& test, const ViewLibrary& library, const LcOptions& options) {
    return LcClassifier(library, options).classify(test);
}

// --- structure from motion --------------------------------------------------

Shape3D sfm_reconstruct(std::span<const View2> views) {
    const auto frames = static_cast<Eigen::Index>(views.size());
    if (frames < 3) throw InsufficientViews(fmt::format("sfm needs >= 3 views, got {}", frames));

    Eigen::MatrixXd w(2 * frames, kVertexCount);
    for (Eigen::Index f = 0; f < frames; ++f) {
        const View2& v = views[static_cast<std::size_t>(f)];
        w.middleRows<2>(2 * f) = v.colwise() - v.rowwise().mean();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Shape3D shape;
    shape.singular_values = sv;
    if (sv.size() < 3 || !(sv(0) > 0.0) || sv(2) / sv(0) < kRankRatioThreshold)
        throw RankDeficient(fmt::format("measurement matrix rank < 3 (sigma3/sigma1 = {:.3g})",
                                        sv.size() >= 3 && sv(0) > 0.0 ? sv(2) / sv(0) : 0.0));
    shape.sigma3_over_sigma4 = sv.size() > 3 && sv(3) > 0.0 ? sv(2) / sv(3)
                                                            : std::numeric_limits<double>::infinity();

    const Eigen::Vector3d root = sv.head<3>().cwiseSqrt();
    const Eigen::MatrixXd motion = svd.matrixU().leftCols<3>() * root.asDiagonal();
    const Eigen::Matrix3Xd structure = root.asDiagonal() * svd.matrixV().leftCols<3>().transpose();

    // Orthonormal camera rows: m_x L m_x = m_y L m_y = 1, m_x L m_y = 0.
    Eigen::MatrixXd g(3 * frames, 6);
    Eigen::VectorXd rhs(3 * frames);
    for (Eigen::Index f = 0; f < frames; ++f) {
        const Eigen::RowVector3d mx = motion.row(2 * f);
        const Eigen::RowVector3d my = motion.row(2 * f + 1);
        g.row(3 * f) = gram_row(mx, mx);
        g.row(3 * f + 1) = gram_row(my, my);
        g.row(3 * f + 2) = gram_row(mx, my);
        rhs.segment<3>(3 * f) << 1.0, 1.0, 0.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> gsvd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& gs = gsvd.singularValues();
    if (gs(gs.size() - 1) / gs(0) < 1e-10)
        throw RankDeficient("metric constraints underdetermined (views need >= 3 distinct poses)");
    const Eigen::Matrix<double, 6, 1> l = gsvd.solve(rhs);
    Eigen::Matrix3d gram;
    gram << l(0), l(1), l(2), l(1), l(3), l(4), l(2), l(4), l(5);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw RankDeficient("metric upgrade failed: Gram correction is not positive definite");
    const Eigen::Matrix3d correction = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal();
    shape.points = correction.inverse() * structure;
    return shape;
}

AlignResult align_residual(const View2& test, const Shape3D& shape) {
    const View2 t = test.colwise() - test.rowwise().mean();
    const double norm2 = t.squaredNorm();
    if (!(norm2 > 0.0)) throw DegenerateObject("align: test view collapses to a point");

    AlignResult best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (double mirror : {1.0, -1.0}) {
        Vertices3 s = shape.points.colwise() - shape.points.rowwise().mean();
        s.row(2) *= mirror;
        const Eigen::Matrix3d sst = s * s.transpose();
        const Eigen::Matrix<double, 2, 3> m = (sst.ldlt().solve(s * t.transpose())).transpose();
        const double unconstrained = (t - m * s).squaredNorm();

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Matrix<double, 2, 3> rows = svd.matrixU() * svd.matrixV().transpose();
        const View2 rs = rows * s;
        const double denom = rs.squaredNorm();
        const double scale = denom > 0.0 ? std::max(0.0, (t.array() * rs.array()).sum() / denom) : 0.0;
        const double constrained = (t - scale * rs).squaredNorm();

        best.unconstrained_residual = std::min(best.unconstrained_residual, unconstrained / norm2);
        best.residual = std::min(best.residual, constrained / norm2);
    }
    return best;
}

OracleResult align_scores(const View2& test, const std::map<ClassId, Shape3D>& shapes) {
    if (shapes.empty()) throw EmptyLibrary("align: no reconstructed shapes");
    OracleResult r;
    for (const auto& [id, shape] : shapes) {
        r.classes.push_back(id);
        r.scores.push_back(align_residual(test, shape).residual);
    }
    r.best = argmin(r.classes, r.scores);
    return r;
}

ClassId align_classify(const View2& test, const std::map<ClassId, Shape3D>& shapes) {
    return align_scores(test, shapes).best;
}

std::map<ClassId, Shape3D> reconstruct_library(const ViewLibrary& library) {
    std::map<ClassId, Shape3D> out;
    for (const auto& [id, views] : library.classes()) {
        std::vector<View2> pts;
        for (const auto& v : views) pts.push_back(v.points);
        out.emplace(id, sfm_reconstruct(pts));
    }
    return out;
}

}  // namespace viewlab
