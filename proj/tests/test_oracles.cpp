#include <doctest.h>

#include "support.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/oracles.hpp"
#include "viewlab/views.hpp"

using namespace viewlab;

namespace {

std::vector<Paperclip> clips(int n, std::uint64_t seed = 0) {
    GenConfig cfg;
    cfg.seed = seed;
    std::vector<Paperclip> out;
    for (int k = 0; k < n; ++k) out.push_back(generate_paperclip(cfg, static_cast<ClassId>(k)));
    return out;
}

View2 view(const Paperclip& c, const PoseSpec& pose, const Camera& cam = Camera::orthographic()) {
    return make_view(c, pose, cam).plane;
}

std::vector<View2> views(const Paperclip& c, std::initializer_list<double> y_angles) {
    std::vector<View2> out;
    for (double a : y_angles) out.push_back(view(c, PoseSpec::single(Axis::Y, a)));
    return out;
}

PoseSpec random_pose(viewlab::Rng& rng) {
    const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};
    return PoseSpec::single(axes[rng.below(3)], std::floor(rng.uniform(0, 360)));
}

}  // namespace

TEST_CASE("match2d: exact view, sigma limit, invariances") {
    const auto cs = clips(20);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("y:0,90"), Camera::orthographic());
    const View2 probe = view(cs[7], PoseSpec::single(Axis::Y, 90));
    const OracleResult r = match2d(probe, lib);
    CHECK(r.best == 7);
    CHECK(r.scores[7] == doctest::Approx(1.0));
    CHECK(Matcher2D(lib).distances(probe)[7] < 1e-7);

    // Moved and rescaled: same decision and same scores.
    const View2 moved = ((2.7 * probe).colwise() + Eigen::Vector2d(-4.0, 11.0)).eval();
    const OracleResult rm = match2d(moved, lib);
    for (std::size_t k = 0; k < r.scores.size(); ++k) CHECK(rm.scores[k] == doctest::Approx(r.scores[k]));

    // Mirrored test views are matched through the flip hypothesis.
    View2 mirrored = probe;
    mirrored.row(0) *= -1.0;
    CHECK(match2d(mirrored, lib).best == 7);
    Match2dOptions no_flip;
    no_flip.allow_flip = false;
    CHECK(Matcher2D(lib, no_flip).distances(mirrored)[7] > 1e-3);

    // Tiny sigma: every score underflows, the decision stays the min-distance one.
    viewlab::Rng rng(stream_key(1, 0, 0));
    Match2dOptions tiny;
    tiny.sigma = 1e-6;
    for (int t = 0; t < 100; ++t) {
        const auto& c = cs[rng.below(cs.size())];
        const View2 v = view(c, random_pose(rng));
        const auto d = Matcher2D(lib).distances(v);
        const auto argmin = static_cast<ClassId>(std::min_element(d.begin(), d.end()) - d.begin());
        CHECK(Matcher2D(lib, tiny).classify(v) == argmin);
        CHECK(match2d(v, lib).best == argmin);
    }

    CHECK_THROWS_AS(Matcher2D(ViewLibrary{}), EmptyLibrary);
    Match2dOptions bad;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(Matcher2D(lib, bad), InvalidArgument);
}

TEST_CASE("match2d: in-plane alignment makes z rotations free") {
    const auto cs = clips(10);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("y:0"), Camera::orthographic());
    Match2dOptions rot;
    rot.allow_inplane_rotation = true;
    const Matcher2D m(lib, rot);
    for (double a = 0; a < 360; a += 15)
        for (const auto& c : cs) {
            const View2 v = view(c, PoseSpec::single(Axis::Z, a));
            CHECK(m.distances(v)[c.class_id] < 1e-7);
        }
}

TEST_CASE("lc_residual matches the brute-force least-squares reference") {
    const auto cs = clips(50, 5);
    viewlab::Rng rng(stream_key(2, 0, 0));
    for (const auto& c : cs) {
        const auto train = views(c, {0.0, 75.0});
        for (int t = 0; t < 4; ++t) {
            const View2 test = view(c, random_pose(rng));
            const double got = lc_residual(test, train);
            CHECK(got <= 1e-9);
            CHECK(std::abs(got - testing::brute_lc_residual(test, train)) <= 1e-9);
        }
        // Against another object the residual is large; both routes agree.
        const View2 other = view(cs[(c.class_id + 1) % cs.size()], random_pose(rng));
        const double got = lc_residual(other, train);
        CHECK(got == doctest::Approx(testing::brute_lc_residual(other, train)).epsilon(1e-6));
        LcOptions no_const;
        no_const.constant_column = false;
        CHECK(lc_residual(other, train, no_const) ==
              doctest::Approx(testing::brute_lc_residual(other, train, false)).epsilon(1e-6));
    }
}

TEST_CASE("lc_residual: training view, generic rigid rotation, impostors") {
    const auto cs = clips(40, 6);
    const auto train = views(cs[0], {10.0, 50.0});
    CHECK(lc_residual(train[1], train) <= 1e-20);

    viewlab::Rng rng(stream_key(3, 0, 0));
    for (int t = 0; t < 50; ++t) {
        const Eigen::Matrix3d r = testing::rodrigues(rng.unit_vector(), rng.uniform(0, 360));
        const Vertices3 rotated = r * cs[0].vertices;
        const View2 test = rotated.topRows<2>();
        CHECK(lc_residual(test, train) <= 1e-9);
    }

    std::vector<double> impostor;
    for (int t = 0; t < 1000; ++t) {
        const auto& owner = cs[1 + rng.below(cs.size() - 1)];
        impostor.push_back(lc_residual(view(owner, random_pose(rng)), train));
    }
    CHECK(testing::median(impostor) > 1e-3);
}

TEST_CASE("lc: classification and preconditions") {
    const auto cs = clips(100, 7);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("y:0,75"), Camera::orthographic());
    const LcClassifier lc(lib);
    viewlab::Rng rng(stream_key(4, 0, 0));
    int correct = 0;
    for (int t = 0; t < 100; ++t) {
        const auto& c = cs[static_cast<std::size_t>(t)];
        correct += lc.classify(view(c, PoseSpec::single(Axis::Y, rng.uniform(0, 360)))) == c.class_id;
    }
    CHECK(correct == 100);

    // Perspective breaks the exact span; the accuracy is reported, not pinned.
    const Camera persp = Camera::perspective();
    const ViewLibrary plib = ViewLibrary::from_clips(cs, TrainViews::parse("y:0,75"), persp);
    const LcClassifier plc(plib);
    int pcorrect = 0;
    for (const auto& c : cs) pcorrect += plc.classify(view(c, PoseSpec::single(Axis::Y, 200), persp)) == c.class_id;
    MESSAGE("lc accuracy under a perspective camera at distance 3, y=200: " << pcorrect << "/100");
    CHECK(pcorrect <= 100);

    const std::vector<View2> one = views(cs[0], {0.0});
    CHECK_THROWS_AS(lc_residual(one[0], one), InvalidArgument);
    // Identical collinear views span only {x, y, 1} with y = 2x: rank 2.
    View2 line;
    for (int i = 0; i < kVertexCount; ++i) line.col(i) = Eigen::Vector2d(0.1 * i, 0.2 * i);
    const std::vector<View2> same{line, line};
    CHECK_THROWS_AS(lc_residual(same[0], same), DegenerateSpan);
    CHECK_THROWS_AS(LcSpan{same}, DegenerateSpan);
    const std::vector<View2> repeated = views(cs[0], {30.0, 30.0});
    CHECK(lc_residual(repeated[0], repeated) < 1e-20);

    ViewLibrary mixed;
    mixed.add(0, same[0], PoseSpec::single(Axis::Y, 30));
    mixed.add(0, same[1], PoseSpec::single(Axis::Y, 30));
    for (const auto& v : views(cs[1], {0.0, 75.0})) mixed.add(1, v, PoseSpec{});
    const OracleResult scored = LcClassifier(mixed).score(same[0]);
    CHECK(std::isinf(scored.scores[0]));
    CHECK(scored.best == 1);
}

TEST_CASE("sfm_reconstruct recovers the shape up to rotation and reflection") {
    const auto cs = clips(30, 9);
    for (const auto& c : cs) {
        const auto vs = views(c, {0.0, 10.0, 20.0, 30.0, 40.0});
        const Shape3D s = sfm_reconstruct(vs);
        CHECK(testing::procrustes_rmsd(s.points, c.vertices, true) <= 1e-6);
        CHECK(s.points.rowwise().mean().norm() < 1e-12);
        CHECK(s.sigma3_over_sigma4 > 1e6);
    }
    // Views spread over several axes work as well.
    std::vector<View2> mixed{view(cs[0], PoseSpec::single(Axis::X, 20)), view(cs[0], PoseSpec::single(Axis::Y, 50)),
                             view(cs[0], PoseSpec::single(Axis::Z, 80)), view(cs[0], PoseSpec::dual(AxisSet::XY, 30, 60))};
    CHECK(testing::procrustes_rmsd(sfm_reconstruct(mixed).points, cs[0].vertices, true) <= 1e-6);
}

TEST_CASE("sfm_reconstruct failure modes") {
    const auto cs = clips(2, 10);
    CHECK_THROWS_AS(sfm_reconstruct(views(cs[0], {0.0, 40.0})), InsufficientViews);
    CHECK_THROWS_AS(sfm_reconstruct(views(cs[0], {20.0, 20.0, 20.0, 20.0})), RankDeficient);

    Vertices3 flat = cs[1].vertices;
    flat.row(2).setZero();
    Paperclip planar{flat, 1};
    std::vector<View2> pv;
    for (double a : {0.0, 20.0, 40.0, 60.0}) pv.push_back(view(planar, PoseSpec::single(Axis::X, a)));
    CHECK_THROWS_AS(sfm_reconstruct(pv), RankDeficient);
}

TEST_CASE("alignment: full 3D generalization and impostors") {
    const auto cs = clips(100, 11);
    const ViewLibrary lib =
        ViewLibrary::from_clips(cs, TrainViews::parse("y:0,10,20,30,40"), Camera::orthographic());
    const auto shapes = reconstruct_library(lib);
    viewlab::Rng rng(stream_key(5, 0, 0));
    std::vector<double> impostor;
    for (int t = 0; t < 100; ++t) {
        const auto& c = cs[static_cast<std::size_t>(t)];
        const View2 test = view(c, random_pose(rng));
        CHECK(align_classify(test, shapes) == c.class_id);
        const AlignResult own = align_residual(test, shapes.at(c.class_id));
        CHECK(own.residual <= 1e-6);
        const AlignResult other = align_residual(test, shapes.at((c.class_id + 1) % 100));
        impostor.push_back(other.residual);
        CHECK(other.unconstrained_residual <= other.residual + 1e-12);
        CHECK(own.unconstrained_residual <= own.residual + 1e-12);
    }
    CHECK(testing::median(impostor) > 1e-3);

    // Scores are deterministic given the library.
    const View2 probe = view(cs[3], PoseSpec::single(Axis::X, 123));
    CHECK(align_scores(probe, shapes).scores == align_scores(probe, reconstruct_library(lib)).scores);
}

TEST_CASE("view library bookkeeping") {
    const auto cs = clips(3);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("z:0,45,90"), Camera::orthographic());
    CHECK(lib.size() == 3);
    REQUIRE(lib.views_of(2).size() == 3);
    CHECK(lib.classes().at(2)[1].pose == PoseSpec::single(Axis::Z, 45));
    CHECK(lib.views_of(2)[1] == view(cs[2], PoseSpec::single(Axis::Z, 45)));
}
