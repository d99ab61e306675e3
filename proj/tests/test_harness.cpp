#include <doctest.h>

#include <fstream>
#include <regex>

#include "support.hpp"
#include "viewlab/classifiers.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/dataset.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/harness.hpp"
#include "viewlab/plot.hpp"
#include "viewlab/presets.hpp"

using namespace viewlab;

namespace {

std::vector<Paperclip> clips(int n, std::uint64_t seed = 0) {
    return generate_clips(GenConfig{}, seed, n);
}

class Perfect final : public ViewClassifier {
public:
    ClassId classify(const ViewSample& v) const override { return v.class_id; }
};

class Constant final : public ViewClassifier {
public:
    explicit Constant(ClassId c) : c_(c) {}
    ClassId classify(const ViewSample&) const override { return c_; }
private:
    ClassId c_;
};

GeneralizationProfile bump(int stride = 1) {
    GeneralizationProfile p = GeneralizationProfile::empty(AxisSet::Y, stride, 10);
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double d = angular_distance(static_cast<double>(b) * stride, 0.0);
        p.accuracy[b] = std::max(0.0, 1.0 - d / 40.0);
    }
    return p;
}

}  // namespace

TEST_CASE("evaluate: perfect and constant classifiers") {
    const ClipViewSource source(clips(8), Camera::orthographic());
    const auto perfect = evaluate(Perfect{}, source, AxisSet::Z, 1, TrainViews::parse("z:0,90"));
    CHECK(perfect.size() == 360);
    CHECK(perfect.mean() == 1.0);
    CHECK(perfect.training[90]);
    CHECK_FALSE(perfect.training[91]);
    for (double a : perfect.accuracy) CHECK(a == 1.0);

    const auto chance = evaluate(Constant{3}, source, AxisSet::XY, 10);
    CHECK(chance.size() == 1296);
    for (double a : chance.accuracy) CHECK(a == doctest::Approx(1.0 / 8));
    CHECK(std::none_of(chance.training.begin(), chance.training.end(), [](bool b) { return b; }));

    // Training poses appear on dual grids with the other angle at zero.
    const auto dual = evaluate(Perfect{}, source, AxisSet::YZ, 10, TrainViews::parse("y:0,30"));
    CHECK(dual.training[dual.index_of(PoseSpec::dual(AxisSet::YZ, 30, 0))]);
    CHECK_FALSE(dual.training[dual.index_of(PoseSpec::dual(AxisSet::YZ, 0, 30))]);
}

TEST_CASE("evaluate: match2d with one training view peaks there and decays") {
    const auto cs = clips(30);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("x:0"), Camera::orthographic());
    const Match2dClassifier m(lib);
    const auto p = evaluate(m, ClipViewSource(cs, Camera::orthographic()), AxisSet::X, 1, TrainViews::parse("x:0"));
    CHECK(p.accuracy[0] == 1.0);
    CHECK(p.accuracy[1] == 1.0);
    CHECK(p.accuracy[359] == 1.0);
    CHECK(mean_over_arc(p, 60, 120) < 0.3);
    CHECK(half_width(p, 0) < 90);
    CHECK(half_width(p, 0) > 0);
}

TEST_CASE("evaluate: missing poses") {
    const auto dir = testing::temp_dir("missing");
    EmitConfig cfg;
    cfg.grid = {{AxisSet::Y}, 10, 10};
    const DatasetManifest m = emit_dataset(clips(3), cfg, dir);
    const ManifestViewSource source(m);
    CHECK(evaluate(Perfect{}, source, AxisSet::Y, 10).mean() == 1.0);
    CHECK_THROWS_AS(evaluate(Perfect{}, source, AxisSet::Y, 5), MissingPoses);
    CHECK_THROWS_AS(evaluate(Perfect{}, source, AxisSet::X, 10), MissingPoses);
}

TEST_CASE("view-based baseline construction") {
    const auto single = bump();
    const std::vector<double> zero{0.0};
    CHECK(view_based_baseline(single, zero).accuracy == single.accuracy);

    const std::vector<double> opposite{0.0, 180.0};
    const auto two = view_based_baseline(single, opposite);
    for (int d = 0; d <= 90; ++d) CHECK(two.accuracy[90 + d] == two.accuracy[90 - d]);

    const auto uni = TrainViews::uniform(Axis::Y, 12).angles_deg;
    const auto twelve = view_based_baseline(single, uni);
    for (int b = 0; b < 360; ++b) CHECK(twelve.accuracy[b] == twelve.accuracy[(b + 30) % 360]);
    CHECK(twelve.accuracy[15] == doctest::Approx(1.0 - 15.0 / 40.0));
    CHECK(view_based_baseline(twelve, uni).accuracy == twelve.accuracy);

    CHECK_THROWS_AS(view_based_baseline(single, std::vector<double>{0.5}), InvalidArgument);
}

TEST_CASE("metrics: intermediate and extrapolation bins") {
    GeneralizationProfile ones = GeneralizationProfile::empty(AxisSet::Y, 1, 5);
    std::fill(ones.accuracy.begin(), ones.accuracy.end(), 1.0);
    const std::vector<double> pm15{-15.0, 15.0};
    const ProfileMetrics m = metrics(ones, pm15, &ones);
    CHECK(m.mean == 1.0);
    CHECK(*m.intermediate_mean == 1.0);
    CHECK(*m.extrapolation_mean == 1.0);
    CHECK(*m.gap_to_baseline == 0.0);

    const auto mask = extrapolation_mask(ones, pm15);
    CHECK_FALSE(mask[0]);
    CHECK_FALSE(mask[15]);
    CHECK_FALSE(mask[345]);
    CHECK(mask[30]);
    CHECK(mask[16]);
    CHECK(std::count(mask.begin(), mask.end(), true) == 329);

    const auto uni = TrainViews::uniform(Axis::Y, 12).angles_deg;
    const auto none = extrapolation_mask(ones, uni);
    CHECK(std::count(none.begin(), none.end(), true) == 0);

    const auto single = bump();
    const auto base = view_based_baseline(single, uni);
    CHECK(*metrics(base, uni, &base).gap_to_baseline == 0.0);
    const ProfileMetrics sm = metrics(single, std::span<const double>{}, nullptr);
    CHECK_FALSE(sm.intermediate_mean.has_value());
}

TEST_CASE("arc means and half widths") {
    const auto p = bump();
    CHECK(mean_over_arc(p, 100, 260) == 0.0);
    CHECK(mean_over_arc(p, -10, 10) == doctest::Approx(1.0 - 110.0 / 21.0 / 40.0));
    CHECK(half_width(p, 0) == 21);
    GeneralizationProfile flat = GeneralizationProfile::empty(AxisSet::Y, 1, 2);
    std::fill(flat.accuracy.begin(), flat.accuracy.end(), 1.0);
    CHECK(half_width(flat, 0) == 180);

    const std::vector<GeneralizationProfile> two{p, flat};
    const auto avg = average(two);
    CHECK(avg.accuracy[0] == 1.0);
    CHECK(avg.accuracy[180] == 0.5);
}

TEST_CASE("result CSV round trip") {
    const auto single = bump(10);
    GeneralizationProfile dual = GeneralizationProfile::empty(AxisSet::XZ, 10, 4);
    for (std::size_t b = 0; b < dual.size(); ++b) dual.accuracy[b] = static_cast<double>(b % 7) / 7.0;
    dual.training[3] = true;
    std::vector<ResultRow> rows = profile_rows("views-3", single, 2);
    auto more = profile_rows("views-3", dual, std::nullopt);
    rows.insert(rows.end(), more.begin(), more.end());
    const std::string text = write_results_csv(rows);
    CHECK(text.rfind("condition,axis_pair,angle1,angle2,accuracy,is_training_view,seed\n", 0) == 0);
    CHECK(parse_results_csv(text) == rows);
    CHECK(text.find(",mean\n") != std::string::npos);
    CHECK_THROWS_AS(parse_results_csv("condition,axis_pair\nx,y\n"), SchemaError);
}

TEST_CASE("external predictions") {
    const auto dir = testing::temp_dir("predictions");
    std::vector<PredictionRecord> recs;
    for (ClassId k = 0; k < 5; ++k)
        for (int a = 0; a < 360; a += 10) recs.push_back({k, PoseSpec::single(Axis::Y, a), k, true});
    write_predictions_csv(dir / "p.csv", recs);
    const auto back = read_predictions_csv(dir / "p.csv");
    REQUIRE(back.size() == recs.size());
    const auto prof = evaluate_predictions(back, AxisSet::Y, 10, TrainViews::parse("y:0"));
    CHECK(prof.mean() == 1.0);
    CHECK(prof.classes == 5);
    CHECK(prof.training[0]);

    // Row order is irrelevant.
    auto shuffled = recs;
    Rng rng(stream_key(1, 2, 3));
    rng.shuffle(shuffled.begin(), shuffled.end());
    shuffled[3].predicted = (shuffled[3].class_id + 1) % 5;
    shuffled[3].correct = false;
    auto wrong = recs;
    for (auto& r : wrong)
        if (r.class_id == shuffled[3].class_id && r.pose == shuffled[3].pose) r = shuffled[3];
    CHECK(evaluate_predictions(shuffled, AxisSet::Y, 10).accuracy == evaluate_predictions(wrong, AxisSet::Y, 10).accuracy);

    // Columns are located by name.
    std::ofstream(dir / "reordered.csv") << "predicted_class,correct,class_id,axes,angle2,angle1\n"
                                         << "1,1,1,yz,20,10\n";
    const auto reordered = read_predictions_csv(dir / "reordered.csv");
    REQUIRE(reordered.size() == 1);
    CHECK(reordered[0].pose == PoseSpec::dual(AxisSet::YZ, 10, 20));

    auto missing = recs;
    missing.pop_back();
    CHECK_THROWS_AS(evaluate_predictions(missing, AxisSet::Y, 10), MissingPoses);
    auto dup = recs;
    dup.push_back(recs.front());
    CHECK_THROWS_AS(evaluate_predictions(dup, AxisSet::Y, 10), SchemaError);
    std::ofstream(dir / "bad.csv") << "class_id,axes\n0,y\n";
    CHECK_THROWS_AS(read_predictions_csv(dir / "bad.csv"), SchemaError);
}

TEST_CASE("native and external routes give identical profiles") {
    const auto cs = clips(10);
    const ViewLibrary lib = ViewLibrary::from_clips(cs, TrainViews::parse("y:0,60"), Camera::orthographic());
    const Match2dClassifier m(lib);
    const ClipViewSource source(cs, Camera::orthographic());
    const auto native = evaluate(m, source, AxisSet::Y, 5);
    std::vector<PredictionRecord> recs;
    for (const auto& pose : native.poses())
        for (const auto& c : cs) {
            const ClassId pred = m.classify(*source.view(c.class_id, pose));
            recs.push_back({c.class_id, pose, pred, pred == c.class_id});
        }
    CHECK(evaluate_predictions(recs, AxisSet::Y, 5).accuracy == native.accuracy);
}

TEST_CASE("SVG plots") {
    const auto p = bump();
    const std::string empty = plot_svg(p);
    CHECK(empty.rfind("<svg", 0) == 0);
    CHECK(empty.find("</svg>") != std::string::npos);
    CHECK(empty.find("training-view") == std::string::npos);

    PlotOptions opts;
    opts.title = "views <3> & more";
    opts.training_angles = {0, 120, 240};
    const auto base = view_based_baseline(p, opts.training_angles);
    opts.baseline = &base;
    opts.chance = 0.1;
    const std::string full = plot_svg(p, opts);
    CHECK(full == plot_svg(p, opts));
    CHECK(full.find("&lt;3&gt; &amp;") != std::string::npos);

    GeneralizationProfile dual = GeneralizationProfile::empty(AxisSet::XY, 10, 4);
    const std::string heat = plot_svg(dual, opts);
    const std::regex cell("class=\"cell\"");
    CHECK(std::distance(std::sregex_iterator(heat.begin(), heat.end(), cell), std::sregex_iterator()) == 1296);
}

TEST_CASE("presets expand to their conditions") {
    ExperimentConfig cfg;
    cfg.preset = "uniform-views";
    auto conds = preset_conditions(cfg);
    REQUIRE(conds.size() == 6);
    CHECK(conds[5].views.angles_deg.size() == 12);
    cfg.view_counts = std::vector<int>{12};
    CHECK(preset_conditions(cfg).size() == 2);

    cfg.preset = "classes-sweep";
    conds = preset_conditions(cfg);
    REQUIRE(conds.size() == 3);
    CHECK(conds[2].classes == 1000);
    CHECK(conds[0].views.to_string() == "y:300,0,60");

    cfg.preset = "extended-range";
    CHECK(preset_conditions(cfg).back().views.angles_deg.front() == doctest::Approx(210));
    cfg.preset = "inplane-aug";
    conds = preset_conditions(cfg);
    CHECK(conds[1].inplane_alignment);
    CHECK(conds[1].augment->inplane_rotation_deg.value() == 180.0);
    cfg.preset = "nope";
    CHECK_THROWS_AS(preset_conditions(cfg), InvalidArgument);

    CHECK(resolved_camera(ExperimentConfig{}).mode == Projection::Perspective);
    ExperimentConfig oracle;
    oracle.classifier = ClassifierKind::Lc;
    CHECK(resolved_camera(oracle).mode == Projection::Orthographic);
}

TEST_CASE("range-limited preset with the lc oracle is exact everywhere") {
    const auto dir = testing::temp_dir("preset_lc");
    ExperimentConfig cfg;
    cfg.preset = "range-limited";
    cfg.classifier = ClassifierKind::Lc;
    cfg.classes = 20;
    cfg.seeds = {0, 1};
    cfg.single_stride = 2;
    cfg.out_dir = dir;
    const ResultBundle bundle = run_preset(cfg);
    REQUIRE(bundle.conditions.size() == 3);
    for (const auto& c : bundle.conditions) {
        CHECK(c.profiles.size() == 6);
        for (const auto& [axes, p] : c.profiles) CHECK(p.mean() == 1.0);
        CHECK(c.per_seed.size() == 2);
    }
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "summary.csv"));
    CHECK(std::filesystem::exists(dir / "range30-views-7_xy.svg"));
    std::ifstream in(dir / "results.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto rows = parse_results_csv(ss.str());
    // 3 conditions x (2 seeds + mean) x (3 x 180 + 3 x 1296) bins.
    CHECK(rows.size() == 3u * 3u * (3u * 180u + 3u * 1296u));
}

TEST_CASE("preset failures carry the condition name") {
    ExperimentConfig cfg;
    cfg.preset = "uniform-views";
    cfg.classifier = ClassifierKind::Align3d;
    cfg.classes = 3;
    cfg.seeds = {0};
    cfg.eval_axes = {AxisSet::Y};
    try {
        run_preset(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK_MESSAGE(std::string(e.what()).find("views-1") != std::string::npos, e.what());
    }
}
