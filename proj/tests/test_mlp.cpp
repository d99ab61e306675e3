#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/mlp.hpp"
#include "viewlab/raster.hpp"
#include "viewlab/views.hpp"

using namespace viewlab;

namespace {

Eigen::MatrixXd random_inputs(int rows, int cols, std::uint64_t seed) {
    Rng rng(stream_key(seed, 0, 77));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// Cross-entropy computed directly from the logits, one example at a time.
double reference_ce(const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
    const Eigen::MatrixXd logits = forward(p, x);
    long double total = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        long double denom = 0;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) denom += std::exp(static_cast<long double>(logits(r, c)));
        total += std::log(denom) - logits(labels[static_cast<std::size_t>(c)], c);
    }
    return static_cast<double>(total / logits.cols());
}

std::vector<TrainExample> single_view_examples(int classes, const Camera& cam) {
    std::vector<TrainExample> ex;
    for (int k = 0; k < classes; ++k) {
        const Paperclip clip = generate_paperclip(GenConfig{}, static_cast<ClassId>(k));
        ex.push_back({make_view(clip, PoseSpec::single(Axis::Y, 0), cam).pixels, k});
    }
    return ex;
}

}  // namespace

TEST_CASE("initialization: shapes, determinism, chance-level loss") {
    const auto sizes = default_mlp_sizes(64, 100);
    CHECK(sizes == std::vector<int>{128, 256, 256, 256, 100});
    const MlpParams a = mlp_init(sizes, 3);
    CHECK(a.sizes() == sizes);
    CHECK(a.input_size() == 128);
    CHECK(a.output_size() == 100);
    CHECK(a == mlp_init(sizes, 3));
    CHECK_FALSE(a == mlp_init(sizes, 4));
    for (const auto& l : a.layers) CHECK(l.bias.isZero());

    // Coordinate-array-like inputs: two 1/8-weighted histograms.
    const Camera cam = Camera::orthographic();
    Eigen::MatrixXd x(128, 200);
    std::vector<int> labels(200);
    Rng rng(stream_key(1, 1, 1));
    for (int c = 0; c < 200; ++c) {
        View2 p;
        for (int i = 0; i < 8; ++i) p.col(i) = Eigen::Vector2d(rng.uniform(0, 224), rng.uniform(0, 224));
        x.col(c) = coord_array(p, cam, 64);
        labels[static_cast<std::size_t>(c)] = static_cast<int>(rng.below(100));
    }
    CHECK(loss_value(a, x, labels, 0.0) == doctest::Approx(std::log(100.0)).epsilon(0.05));
}

TEST_CASE("initialization: layer-1 pre-activation variance is 2 on unit-variance input") {
    const std::vector<int> sizes{128, 256, 256, 256, 10};
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const MlpParams p = mlp_init(sizes, seed);
        const Eigen::MatrixXd x = random_inputs(128, 50, 1000 + seed);
        const Eigen::MatrixXd pre = p.layers[0].weight * x;
        sum += pre.sum();
        sum2 += pre.squaredNorm();
        n += static_cast<std::size_t>(pre.size());
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(var == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("gradients agree with central finite differences on every layer") {
    const std::vector<int> sizes{10, 8, 8, 8, 5};
    MlpParams p = mlp_init(sizes, 21);
    // Non-zero biases exercise their gradients too.
    Rng rng(stream_key(2, 2, 2));
    for (auto& l : p.layers)
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.1 * rng.normal();
    const Eigen::MatrixXd x = random_inputs(10, 6, 5);
    const std::vector<int> labels{0, 1, 2, 3, 4, 2};
    const std::vector<double> weights{1.0, 2.0, 0.5, 1.0, 1.5, 1.0};
    const double wd = 1e-2;
    const LossGrad lg = loss_and_grad(p, x, labels, wd, weights);
    CHECK(lg.loss == doctest::Approx(loss_value(p, x, labels, wd, weights)).epsilon(1e-14));

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto probe = [&](double& param, double analytic) {
            const double keep = param;
            param = keep + h;
            const double up = loss_value(p, x, labels, wd, weights);
            param = keep - h;
            const double down = loss_value(p, x, labels, wd, weights);
            param = keep;
            const double numeric = (up - down) / (2 * h);
            const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-7});
            worst = std::max(worst, rel);
        };
        for (Eigen::Index i = 0; i < p.layers[l].weight.size(); ++i)
            probe(p.layers[l].weight.data()[i], lg.grad.layers[l].weight.data()[i]);
        for (Eigen::Index i = 0; i < p.layers[l].bias.size(); ++i)
            probe(p.layers[l].bias.data()[i], lg.grad.layers[l].bias.data()[i]);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("duplicated example equals doubled weight; zero decay is pure cross-entropy") {
    const MlpParams p = mlp_init(std::vector<int>{6, 7, 7, 7, 4}, 9);
    const Eigen::MatrixXd x = random_inputs(6, 3, 8);
    Eigen::MatrixXd dup(6, 4);
    dup << x, x.col(1);
    const std::vector<int> labels{0, 3, 1};
    const LossGrad a = loss_and_grad(p, dup, std::vector<int>{0, 3, 1, 3}, 1e-3);
    const LossGrad b = loss_and_grad(p, x, labels, 1e-3, std::vector<double>{1, 2, 1});
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        CHECK((a.grad.layers[l].weight - b.grad.layers[l].weight).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((a.grad.layers[l].bias - b.grad.layers[l].bias).cwiseAbs().maxCoeff() < 1e-14);
    }

    CHECK(loss_value(p, x, labels, 0.0) == doctest::Approx(reference_ce(p, x, labels)).epsilon(1e-12));
    double squares = 0;
    for (const auto& l : p.layers) squares += l.weight.squaredNorm();
    CHECK(loss_value(p, x, labels, 0.3) ==
          doctest::Approx(reference_ce(p, x, labels) + 0.15 * squares).epsilon(1e-12));

    CHECK_THROWS_AS(loss_value(p, x, std::vector<int>{0, 4, 1}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(loss_value(p, random_inputs(5, 3, 1), labels, 0.0), InvalidArgument);
}

TEST_CASE("softmax and prediction") {
    const MlpParams p = mlp_init(std::vector<int>{6, 7, 7, 7, 4}, 9);
    const Eigen::VectorXd in = random_inputs(6, 1, 3).col(0);
    const Prediction pr = predict(p, in);
    CHECK(pr.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-9));
    Eigen::Index arg = 0;
    pr.probabilities.maxCoeff(&arg);
    CHECK(pr.label == arg);

    const Eigen::VectorXd logits = Eigen::VectorXd::LinSpaced(5, -2.0, 3.0);
    const Eigen::VectorXd shifted = (logits.array() + 1234.5).matrix();
    CHECK((softmax(logits) - softmax(shifted)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(predict_labels(p, in) == std::vector<int>{pr.label});
}

TEST_CASE("cosine schedule") {
    CHECK(cosine_lr(0.1, 0, 100) == doctest::Approx(0.1));
    CHECK(cosine_lr(0.1, 99, 100) < 1e-6 * 0.1);
    CHECK(cosine_lr(0.1, 49, 99) == doctest::Approx(0.05));
    for (int t = 1; t < 100; ++t) CHECK(cosine_lr(0.1, t, 100) <= cosine_lr(0.1, t - 1, 100));
}

TEST_CASE("overfit sanity run: 10 classes x 1 view, no augmentation") {
    const Camera cam = Camera::orthographic();
    const auto examples = single_view_examples(10, cam);
    TrainConfig cfg;
    cfg.augment.enabled = false;
    cfg.seed = 1;
    const TrainResult r = train_mlp(examples, 10, cam, 64, cfg);
    REQUIRE(r.log.size() == 300);
    CHECK(r.log.back().accuracy == 1.0);
    CHECK(r.log.back().lr < 1e-6 * cfg.lr);
    for (std::size_t e = 0; e + 20 < r.log.size(); ++e) CHECK(r.log[e + 20].loss <= r.log[e].loss * 1.01);
    for (const auto& ex : examples) {
        const Prediction pr = predict(r.params, coord_array(ex.pixels, cam, 64));
        CHECK(pr.label == ex.label);
    }
    CHECK(r.params.all_finite());
}

TEST_CASE("training is deterministic for a seed") {
    const Camera cam = Camera::orthographic();
    const auto examples = single_view_examples(6, cam);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.augment.flip = true;
    cfg.augment.inplane_rotation_deg = 30.0;
    const TrainResult a = train_mlp(examples, 6, cam, 64, cfg);
    const TrainResult b = train_mlp(examples, 6, cam, 64, cfg);
    CHECK(a.params == b.params);
    cfg.seed = 2;
    CHECK_FALSE(train_mlp(examples, 6, cam, 64, cfg).params == a.params);
}

TEST_CASE("training errors") {
    const Camera cam = Camera::orthographic();
    const auto examples = single_view_examples(3, cam);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.augment.enabled = false;
    CHECK_THROWS_AS(train_mlp(examples, 2, cam, 64, cfg), InvalidArgument);
    CHECK_THROWS_AS(train_mlp({}, 3, cam, 64, cfg), InvalidArgument);
    TrainConfig bad = cfg;
    bad.augment.scale_low = 1.5;
    CHECK_THROWS_AS(train_mlp(examples, 3, cam, 64, bad), InvalidArgument);
    bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(train_mlp(examples, 3, cam, 64, bad), InvalidArgument);
    bad = cfg;
    bad.lr = 1e300;
    bad.grad_clip_norm = 1e300;
    CHECK_THROWS_AS(train_mlp(examples, 3, cam, 64, bad), DivergedLoss);
}

TEST_CASE("augmentation keeps points in frame and flips mirror the x half") {
    const Camera cam = Camera::orthographic();
    const Paperclip clip = generate_paperclip(GenConfig{}, 0);
    const View2 px = make_view(clip, PoseSpec::single(Axis::Y, 30), cam).pixels;
    Augment aug;
    aug.translate = 1.0;
    aug.inplane_rotation_deg = 45.0;
    Rng rng(stream_key(3, 3, 3));
    for (int t = 0; t < 500; ++t) {
        const View2 q = augment_points(px, cam, aug, rng);
        REQUIRE(q.minCoeff() >= 0.0);
        REQUIRE(q.maxCoeff() < 224.0);
        REQUIRE(coord_array(q, cam, 64).sum() == doctest::Approx(2.0));
    }

    // Scale-only augmentation about the image centre.
    Augment scale_only;
    scale_only.translate = 0.0;
    scale_only.scale_low = scale_only.scale_high = 0.5;
    const View2 half = augment_points(px, cam, scale_only, rng);
    CHECK(((half.colwise() - Eigen::Vector2d(112, 112)) * 2.0 - (px.colwise() - Eigen::Vector2d(112, 112)))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    Augment flip_only;
    flip_only.translate = 0.0;
    flip_only.scale_low = flip_only.scale_high = 1.0;
    flip_only.flip = true;
    int flipped = 0;
    for (int t = 0; t < 200; ++t) {
        const View2 q = augment_points(px, cam, flip_only, rng);
        if ((q - px).cwiseAbs().maxCoeff() < 1e-12) continue;
        ++flipped;
        CHECK((q.row(0).array() - (224.0 - px.row(0).array())).abs().maxCoeff() < 1e-12);
    }
    CHECK(flipped > 60);
    CHECK(flipped < 140);
}

TEST_CASE("model file round trip and corruption") {
    const auto dir = testing::temp_dir("model");
    const MlpParams p = mlp_init(default_mlp_sizes(16, 7), 4);
    save_mlp(dir / "m.bin", p);
    CHECK(load_mlp(dir / "m.bin") == p);
    CHECK(std::filesystem::file_size(dir / "m.bin") ==
          8 + 4 + 4 + 4 * 2 * 4 + 8 * (32 * 256 + 256 + 256 * 256 * 2 + 512 + 256 * 7 + 7));
    std::ofstream(dir / "bad.bin") << "NOTAMODEL";
    CHECK_THROWS_AS(load_mlp(dir / "bad.bin"), IoError);
    std::filesystem::resize_file(dir / "m.bin", 100);
    CHECK_THROWS_AS(load_mlp(dir / "m.bin"), IoError);
    CHECK_THROWS_AS(load_mlp(dir / "absent.bin"), IoError);
}
