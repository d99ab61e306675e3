#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewlab/geometry.hpp"
#include "viewlab/rng.hpp"
#include "viewlab/scene.hpp"

namespace viewlab {

struct DenseLayer {
    Eigen::MatrixXd weight;  ///< out x in
    Eigen::VectorXd bias;    ///< out
};

/// Fully connected ReLU network; the last layer emits logits.
struct MlpParams {
    std::vector<DenseLayer> layers;

    int input_size() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
    int output_size() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
    std::vector<int> sizes() const;
    bool all_finite() const;
    /// Same shapes, all zeros.
    MlpParams zeros_like() const;

    bool operator==(const MlpParams& other) const;
};

inline constexpr int kHiddenWidth = 256;

/// {2 * bins, 256, 256, 256, classes}.
std::vector<int> default_mlp_sizes(int bins, int classes);

/// He-normal weights (variance 2 / fan_in), zero biases.
MlpParams mlp_init(std::span<const int> sizes, std::uint64_t seed);

struct LossGrad {
    double loss = 0.0;
    MlpParams grad;
    std::vector<int> predicted;  ///< argmax of the forward pass, per column
};

/// Weighted mean softmax cross-entropy over the batch (columns of `inputs`)
/// plus (weight_decay / 2) * sum of squared weights. `sample_weights` may be
/// empty (all ones).
LossGrad loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                       double weight_decay, std::span<const double> sample_weights = {});

/// Loss only; the same quantity loss_and_grad returns.
double loss_value(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                  double weight_decay, std::span<const double> sample_weights = {});

/// Logits for a batch of column inputs.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Numerically stable softmax of one logit vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct Prediction {
    int label = 0;
    Eigen::VectorXd probabilities;
};

Prediction predict(const MlpParams& params, const Eigen::VectorXd& input);
/// Argmax labels of a batch.
std::vector<int> predict_labels(const MlpParams& params, const Eigen::MatrixXd& inputs);

struct Augment {
    bool enabled = true;
    bool flip = false;
    double scale_low = 0.5;
    double scale_high = 1.0;
    double translate = 0.1;  ///< fraction of the in-frame shift range; 0 disables
    std::optional<double> inplane_rotation_deg;  ///< uniform in [-r, r] when set
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double grad_clip_norm = 10.0;
    std::uint64_t seed = 0;
    Augment augment;

    void check() const;
};

/// Learning rate at step `t` of `total`: lr * (1 + cos(pi t / (total - 1))) / 2,
/// reaching exactly 0 on the last step.
double cosine_lr(double base_lr, std::int64_t step, std::int64_t total);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double lr = 0.0;
};

struct TrainExample {
    View2 pixels;  ///< pixel coordinates of the view
    int label = 0;
};

struct TrainResult {
    MlpParams params;
    std::vector<EpochLog> log;
};

/// SGD with momentum, cosine decay per step, global-norm gradient clipping.
/// Augmentations act on the points before binning. Throws DivergedLoss on a
/// non-finite loss.
TrainResult train_mlp(std::span<const TrainExample> examples, int classes, const Camera& cam, int bins,
                      const TrainConfig& config);

/// Point-space augmentation used by train_mlp; exposed for testing.
View2 augment_points(const View2& pixels, const Camera& cam, const Augment& augment, Rng& rng);

void save_mlp(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_mlp(const std::filesystem::path& path);

}  // namespace viewlab
