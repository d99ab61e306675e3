#include "viewlab/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "viewlab/errors.hpp"
#include "viewlab/raster.hpp"
#include "viewlab/rng.hpp"

namespace viewlab {

namespace {

constexpr std::uint64_t kInitStream = 4;
constexpr std::uint64_t kShuffleStream = 5;
constexpr std::uint64_t kAugmentStream = 6;
constexpr char kModelMagic[8] = {'V', 'L', 'A', 'B', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kModelVersion = 1;

struct Activations {
    std::vector<Eigen::MatrixXd> pre;   // z per layer
    std::vector<Eigen::MatrixXd> post;  // a per layer; post[0] is the input
};

Activations run_forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    Activations act;
    act.post.push_back(inputs);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = layer.weight * act.post.back();
        z.colwise() += layer.bias;
        act.pre.push_back(z);
        if (l + 1 < params.layers.size()) act.post.push_back(z.cwiseMax(0.0));
    }
    return act;
}

// Column-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double m = logits.col(c).maxCoeff();
        const double lse = m + std::log((logits.col(c).array() - m).exp().sum());
        out.col(c) = logits.col(c).array() - lse;
    }
    return out;
}

std::vector<double> resolve_weights(std::span<const double> w, std::size_t n) {
    if (w.empty()) return std::vector<double>(n, 1.0);
    if (w.size() != n) throw InvalidArgument("sample_weights size must match the batch");
    return {w.begin(), w.end()};
}

double decay_term(const MlpParams& params, double weight_decay) {
    double s = 0.0;
    for (const auto& layer : params.layers) s += layer.weight.squaredNorm();
    return 0.5 * weight_decay * s;
}

void check_labels(std::span<const int> labels, Eigen::Index cols, int classes) {
    if (static_cast<Eigen::Index>(labels.size()) != cols) throw InvalidArgument("one label per input column");
    for (int y : labels)
        if (y < 0 || y >= classes) throw InvalidArgument(fmt::format("label {} outside [0, {})", y, classes));
}

template <typename T>
void put(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError(path, "truncated model file");
    return v;
}

}  // namespace

std::vector<int> MlpParams::sizes() const {
    std::vector<int> s;
    if (layers.empty()) return s;
    s.push_back(input_size());
    for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
}

bool MlpParams::all_finite() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

MlpParams MlpParams::zeros_like() const {
    MlpParams z;
    for (const auto& l : layers)
        z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return z;
}

bool MlpParams::operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = other.layers[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.weight != b.weight ||
            a.bias != b.bias)
            return false;
    }
    return true;
}

std::vector<int> default_mlp_sizes(int bins, int classes) {
    return {2 * bins, kHiddenWidth, kHiddenWidth, kHiddenWidth, classes};
}

MlpParams mlp_init(std::span<const int> sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw InvalidArgument("an MLP needs at least input and output sizes");
    for (int s : sizes)
        if (s <= 0) throw InvalidArgument("layer sizes must be positive");
    Rng rng(stream_key(seed, 0, kInitStream));
    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const double stddev = std::sqrt(2.0 / in);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) layer.weight(r, c) = stddev * rng.normal();
        p.layers.push_back(std::move(layer));
    }
    return p;
}

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != params.input_size())
        throw InvalidArgument(fmt::format("input size {} != network input {}", inputs.rows(), params.input_size()));
    return run_forward(params, inputs).pre.back();
}

double loss_value(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                  double weight_decay, std::span<const double> sample_weights) {
    check_labels(labels, inputs.cols(), params.output_size());
    const auto w = resolve_weights(sample_weights, labels.size());
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    const Eigen::MatrixXd logp = log_softmax(forward(params, inputs));
    double ce = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) ce -= w[i] * logp(labels[i], static_cast<Eigen::Index>(i));
    return ce / wsum + decay_term(params, weight_decay);
}

LossGrad loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                       double weight_decay, std::span<const double> sample_weights) {
    if (inputs.rows() != params.input_size())
        throw InvalidArgument(fmt::format("input size {} != network input {}", inputs.rows(), params.input_size()));
    check_labels(labels, inputs.cols(), params.output_size());
    const auto w = resolve_weights(sample_weights, labels.size());
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    const Activations act = run_forward(params, inputs);
    const Eigen::MatrixXd logp = log_softmax(act.pre.back());

    LossGrad out;
    double ce = 0.0;
    Eigen::MatrixXd delta = logp.array().exp();  // softmax probabilities
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        ce -= w[i] * logp(labels[i], col);
        Eigen::Index arg = 0;
        logp.col(col).maxCoeff(&arg);
        out.predicted.push_back(static_cast<int>(arg));
        delta(labels[i], col) -= 1.0;
        delta.col(col) *= w[i] / wsum;
    }
    out.loss = ce / wsum + decay_term(params, weight_decay);

    out.grad = params.zeros_like();
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        auto& g = out.grad.layers[l];
        g.weight = delta * act.post[l].transpose() + weight_decay * params.layers[l].weight;
        g.bias = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = params.layers[l].weight.transpose() * delta;
            delta = back.cwiseProduct((act.pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

Prediction predict(const MlpParams& params, const Eigen::VectorXd& input) {
    const Eigen::VectorXd logits = forward(params, input);
    Prediction p;
    p.probabilities = softmax(logits);
    Eigen::Index idx = 0;
    logits.maxCoeff(&idx);
    p.label = static_cast<int>(idx);
    return p;
}

std::vector<int> predict_labels(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    const Eigen::MatrixXd logits = forward(params, inputs);
    std::vector<int> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index idx = 0;
        logits.col(c).maxCoeff(&idx);
        out[static_cast<std::size_t>(c)] = static_cast<int>(idx);
    }
    return out;
}

void TrainConfig::check() const {
    if (epochs < 1 || batch_size < 1) throw InvalidArgument("epochs and batch_size must be >= 1");
    if (!(lr > 0.0) || momentum < 0.0 || weight_decay < 0.0 || !(grad_clip_norm > 0.0))
        throw InvalidArgument("learning rate and clip norm must be positive; momentum and decay non-negative");
    if (!(augment.scale_low > 0.0 && augment.scale_low <= augment.scale_high))
        throw InvalidArgument("scale jitter needs 0 < low <= high");
}

double cosine_lr(double base_lr, std::int64_t step, std::int64_t total) {
    if (total <= 1) return base_lr;
    const double t = static_cast<double>(step) / static_cast<double>(total - 1);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

View2 augment_points(const View2& pixels, const Camera& cam, const Augment& augment, Rng& rng) {
    const double size = cam.image_size;
    const Eigen::Vector2d center(0.5 * size, 0.5 * size);
    View2 p = pixels;
    if (augment.inplane_rotation_deg) {
        const double r = *augment.inplane_rotation_deg;
        const double a = rng.uniform(-r, r) * std::numbers::pi / 180.0;
        Eigen::Matrix2d rot;
        rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        p = (rot * (p.colwise() - center)).colwise() + center;
    }
    if (augment.flip && rng.uniform() < 0.5) p.row(0) = (size - p.row(0).array()).matrix();
    const double k = rng.uniform(augment.scale_low, augment.scale_high);
    p = (k * (p.colwise() - center)).colwise() + center;
    if (augment.translate > 0.0) {
        // Shift range that keeps every point inside [0, size).
        const double margin = 1e-6;
        for (int axis = 0; axis < 2; ++axis) {
            const double lo = -p.row(axis).minCoeff();
            const double hi = size - margin - p.row(axis).maxCoeff();
            const double shift = lo <= hi ? augment.translate * rng.uniform(lo, hi) : 0.0;
            p.row(axis).array() += shift;
        }
    }
    return p;
}

TrainResult train_mlp(std::span<const TrainExample> examples, int classes, const Camera& cam, int bins,
                      const TrainConfig& config) {
    config.check();
    if (examples.empty()) throw InvalidArgument("train_mlp: no training examples");
    for (const auto& ex : examples)
        if (ex.label < 0 || ex.label >= classes)
            throw InvalidArgument(fmt::format("train_mlp: label {} outside [0, {})", ex.label, classes));

    const auto sizes = default_mlp_sizes(bins, classes);
    TrainResult result{mlp_init(sizes, config.seed), {}};
    MlpParams& params = result.params;
    MlpParams velocity = params.zeros_like();

    const auto n = static_cast<std::int64_t>(examples.size());
    const std::int64_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::int64_t total_steps = steps_per_epoch * config.epochs;
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::int64_t step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(stream_key(config.seed, static_cast<std::uint64_t>(epoch), kShuffleStream));
        shuffle_rng.shuffle(order.begin(), order.end());
        Rng aug_rng(stream_key(config.seed, static_cast<std::uint64_t>(epoch), kAugmentStream));

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        double lr = 0.0;
        for (std::int64_t start = 0; start < n; start += config.batch_size, ++step) {
            const std::int64_t count = std::min<std::int64_t>(config.batch_size, n - start);
            Eigen::MatrixXd inputs(2 * bins, count);
            std::vector<int> labels(static_cast<std::size_t>(count));
            for (std::int64_t i = 0; i < count; ++i) {
                const auto& ex = examples[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
                const View2 pts = config.augment.enabled ? augment_points(ex.pixels, cam, config.augment, aug_rng)
                                                         : ex.pixels;
                inputs.col(i) = coord_array(pts, cam, bins);
                labels[static_cast<std::size_t>(i)] = ex.label;
            }

            LossGrad lg = loss_and_grad(params, inputs, labels, config.weight_decay);
            if (!std::isfinite(lg.loss))
                throw DivergedLoss(fmt::format("non-finite loss at epoch {} step {}", epoch, step));

            double norm2 = 0.0;
            for (const auto& g : lg.grad.layers) norm2 += g.weight.squaredNorm() + g.bias.squaredNorm();
            const double norm = std::sqrt(norm2);
            const double clip = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;

            lr = cosine_lr(config.lr, step, total_steps);
            for (std::size_t l = 0; l < params.layers.size(); ++l) {
                auto& v = velocity.layers[l];
                const auto& g = lg.grad.layers[l];
                v.weight = config.momentum * v.weight + clip * g.weight;
                v.bias = config.momentum * v.bias + clip * g.bias;
                params.layers[l].weight -= lr * v.weight;
                params.layers[l].bias -= lr * v.bias;
            }

            for (std::size_t i = 0; i < labels.size(); ++i) correct += lg.predicted[i] == labels[i];
            loss_sum += lg.loss * static_cast<double>(count);
        }
        result.log.push_back({epoch, loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n), lr});
    }
    return result;
}

void save_mlp(const std::filesystem::path& path, const MlpParams& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open model file for writing");
    out.write(kModelMagic, sizeof(kModelMagic));
    put<std::uint32_t>(out, kModelVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const auto& l : params.layers) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.cols()));
    }
    for (const auto& l : params.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put<double>(out, l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put<double>(out, l.bias(r));
    }
    if (!out) throw IoError(path.string(), "model write failed");
}

MlpParams load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open model file");
    const std::string p = path.string();
    char magic[sizeof(kModelMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) throw IoError(p, "not a viewlab MLP file");
    const auto version = get<std::uint32_t>(in, p);
    if (version != kModelVersion) throw IoError(p, fmt::format("unsupported model version {}", version));
    const auto count = get<std::uint32_t>(in, p);
    if (count == 0 || count > 64) throw IoError(p, "implausible layer count");
    MlpParams params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto rows = get<std::uint32_t>(in, p);
        const auto cols = get<std::uint32_t>(in, p);
        params.layers.push_back({Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)});
    }
    for (auto& l : params.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get<double>(in, p);
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get<double>(in, p);
    }
    for (std::size_t i = 1; i < params.layers.size(); ++i)
        if (params.layers[i].weight.cols() != params.layers[i - 1].weight.rows())
            throw IoError(p, "inconsistent layer shapes");
    return params;
}

}  // namespace viewlab
