#include "viewlab/classifiers.hpp"

#include <fmt/format.h>

#include "viewlab/errors.hpp"
#include "viewlab/raster.hpp"

namespace viewlab {

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Mlp: return "mlp";
        case ClassifierKind::Match2d: return "match2d";
        case ClassifierKind::Lc: return "lc";
        case ClassifierKind::Align3d: return "align3d";
        case ClassifierKind::External: return "external";
    }
    return "?";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
    for (auto k : {ClassifierKind::Mlp, ClassifierKind::Match2d, ClassifierKind::Lc, ClassifierKind::Align3d,
                   ClassifierKind::External})
        if (to_string(k) == text) return k;
    throw InvalidArgument(fmt::format("unknown classifier '{}'", text));
}

std::vector<ClassId> ViewClassifier::classify_all(std::span<const ViewSample> views) const {
    std::vector<ClassId> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(classify(v));
    return out;
}

MlpViewClassifier::MlpViewClassifier(MlpParams params, Camera cam, int bins, std::vector<ClassId> class_ids)
    : params_(std::move(params)), cam_(cam), bins_(bins), class_ids_(std::move(class_ids)) {
    if (params_.input_size() != 2 * bins_)
        throw InvalidArgument(fmt::format("model input {} does not match 2 x {} bins", params_.input_size(), bins_));
    if (params_.output_size() != static_cast<int>(class_ids_.size()))
        throw InvalidArgument(fmt::format("model has {} outputs for {} classes", params_.output_size(), class_ids_.size()));
}

ClassId MlpViewClassifier::classify(const ViewSample& view) const {
    return class_ids_[static_cast<std::size_t>(predict(params_, coord_array(view.pixels, cam_, bins_)).label)];
}

std::vector<ClassId> MlpViewClassifier::classify_all(std::span<const ViewSample> views) const {
    Eigen::MatrixXd inputs(2 * bins_, static_cast<Eigen::Index>(views.size()));
    for (std::size_t i = 0; i < views.size(); ++i)
        inputs.col(static_cast<Eigen::Index>(i)) = coord_array(views[i].pixels, cam_, bins_);
    std::vector<ClassId> out;
    out.reserve(views.size());
    for (int label : predict_labels(params_, inputs)) out.push_back(class_ids_[static_cast<std::size_t>(label)]);
    return out;
}

std::unique_ptr<MlpViewClassifier> train_mlp_classifier(std::span<const Paperclip> clips, const TrainViews& views,
                                                        const Camera& cam, int bins, const TrainConfig& config,
                                                        std::vector<EpochLog>* log) {
    std::vector<TrainExample> examples;
    std::vector<ClassId> ids;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        ids.push_back(clips[k].class_id);
        for (const PoseSpec& pose : views.poses())
            examples.push_back({make_view(clips[k], pose, cam).pixels, static_cast<int>(k)});
    }
    TrainResult result = train_mlp(examples, static_cast<int>(clips.size()), cam, bins, config);
    if (log) *log = std::move(result.log);
    return std::make_unique<MlpViewClassifier>(std::move(result.params), cam, bins, std::move(ids));
}

}  // namespace viewlab
