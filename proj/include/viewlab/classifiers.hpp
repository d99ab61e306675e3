#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewlab/mlp.hpp"
#include "viewlab/oracles.hpp"
#include "viewlab/views.hpp"

namespace viewlab {

enum class ClassifierKind { Mlp, Match2d, Lc, Align3d, External };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);

/// A built classifier over point-form views. Implementations are immutable
/// after construction.
class ViewClassifier {
public:
    virtual ~ViewClassifier() = default;
    virtual ClassId classify(const ViewSample& view) const = 0;
    virtual std::vector<ClassId> classify_all(std::span<const ViewSample> views) const;
};

class Match2dClassifier final : public ViewClassifier {
public:
    Match2dClassifier(const ViewLibrary& library, Match2dOptions options = {}) : matcher_(library, options) {}
    ClassId classify(const ViewSample& view) const override { return matcher_.classify(view.plane); }

private:
    Matcher2D matcher_;
};

class LcViewClassifier final : public ViewClassifier {
public:
    LcViewClassifier(const ViewLibrary& library, LcOptions options = {}) : lc_(library, options) {}
    ClassId classify(const ViewSample& view) const override { return lc_.classify(view.plane); }

private:
    LcClassifier lc_;
};

class AlignViewClassifier final : public ViewClassifier {
public:
    explicit AlignViewClassifier(const ViewLibrary& library) : shapes_(reconstruct_library(library)) {}
    ClassId classify(const ViewSample& view) const override { return align_classify(view.plane, shapes_); }
    const std::map<ClassId, Shape3D>& shapes() const { return shapes_; }

private:
    std::map<ClassId, Shape3D> shapes_;
};

/// MLP over coordinate arrays; label i maps to class_ids[i].
class MlpViewClassifier final : public ViewClassifier {
public:
    MlpViewClassifier(MlpParams params, Camera cam, int bins, std::vector<ClassId> class_ids);
    ClassId classify(const ViewSample& view) const override;
    std::vector<ClassId> classify_all(std::span<const ViewSample> views) const override;
    const MlpParams& params() const { return params_; }

private:
    MlpParams params_;
    Camera cam_;
    int bins_;
    std::vector<ClassId> class_ids_;
};

/// Trains an MLP on the training views of `clips` (labels follow clip order).
std::unique_ptr<MlpViewClassifier> train_mlp_classifier(std::span<const Paperclip> clips,
                                                        const TrainViews& views, const Camera& cam,
                                                        int bins, const TrainConfig& config,
                                                        std::vector<EpochLog>* log = nullptr);

}  // namespace viewlab
