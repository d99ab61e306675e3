#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "viewlab/classifiers.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/harness.hpp"
#include "viewlab/mlp.hpp"
#include "viewlab/oracles.hpp"

namespace viewlab {

struct ExperimentConfig {
    std::string preset = "uniform-views";
    ClassifierKind classifier = ClassifierKind::Mlp;
    int classes = 100;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::filesystem::path out_dir;  ///< empty: keep results in memory only

    std::vector<AxisSet> eval_axes = full_protocol_axes();
    int single_stride = 1;
    int dual_stride = 10;

    std::optional<Camera> camera;  ///< unset: perspective for the MLP, orthographic for the oracles
    GenConfig gen;
    TrainConfig train;
    int bins = kDefaultBins;
    Match2dOptions match;
    LcOptions lc;

    double view_offset_deg = 0.0;                ///< offset of equidistant views
    std::optional<std::vector<int>> view_counts;   ///< overrides the preset's view counts
    std::optional<std::vector<int>> class_counts;  ///< overrides classes-sweep class counts
};

/// One trained/built classifier configuration of a preset.
struct ConditionSpec {
    std::string name;
    TrainViews views;
    int classes = 0;
    std::optional<Augment> augment;           ///< MLP augmentation override
    bool inplane_alignment = false;           ///< match2d in-plane alignment
};

struct ConditionResult {
    ConditionSpec spec;
    std::map<AxisSet, GeneralizationProfile> profiles;  ///< mean over seeds
    std::map<std::uint64_t, std::map<AxisSet, GeneralizationProfile>> per_seed;
    std::map<AxisSet, ProfileMetrics> metrics;
    std::optional<GeneralizationProfile> baseline;  ///< view-based baseline on the training axis
    std::map<std::uint64_t, std::vector<EpochLog>> training_logs;
};

struct ResultBundle {
    std::string preset;
    std::vector<ConditionResult> conditions;

    const ConditionResult& condition(const std::string& name) const;
};

/// The configured camera, or the classifier's default.
Camera resolved_camera(const ExperimentConfig& config);

std::vector<std::string> preset_names();

/// Conditions a preset expands to under `config`.
std::vector<ConditionSpec> preset_conditions(const ExperimentConfig& config);

/// Builds or trains the configured classifier for one condition and seed.
std::unique_ptr<ViewClassifier> build_classifier(const ExperimentConfig& config, const ConditionSpec& condition,
                                                 std::span<const Paperclip> clips,
                                                 std::vector<EpochLog>* log = nullptr);

/// Paperclips 0..classes-1 for a seed.
std::vector<Paperclip> generate_clips(const GenConfig& gen, std::uint64_t seed, int classes);

/// Runs every condition for every seed, evaluates each configured axis set
/// and writes results.csv, summary.csv and one SVG per (condition, axes)
/// when `out_dir` is set. Errors carry the failing condition's name.
ResultBundle run_preset(const ExperimentConfig& config);

}  // namespace viewlab
