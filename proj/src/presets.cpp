#include "viewlab/presets.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "viewlab/dataset.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/plot.hpp"

namespace fs = std::filesystem;

namespace viewlab {

namespace {

void write_outputs(const ExperimentConfig& config, const ResultBundle& bundle) {
    const fs::path dir = config.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), ec.message());

    std::vector<ResultRow> rows;
    std::string summary = "condition,classes,train_views,axis_pair,mean,intermediate_mean,extrapolation_mean,gap_to_baseline\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
    for (const auto& c : bundle.conditions) {
        for (const auto& [seed, profiles] : c.per_seed)
            for (const auto& [axes, p] : profiles) {
                auto r = profile_rows(c.spec.name, p, seed);
                rows.insert(rows.end(), r.begin(), r.end());
            }
        for (const auto& [axes, p] : c.profiles) {
            auto r = profile_rows(c.spec.name, p, std::nullopt);
            rows.insert(rows.end(), r.begin(), r.end());
            const auto& m = c.metrics.at(axes);
            summary += fmt::format("{},{},\"{}\",{},{},{},{},{}\n", c.spec.name, c.spec.classes, c.spec.views.to_string(),
                                   to_string(axes), m.mean, opt(m.intermediate_mean), opt(m.extrapolation_mean),
                                   opt(m.gap_to_baseline));

            PlotOptions po;
            po.title = fmt::format("{} / {} / {} ({} classes)", bundle.preset, c.spec.name, to_string(axes), c.spec.classes);
            if (!is_dual(axes) && axes_of(axes)[0] == c.spec.views.axis) {
                po.training_angles = c.spec.views.angles_deg;
                if (c.baseline) po.baseline = &*c.baseline;
            }
            po.chance = 1.0 / std::max(1, c.spec.classes);
            write_file_atomic(dir / fmt::format("{}_{}.svg", c.spec.name, to_string(axes)), plot_svg(p, po));
        }
    }
    write_file_atomic(dir / "results.csv", write_results_csv(rows));
    write_file_atomic(dir / "summary.csv", summary);

    nlohmann::json log = {
        {"preset", bundle.preset},
        {"classifier", std::string(to_string(config.classifier))},
        {"seeds", config.seeds},
        {"camera", resolved_camera(config).mode == Projection::Orthographic ? "orthographic" : "perspective"},
        {"bins", config.bins},
        {"epochs", config.train.epochs},
    };
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : bundle.conditions) {
        nlohmann::json cj = {{"name", c.spec.name}, {"classes", c.spec.classes}, {"train_views", c.spec.views.to_string()}};
        for (const auto& [seed, epochs] : c.training_logs) {
            if (epochs.empty()) continue;
            cj["final_train_accuracy"][std::to_string(seed)] = epochs.back().accuracy;
            cj["final_loss"][std::to_string(seed)] = epochs.back().loss;
        }
        conds.push_back(cj);
    }
    log["conditions"] = conds;
    write_file_atomic(dir / "run.json", log.dump(1) + "\n");
}

}  // namespace

const ConditionResult& ResultBundle::condition(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.spec.name == name) return c;
    throw InvalidArgument(fmt::format("preset '{}' has no condition '{}'", preset, name));
}

Camera resolved_camera(const ExperimentConfig& config) {
    if (config.camera) return *config.camera;
    return config.classifier == ClassifierKind::Mlp ? Camera::perspective() : Camera::orthographic();
}

std::vector<std::string> preset_names() {
    return {"uniform-views", "intermediate", "range-limited", "extended-range", "classes-sweep", "inplane-aug"};
}

std::vector<ConditionSpec> preset_conditions(const ExperimentConfig& config) {
    std::vector<ConditionSpec> out;
    const std::string& p = config.preset;
    const int c = config.classes;
    if (p == "uniform-views") {
        std::vector<int> counts = config.view_counts.value_or(std::vector<int>{1, 2, 3, 4, 6, 12});
        if (std::find(counts.begin(), counts.end(), 1) == counts.end()) counts.insert(counts.begin(), 1);
        for (int n : counts)
            out.push_back({fmt::format("views-{}", n), TrainViews::uniform(Axis::Y, n, config.view_offset_deg), c, {}, false});
    } else if (p == "intermediate") {
        out.push_back({"range-15", TrainViews::parse("y:-15,15"), c, {}, false});
        out.push_back({"range-30", TrainViews::parse("y:-30,30"), c, {}, false});
    } else if (p == "range-limited") {
        for (int n : config.view_counts.value_or(std::vector<int>{3, 5, 7}))
            out.push_back({fmt::format("range30-views-{}", n), TrainViews::range(Axis::Y, -30, 30, n), c, {}, false});
    } else if (p == "extended-range") {
        for (int r : {30, 60, 90, 120, 150})
            out.push_back({fmt::format("range{}-views-7", r), TrainViews::range(Axis::Y, -r, r, 7), c, {}, false});
    } else if (p == "classes-sweep") {
        for (int n : config.class_counts.value_or(std::vector<int>{10, 100, 1000}))
            out.push_back({fmt::format("classes-{}", n), TrainViews::parse("y:-60,0,60"), n, {}, false});
    } else if (p == "inplane-aug") {
        const TrainViews views = TrainViews::uniform(Axis::Y, 12, config.view_offset_deg);
        out.push_back({"no-inplane", views, c, {}, false});
        ConditionSpec aug{"inplane", views, c, {}, false};
        Augment a = config.train.augment;
        a.inplane_rotation_deg = 180.0;
        aug.augment = a;
        aug.inplane_alignment = true;
        out.push_back(aug);
    } else {
        throw InvalidArgument(fmt::format("unknown preset '{}'", p));
    }
    for (auto& cond : out)
        if (cond.classes < 1) throw InvalidArgument(fmt::format("condition {} needs >= 1 class", cond.name));
    return out;
}

std::vector<Paperclip> generate_clips(const GenConfig& gen, std::uint64_t seed, int classes) {
    GenConfig g = gen;
    g.seed = seed;
    std::vector<Paperclip> clips;
    clips.reserve(static_cast<std::size_t>(classes));
    for (int k = 0; k < classes; ++k) clips.push_back(generate_paperclip(g, static_cast<ClassId>(k)));
    return clips;
}

std::unique_ptr<ViewClassifier> build_classifier(const ExperimentConfig& config, const ConditionSpec& condition,
                                                 std::span<const Paperclip> clips, std::vector<EpochLog>* log) {
    switch (config.classifier) {
        case ClassifierKind::Mlp: {
            TrainConfig tc = config.train;
            if (condition.augment) tc.augment = *condition.augment;
            return train_mlp_classifier(clips, condition.views, resolved_camera(config), config.bins, tc, log);
        }
        case ClassifierKind::Match2d: {
            Match2dOptions mo = config.match;
            mo.allow_inplane_rotation = mo.allow_inplane_rotation || condition.inplane_alignment;
            return std::make_unique<Match2dClassifier>(ViewLibrary::from_clips(clips, condition.views, resolved_camera(config)), mo);
        }
        case ClassifierKind::Lc:
            return std::make_unique<LcViewClassifier>(ViewLibrary::from_clips(clips, condition.views, resolved_camera(config)),
                                                      config.lc);
        case ClassifierKind::Align3d:
            return std::make_unique<AlignViewClassifier>(ViewLibrary::from_clips(clips, condition.views, resolved_camera(config)));
        case ClassifierKind::External:
            throw InvalidArgument("external predictions are scored with 'evaluate --external', not run presets");
    }
    throw InvalidArgument("unknown classifier kind");
}

ResultBundle run_preset(const ExperimentConfig& config) {
    if (config.seeds.empty()) throw InvalidArgument("run_preset needs at least one seed");
    ResultBundle bundle;
    bundle.preset = config.preset;
    const auto conditions = preset_conditions(config);

    for (const ConditionSpec& cond : conditions) {
        ConditionResult result;
        result.spec = cond;
        try {
            for (std::uint64_t seed : config.seeds) {
                const auto clips = generate_clips(config.gen, seed, cond.classes);
                ExperimentConfig seeded = config;
                seeded.train.seed = seed;
                std::vector<EpochLog> log;
                const auto classifier = build_classifier(seeded, cond, clips, &log);
                if (!log.empty()) result.training_logs[seed] = std::move(log);
                const ClipViewSource source(clips, resolved_camera(config));
                for (AxisSet axes : config.eval_axes) {
                    const int stride = is_dual(axes) ? config.dual_stride : config.single_stride;
                    result.per_seed[seed][axes] = evaluate(*classifier, source, axes, stride, cond.views);
                }
            }
        } catch (const Error& e) {
            throw Error(fmt::format("preset {} condition {}: {}", config.preset, cond.name, e.what()));
        }
        for (AxisSet axes : config.eval_axes) {
            std::vector<GeneralizationProfile> reps;
            for (const auto& [seed, profiles] : result.per_seed) reps.push_back(profiles.at(axes));
            result.profiles[axes] = average(reps);
        }
        bundle.conditions.push_back(std::move(result));
    }

    // View-based baseline from the single-view condition, on the training axis.
    if (config.preset == "uniform-views") {
        const auto& single = bundle.conditions.front();
        const AxisSet train_axes = single.spec.views.axis == Axis::X   ? AxisSet::X
                                   : single.spec.views.axis == Axis::Y ? AxisSet::Y
                                                                       : AxisSet::Z;
        if (single.profiles.contains(train_axes)) {
            // Single-view profile re-centred on 0 before shifting to each view.
            GeneralizationProfile centred = view_based_baseline(
                single.profiles.at(train_axes), std::vector<double>{-single.spec.views.angles_deg.front()});
            for (auto& c : bundle.conditions) c.baseline = view_based_baseline(centred, c.spec.views.angles_deg);
        }
    }
    for (auto& c : bundle.conditions) {
        for (const auto& [axes, p] : c.profiles) {
            const bool on_axis = !is_dual(axes) && axes_of(axes)[0] == c.spec.views.axis;
            c.metrics[axes] = metrics(p, on_axis ? c.spec.views.angles_deg : std::vector<double>{},
                                      on_axis && c.baseline ? &*c.baseline : nullptr);
        }
    }
    if (!config.out_dir.empty()) write_outputs(config, bundle);
    return bundle;
}

}  // namespace viewlab
