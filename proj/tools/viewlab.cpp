// viewlab command-line tool: dataset generation, oracle evaluation, MLP
// training and experiment presets.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "viewlab/classifiers.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/dataset.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/harness.hpp"
#include "viewlab/mesh.hpp"
#include "viewlab/mlp.hpp"
#include "viewlab/oracles.hpp"
#include "viewlab/presets.hpp"

namespace fs = std::filesystem;
using namespace viewlab;

namespace {

std::vector<AxisSet> parse_axes_list(const std::string& text) {
    if (text == "all") return full_protocol_axes();
    std::vector<AxisSet> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find(',', start);
        out.push_back(parse_axis_set(text.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<AxisSet> eval_grid_axes(const std::string& grid) {
    if (grid == "single") return {AxisSet::X, AxisSet::Y, AxisSet::Z};
    if (grid == "dual") return {AxisSet::XY, AxisSet::XZ, AxisSet::YZ};
    if (grid == "all") return full_protocol_axes();
    return parse_axes_list(grid);
}

Camera make_camera(const std::string& mode, double distance, double scale, int size) {
    if (mode == "orthographic") return Camera::orthographic(scale, size);
    if (mode == "perspective") return Camera::perspective(distance, scale, size);
    throw InvalidArgument(fmt::format("unknown camera '{}'", mode));
}

/// Training views of the manifest's first `classes` classes, as a library.
ViewLibrary library_from_manifest(const DatasetManifest& m, const TrainViews& views) {
    ViewLibrary lib;
    for (const auto& r : m.records) {
        if (!views.contains(r.pose)) continue;
        if (!r.points) throw SchemaError("manifest records carry no 'points'");
        lib.add(r.class_id, *r.points, r.pose);
    }
    if (lib.empty()) throw MissingPoses(fmt::format("manifest has no records at training views {}", views.to_string()));
    return lib;
}

int grid_stride(const DatasetManifest& m, AxisSet axes) {
    return is_dual(axes) ? m.grid.dual_stride : m.grid.single_stride;
}

void write_rows(const fs::path& out, const std::vector<ResultRow>& rows) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, write_results_csv(rows));
}

void print_summary(const std::string& condition, const GeneralizationProfile& p) {
    std::cout << fmt::format("{:<12} {:<3} mean accuracy {:.4f} over {} bins\n", condition, to_string(p.axes), p.mean(),
                             p.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"viewlab: 3D view-generalization laboratory"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate paperclip geometry files");
    std::uint64_t gen_seed = 0;
    int gen_classes = 100;
    std::string gen_out;
    GenConfig gen_cfg;
    gen->add_option("--seed", gen_seed, "Global seed")->required();
    gen->add_option("--classes", gen_classes, "Number of classes")->required()->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--step-low", gen_cfg.step_low, "Minimum segment length");
    gen->add_option("--step-high", gen_cfg.step_high, "Maximum segment length");
    gen->add_option("--min-angle", gen_cfg.min_segment_angle_deg, "Minimum interior angle (deg)");
    gen->add_option("--min-clearance", gen_cfg.min_clearance, "Minimum non-adjacent segment distance");
    gen->add_option("--max-attempts", gen_cfg.max_attempts, "Rejection-sampling budget per class");

    // render
    auto* render = app.add_subcommand("render", "Render a dataset and write its manifest");
    std::string r_geometry, r_axes = "y", r_repr = "coordarray", r_bg, r_out, r_camera = "orthographic",
                r_store = "inline", r_train;
    int r_stride = 1, r_dual_stride = 10, r_size = 224, r_bins = kDefaultBins;
    double r_distance = 3.0, r_scale = 2.5;
    std::uint64_t r_seed = 0;
    render->add_option("--geometry", r_geometry, "Geometry directory (gen output or *.obj meshes)")->required();
    render->add_option("--axes", r_axes, "Axis sets, comma separated, or 'all'");
    render->add_option("--stride", r_stride, "Single-axis stride (deg)");
    render->add_option("--dual-stride", r_dual_stride, "Dual-axis stride (deg)");
    render->add_option("--repr", r_repr, "wireframe|coordimage|coordarray|mesh");
    render->add_option("--bg-dir", r_bg, "Directory of PNG backgrounds");
    render->add_option("--out", r_out, "Output directory")->required();
    render->add_option("--camera", r_camera, "orthographic|perspective");
    render->add_option("--distance", r_distance, "Perspective camera distance");
    render->add_option("--scale", r_scale, "Object units spanned by the image height");
    render->add_option("--image-size", r_size, "Image size in pixels");
    render->add_option("--bins", r_bins, "Coordinate-array bins per axis");
    render->add_option("--array-store", r_store, "inline|binary");
    render->add_option("--train-views", r_train, "Tag records at these views as 'train'");
    render->add_option("--seed", r_seed, "Seed for mesh canonical-pose rotations and background choice");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Evaluate a classical recognition oracle on a manifest");
    std::string o_kind, o_manifest, o_train, o_grid = "single", o_out;
    double o_sigma = 0.1;
    bool o_no_flip = false, o_inplane = false, o_no_constant = false;
    oracle->add_option("--kind", o_kind, "match2d|lc|align3d")->required();
    oracle->add_option("--manifest", o_manifest, "Dataset manifest")->required();
    oracle->add_option("--train-views", o_train, "Training views, e.g. y:0,30,60")->required();
    oracle->add_option("--eval-grid", o_grid, "single|dual|all or a list of axis sets");
    oracle->add_option("--out", o_out, "Results CSV")->required();
    oracle->add_option("--sigma", o_sigma, "RBF width for match2d");
    oracle->add_flag("--no-flip", o_no_flip, "match2d: disable mirror alignment");
    oracle->add_flag("--inplane", o_inplane, "match2d: align in-plane rotation");
    oracle->add_flag("--no-constant", o_no_constant, "lc: drop the constant column");

    // train-mlp
    auto* tmlp = app.add_subcommand("train-mlp", "Train the coordinate-array MLP");
    std::string t_manifest, t_train, t_out, t_log;
    int t_classes = 0;
    TrainConfig t_cfg;
    bool t_no_aug = false, t_flip = false;
    double t_inplane = 0.0;
    tmlp->add_option("--manifest", t_manifest, "Dataset manifest")->required();
    tmlp->add_option("--train-views", t_train, "Training views, e.g. y:uniform:12")->required();
    tmlp->add_option("--classes", t_classes, "Use classes 0..N-1 (default: all)");
    tmlp->add_option("--out", t_out, "Model file")->required();
    tmlp->add_option("--log", t_log, "Per-epoch CSV log");
    tmlp->add_option("--epochs", t_cfg.epochs);
    tmlp->add_option("--batch-size", t_cfg.batch_size);
    tmlp->add_option("--lr", t_cfg.lr);
    tmlp->add_option("--momentum", t_cfg.momentum);
    tmlp->add_option("--weight-decay", t_cfg.weight_decay);
    tmlp->add_option("--clip", t_cfg.grad_clip_norm);
    tmlp->add_option("--seed", t_cfg.seed);
    tmlp->add_flag("--no-augment", t_no_aug, "Disable scale/translation jitter");
    tmlp->add_flag("--flip", t_flip, "Random horizontal flips");
    tmlp->add_option("--inplane-rotation", t_inplane, "In-plane rotation augmentation range (deg)");
    tmlp->add_option("--scale-low", t_cfg.augment.scale_low, "Lower bound of scale jitter");
    tmlp->add_option("--translate", t_cfg.augment.translate, "Translation jitter as a fraction of the in-frame range");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score a trained model or external predictions");
    std::string e_manifest, e_model, e_external, e_train, e_grid = "single", e_out;
    int e_stride = 1, e_dual_stride = 10;
    eval->add_option("--manifest", e_manifest, "Dataset manifest (with --model)");
    eval->add_option("--model", e_model, "MLP model file");
    eval->add_option("--external", e_external, "Prediction CSV from an external trainer");
    eval->add_option("--train-views", e_train, "Training views to mark");
    eval->add_option("--eval-grid", e_grid, "single|dual|all or a list of axis sets");
    eval->add_option("--stride", e_stride, "Single-axis stride for --external");
    eval->add_option("--dual-stride", e_dual_stride, "Dual-axis stride for --external");
    eval->add_option("--out", e_out, "Results CSV")->required();

    // run
    auto* run = app.add_subcommand("run", "Run an experiment preset");
    ExperimentConfig x;
    std::string x_classifier = "mlp", x_seeds = "0,1,2", x_out, x_camera, x_axes = "all";
    std::vector<int> x_views, x_class_counts;
    bool x_flip = false, x_no_aug = false;
    run->add_option("--preset", x.preset, "Preset name")->required()->check(CLI::IsMember(preset_names()));
    run->add_option("--classifier", x_classifier, "mlp|match2d|lc|align3d");
    run->add_option("--classes", x.classes, "Number of classes")->check(CLI::PositiveNumber);
    run->add_option("--seeds", x_seeds, "Comma-separated seeds");
    run->add_option("--out", x_out, "Output directory")->required();
    run->add_option("--eval-axes", x_axes, "Axis sets to evaluate, or 'all'");
    run->add_option("--camera", x_camera, "orthographic|perspective (default: perspective for mlp)");
    run->add_option("--epochs", x.train.epochs);
    run->add_option("--lr", x.train.lr);
    run->add_option("--sigma", x.match.sigma);
    run->add_option("--offset", x.view_offset_deg, "Offset of equidistant training views (deg)");
    run->add_option("--view-counts", x_views, "Override the preset's view counts")->delimiter(',');
    run->add_option("--class-counts", x_class_counts, "Override classes-sweep class counts")->delimiter(',');
    run->add_option("--weight-decay", x.train.weight_decay);
    run->add_option("--scale-low", x.train.augment.scale_low, "MLP: lower bound of scale jitter");
    run->add_option("--translate", x.train.augment.translate, "MLP: translation jitter fraction");
    run->add_flag("--flip", x_flip, "MLP: random horizontal flips");
    run->add_flag("--no-augment", x_no_aug, "MLP: disable scale/translation jitter");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            gen_cfg.seed = gen_seed;
            std::vector<Paperclip> clips;
            for (int k = 0; k < gen_classes; ++k) clips.push_back(generate_paperclip(gen_cfg, static_cast<ClassId>(k)));
            write_geometry(clips, gen_cfg, gen_out);
            std::cout << fmt::format("wrote {} paperclips to {}\n", clips.size(), gen_out);
        } else if (*render) {
            EmitConfig cfg;
            cfg.seed = r_seed;
            cfg.grid = {parse_axes_list(r_axes), r_stride, r_dual_stride};
            cfg.representation = parse_representation(r_repr);
            cfg.camera = make_camera(r_camera, r_distance, r_scale, r_size);
            cfg.bins = r_bins;
            cfg.array_store = r_store == "binary" ? ArrayStore::Binary : ArrayStore::Inline;
            if (!r_train.empty()) cfg.train_views = TrainViews::parse(r_train);
            cfg.background_dir = r_bg;
            DatasetManifest m;
            if (fs::exists(fs::path(r_geometry) / kGeometryManifestName)) {
                m = emit_dataset(read_geometry(r_geometry), cfg, r_out);
            } else {
                std::vector<fs::path> objs;
                for (const auto& e : fs::directory_iterator(r_geometry))
                    if (e.path().extension() == ".obj") objs.push_back(e.path());
                std::sort(objs.begin(), objs.end());
                if (objs.empty()) throw IoError(r_geometry, "no geometry.json or .obj meshes found");
                std::vector<Mesh> meshes;
                for (std::size_t k = 0; k < objs.size(); ++k)
                    meshes.push_back(prepare_mesh(load_obj(objs[k]), r_seed, static_cast<ClassId>(k)));
                m = emit_mesh_dataset(meshes, cfg, r_out);
            }
            std::cout << fmt::format("wrote {} records to {}\n", m.records.size(), (fs::path(r_out) / kManifestName).string());
        } else if (*oracle) {
            const DatasetManifest m = load_manifest(o_manifest);
            const TrainViews views = TrainViews::parse(o_train);
            const ViewLibrary lib = library_from_manifest(m, views);
            std::unique_ptr<ViewClassifier> clf;
            if (o_kind == "match2d")
                clf = std::make_unique<Match2dClassifier>(lib, Match2dOptions{o_sigma, !o_no_flip, o_inplane});
            else if (o_kind == "lc")
                clf = std::make_unique<LcViewClassifier>(lib, LcOptions{!o_no_constant});
            else if (o_kind == "align3d")
                clf = std::make_unique<AlignViewClassifier>(lib);
            else
                throw InvalidArgument(fmt::format("unknown oracle '{}'", o_kind));
            const ManifestViewSource source(m);
            std::vector<ResultRow> rows;
            for (AxisSet axes : eval_grid_axes(o_grid)) {
                const auto p = evaluate(*clf, source, axes, grid_stride(m, axes), views);
                print_summary(o_kind, p);
                auto r = profile_rows(o_kind, p, m.seed);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            write_rows(o_out, rows);
        } else if (*tmlp) {
            const DatasetManifest m = load_manifest(t_manifest);
            const TrainViews views = TrainViews::parse(t_train);
            const int classes = t_classes > 0 ? t_classes : m.classes;
            t_cfg.augment.enabled = !t_no_aug;
            t_cfg.augment.flip = t_flip;
            if (t_inplane > 0.0) t_cfg.augment.inplane_rotation_deg = t_inplane;
            std::vector<TrainExample> examples;
            for (const auto& r : m.records) {
                if (r.class_id >= static_cast<ClassId>(classes) || !views.contains(r.pose)) continue;
                if (!r.points) throw SchemaError("manifest records carry no 'points'");
                examples.push_back({to_pixels(*r.points, m.camera), static_cast<int>(r.class_id)});
            }
            if (examples.empty()) throw MissingPoses("no training records match --train-views");
            const TrainResult result = train_mlp(examples, classes, m.camera, m.bins, t_cfg);
            save_mlp(t_out, result.params);
            if (!t_log.empty()) {
                std::string text = "epoch,loss,accuracy,lr\n";
                for (const auto& e : result.log) text += fmt::format("{},{},{},{}\n", e.epoch, e.loss, e.accuracy, e.lr);
                write_file_atomic(t_log, text);
            }
            const auto& last = result.log.back();
            std::cout << fmt::format("trained on {} examples: final loss {:.4f}, train accuracy {:.4f}\n",
                                     examples.size(), last.loss, last.accuracy);
        } else if (*eval) {
            std::optional<TrainViews> views;
            if (!e_train.empty()) views = TrainViews::parse(e_train);
            std::vector<ResultRow> rows;
            if (!e_external.empty()) {
                const auto preds = read_predictions_csv(e_external);
                for (AxisSet axes : eval_grid_axes(e_grid)) {
                    const auto p = evaluate_predictions(preds, axes, is_dual(axes) ? e_dual_stride : e_stride, views);
                    print_summary("external", p);
                    auto r = profile_rows("external", p, std::nullopt);
                    rows.insert(rows.end(), r.begin(), r.end());
                }
            } else {
                if (e_model.empty() || e_manifest.empty())
                    throw InvalidArgument("evaluate needs --external, or --model with --manifest");
                const DatasetManifest m = load_manifest(e_manifest);
                MlpParams params = load_mlp(e_model);
                std::vector<ClassId> ids;
                for (int k = 0; k < params.output_size(); ++k) ids.push_back(static_cast<ClassId>(k));
                const MlpViewClassifier clf(std::move(params), m.camera, m.bins, ids);
                DatasetManifest subset = m;
                std::erase_if(subset.records, [&](const ManifestRecord& r) { return r.class_id >= ids.size(); });
                const ManifestViewSource source(subset);
                for (AxisSet axes : eval_grid_axes(e_grid)) {
                    const auto p = evaluate(clf, source, axes, grid_stride(m, axes), views);
                    print_summary("mlp", p);
                    auto r = profile_rows("mlp", p, m.seed);
                    rows.insert(rows.end(), r.begin(), r.end());
                }
            }
            write_rows(e_out, rows);
        } else if (*run) {
            x.classifier = parse_classifier_kind(x_classifier);
            x.seeds.clear();
            for (const auto& s : CLI::detail::split(x_seeds, ',')) x.seeds.push_back(std::stoull(s));
            x.out_dir = x_out;
            x.eval_axes = parse_axes_list(x_axes);
            if (!x_camera.empty()) x.camera = make_camera(x_camera, 3.0, 2.5, 224);
            x.train.augment.flip = x_flip;
            x.train.augment.enabled = !x_no_aug;
            if (!x_views.empty()) x.view_counts = x_views;
            if (!x_class_counts.empty()) x.class_counts = x_class_counts;
            const ResultBundle bundle = run_preset(x);
            for (const auto& c : bundle.conditions) {
                for (const auto& [axes, m] : c.metrics) {
                    std::cout << fmt::format("{:<18} {:<3} mean {:.4f}", c.spec.name, to_string(axes), m.mean);
                    if (m.intermediate_mean) std::cout << fmt::format("  intermediate {:.4f}", *m.intermediate_mean);
                    if (m.extrapolation_mean && !is_dual(axes) && axes_of(axes)[0] == c.spec.views.axis)
                        std::cout << fmt::format("  extrapolation {:.4f}", *m.extrapolation_mean);
                    if (m.gap_to_baseline) std::cout << fmt::format("  gap {:+.4f}", *m.gap_to_baseline);
                    std::cout << "\n";
                }
            }
            std::cout << fmt::format("results written to {}\n", x_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
