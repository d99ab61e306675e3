#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "viewlab/classifiers.hpp"
#include "viewlab/clipgen.hpp"
#include "viewlab/dataset.hpp"
#include "viewlab/errors.hpp"
#include "viewlab/harness.hpp"
#include "viewlab/mlp.hpp"
#include "viewlab/oracles.hpp"
#include "viewlab/presets.hpp"
#include "viewlab/raster.hpp"
#include "viewlab/scene.hpp"
#include "viewlab/views.hpp"

namespace py = pybind11;
using namespace viewlab;

namespace {

py::array_t<std::uint8_t> to_numpy(const RasterImage& img) {
    std::vector<py::ssize_t> shape{img.height, img.width};
    if (img.channels > 1) shape.push_back(img.channels);
    py::array_t<std::uint8_t> out(shape);
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

ViewLibrary library_from(const std::vector<View2>& views, const std::vector<ClassId>& labels) {
    if (views.size() != labels.size()) throw InvalidArgument("views and labels differ in length");
    ViewLibrary lib;
    for (std::size_t i = 0; i < views.size(); ++i) lib.add(labels[i], views[i], PoseSpec{});
    return lib;
}

py::dict profile_dict(const GeneralizationProfile& p) {
    py::dict d;
    d["axes"] = std::string(to_string(p.axes));
    d["stride"] = p.stride;
    d["classes"] = p.classes;
    d["accuracy"] = p.accuracy;
    d["training"] = p.training;
    return d;
}

}  // namespace

PYBIND11_MODULE(_viewlab, m) {
    m.doc() = "Paperclip view-generalization toolkit";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<GenerationExhausted>(m, "GenerationExhausted", error.ptr());
    py::register_exception<DegenerateObject>(m, "DegenerateObject", error.ptr());
    py::register_exception<BehindCamera>(m, "BehindCamera", error.ptr());
    py::register_exception<EmptyLibrary>(m, "EmptyLibrary", error.ptr());
    py::register_exception<DegenerateSpan>(m, "DegenerateSpan", error.ptr());
    py::register_exception<RankDeficient>(m, "RankDeficient", error.ptr());
    py::register_exception<InsufficientViews>(m, "InsufficientViews", error.ptr());
    py::register_exception<MissingPoses>(m, "MissingPoses", error.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());

    py::enum_<Axis>(m, "Axis").value("X", Axis::X).value("Y", Axis::Y).value("Z", Axis::Z);

    py::class_<GenConfig>(m, "GenConfig")
        .def(py::init<>())
        .def_readwrite("seed", &GenConfig::seed)
        .def_readwrite("step_low", &GenConfig::step_low)
        .def_readwrite("step_high", &GenConfig::step_high)
        .def_readwrite("min_segment_angle_deg", &GenConfig::min_segment_angle_deg)
        .def_readwrite("min_clearance", &GenConfig::min_clearance)
        .def_readwrite("max_attempts", &GenConfig::max_attempts);

    py::class_<Paperclip>(m, "Paperclip")
        .def_readonly("vertices", &Paperclip::vertices)
        .def_readonly("class_id", &Paperclip::class_id);

    m.def("generate_paperclip", &generate_paperclip, py::arg("config"), py::arg("class_id"));
    m.def("generate_clips", &generate_clips, py::arg("config"), py::arg("seed"), py::arg("classes"));
    m.def(
        "validate",
        [](const Paperclip& clip, const GenConfig& config) { return validate(clip, config).empty(); },
        py::arg("clip"), py::arg("config"), "True when the clip satisfies every generation constraint.");

    py::class_<Camera>(m, "Camera")
        .def_static("orthographic", &Camera::orthographic, py::arg("scale") = 2.5, py::arg("image_size") = 224)
        .def_static("perspective", &Camera::perspective, py::arg("distance") = 3.0, py::arg("scale") = 2.5,
                    py::arg("image_size") = 224)
        .def_readonly("distance", &Camera::distance)
        .def_readonly("scale", &Camera::scale)
        .def_readonly("image_size", &Camera::image_size);

    py::class_<PoseSpec>(m, "PoseSpec")
        .def_static("single", &PoseSpec::single)
        .def_static("dual", [](const std::string& axes, double a, double b) {
            return PoseSpec::dual(parse_axis_set(axes), a, b);
        })
        .def_property_readonly("axes", [](const PoseSpec& p) { return std::string(to_string(p.axes)); })
        .def_property_readonly("angles", [](const PoseSpec& p) { return p.angles_deg; });

    m.def("pose_rotation", [](const PoseSpec& p) { return pose_rotation(p); });
    m.def(
        "pose_grid",
        [](const std::vector<std::string>& axes, int single_stride, int dual_stride) {
            std::vector<AxisSet> sets;
            for (const auto& a : axes) sets.push_back(parse_axis_set(a));
            return pose_grid(sets, single_stride, dual_stride);
        },
        py::arg("axes"), py::arg("single_stride") = 1, py::arg("dual_stride") = 10);

    m.def(
        "project_view",
        [](const Paperclip& clip, const PoseSpec& pose, const Camera& cam) {
            const ViewSample v = make_view(clip, pose, cam);
            return py::make_tuple(v.plane, v.pixels);
        },
        py::arg("clip"), py::arg("pose"), py::arg("camera"),
        "Image-plane and pixel coordinates (2 x 8) of a clip at a pose.");
    m.def(
        "coord_array",
        [](const Eigen::Matrix2Xd& pixels, const Camera& cam, int bins) { return coord_array(pixels, cam, bins); },
        py::arg("pixels"), py::arg("camera"), py::arg("bins") = kDefaultBins);
    m.def(
        "render_wireframe",
        [](const Eigen::Matrix2Xd& pixels, const Camera& cam) { return to_numpy(render_wireframe(pixels, cam)); },
        py::arg("pixels"), py::arg("camera"));

    m.def(
        "lc_residual",
        [](const View2& test, const std::vector<View2>& views, bool constant) {
            LcOptions o;
            o.constant_column = constant;
            return lc_residual(test, views, o);
        },
        py::arg("test"), py::arg("views"), py::arg("constant_column") = true);
    m.def(
        "lc_classify",
        [](const View2& test, const std::vector<View2>& views, const std::vector<ClassId>& labels) {
            return lc_classify(test, library_from(views, labels));
        },
        py::arg("test"), py::arg("views"), py::arg("labels"));
    m.def(
        "match2d_classify",
        [](const View2& test, const std::vector<View2>& views, const std::vector<ClassId>& labels, double sigma,
           bool allow_flip) {
            Match2dOptions o;
            o.sigma = sigma;
            o.allow_flip = allow_flip;
            return match2d(test, library_from(views, labels), o).best;
        },
        py::arg("test"), py::arg("views"), py::arg("labels"), py::arg("sigma") = 0.1, py::arg("allow_flip") = true);
    m.def(
        "sfm_reconstruct", [](const std::vector<View2>& views) { return sfm_reconstruct(views).points; },
        py::arg("views"), "3 x 8 shape, up to rotation and reflection.");
    m.def(
        "align_residual",
        [](const View2& test, const Vertices3& shape) {
            Shape3D s;
            s.points = shape;
            return align_residual(test, s).residual;
        },
        py::arg("test"), py::arg("shape"));

    m.def(
        "emit_dataset",
        [](int classes, std::uint64_t seed, const std::vector<std::string>& axes, int single_stride,
           int dual_stride, bool perspective, const std::filesystem::path& out) {
            EmitConfig cfg;
            cfg.seed = seed;
            for (const auto& a : axes) cfg.grid.axes.push_back(parse_axis_set(a));
            cfg.grid.single_stride = single_stride;
            cfg.grid.dual_stride = dual_stride;
            cfg.camera = perspective ? Camera::perspective() : Camera::orthographic();
            GenConfig gen;
            return emit_dataset(generate_clips(gen, seed, classes), cfg, out).records.size();
        },
        py::arg("classes"), py::arg("seed"), py::arg("axes"), py::arg("single_stride") = 1,
        py::arg("dual_stride") = 10, py::arg("perspective") = true, py::arg("out"),
        "Writes a coordinate-array dataset and returns its record count.");

    m.def(
        "evaluate_predictions",
        [](const std::filesystem::path& csv, const std::string& axes, int stride) {
            return profile_dict(evaluate_predictions(read_predictions_csv(csv), parse_axis_set(axes), stride));
        },
        py::arg("csv"), py::arg("axes"), py::arg("stride"));
    m.def(
        "view_based_baseline",
        [](const std::vector<double>& single_view, const std::vector<double>& training_angles) {
            GeneralizationProfile p = GeneralizationProfile::empty(AxisSet::Y, 360 / static_cast<int>(single_view.size()));
            p.accuracy = single_view;
            return view_based_baseline(p, training_angles).accuracy;
        },
        py::arg("single_view"), py::arg("training_angles"));

    m.def(
        "run_preset",
        [](const std::string& preset, const std::string& classifier, int classes, const std::vector<std::uint64_t>& seeds,
           const std::vector<std::string>& eval_axes, int epochs, const std::filesystem::path& out) {
            ExperimentConfig cfg;
            cfg.preset = preset;
            cfg.classifier = parse_classifier_kind(classifier);
            cfg.classes = classes;
            cfg.seeds = seeds;
            cfg.eval_axes.clear();
            for (const auto& a : eval_axes) cfg.eval_axes.push_back(parse_axis_set(a));
            cfg.train.epochs = epochs;
            cfg.out_dir = out;
            ResultBundle bundle;
            {
                py::gil_scoped_release release;
                bundle = run_preset(cfg);
            }
            py::dict result;
            for (const auto& c : bundle.conditions) {
                py::dict profiles;
                for (const auto& [axes, p] : c.profiles) profiles[py::str(std::string(to_string(axes)))] = profile_dict(p);
                result[py::str(c.spec.name)] = profiles;
            }
            return result;
        },
        py::arg("preset"), py::arg("classifier") = "mlp", py::arg("classes") = 100,
        py::arg("seeds") = std::vector<std::uint64_t>{0, 1, 2}, py::arg("eval_axes") = std::vector<std::string>{"y"},
        py::arg("epochs") = 300, py::arg("out") = std::filesystem::path{},
        "Runs a preset and returns {condition: {axes: profile}}.");
}
