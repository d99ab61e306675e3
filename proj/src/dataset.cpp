#include "viewlab/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "viewlab/errors.hpp"
#include "viewlab/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace viewlab {

namespace {

constexpr std::uint64_t kBackgroundStream = 3;

static_assert(std::endian::native == std::endian::little,
              "arrays.f64 is written in native order; big-endian hosts need byte swapping");

const json& field(const json& j, const char* name, const std::string& where) {
    if (!j.is_object() || !j.contains(name))
        throw SchemaError(fmt::format("{}: missing field '{}'", where, name));
    return j.at(name);
}

template <typename T>
T get_field(const json& j, const char* name, const std::string& where) {
    try {
        return field(j, name, where).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("{}: field '{}': {}", where, name, e.what()));
    }
}

std::string record_stem(const ManifestRecord& r) {
    const int a0 = static_cast<int>(std::lround(r.pose.angles_deg[0]));
    if (is_dual(r.pose.axes))
        return fmt::format("c{:05d}/{}_{:03d}_{:03d}.png", r.class_id, to_string(r.pose.axes), a0,
                           static_cast<int>(std::lround(r.pose.angles_deg[1])));
    return fmt::format("c{:05d}/{}_{:03d}.png", r.class_id, to_string(r.pose.axes), a0);
}

std::string split_tag(const EmitConfig& config, const PoseSpec& pose) {
    if (!config.train_views) return "all";
    return config.train_views->contains(pose) ? "train" : "eval";
}

std::vector<RasterImage> load_backgrounds(const fs::path& dir, int size, int channels) {
    std::vector<RasterImage> bgs;
    if (dir.empty()) return bgs;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError(dir.string(), "no .png backgrounds found");
    for (const auto& f : files) {
        RasterImage bg = resize_nearest(read_png(f), size, size);
        if (channels == 3) bg = expand_to_rgb(bg);
        bgs.push_back(std::move(bg));
    }
    return bgs;
}

class DatasetWriter {
public:
    DatasetWriter(const EmitConfig& config, const fs::path& out_dir, int classes)
        : config_(config), out_dir_(out_dir) {
        config.camera.check();
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError(out_dir.string(), ec.message());
        fs::remove(out_dir / kManifestName, ec);

        manifest_.seed = config.seed;
        manifest_.classes = classes;
        manifest_.representation = config.representation;
        manifest_.camera = config.camera;
        manifest_.grid = config.grid;
        manifest_.bins = config.bins;
        manifest_.array_store = config.array_store;

        if (config.representation == Representation::CoordArray &&
            config.array_store == ArrayStore::Binary) {
            arrays_.open(out_dir / (std::string(kArraysName) + ".tmp"), std::ios::binary | std::ios::trunc);
            if (!arrays_) throw IoError((out_dir / kArraysName).string(), "cannot open for writing");
        }
        const int channels = config.background_dir.empty() ? 1 : 3;
        backgrounds_ = load_backgrounds(config.background_dir, config.camera.image_size, channels);
    }

    void add_image(ManifestRecord record, RasterImage img) {
        if (!backgrounds_.empty()) {
            Rng rng(stream_key(config_.seed, manifest_.records.size(), kBackgroundStream));
            const auto& bg = backgrounds_[rng.below(backgrounds_.size())];
            img = composite_background(expand_to_rgb(img), bg);
        }
        record.path = "images/" + record_stem(record);
        const fs::path full = out_dir_ / record.path;
        std::error_code ec;
        fs::create_directories(full.parent_path(), ec);
        if (ec) throw IoError(full.parent_path().string(), ec.message());
        write_png(full, img);
        manifest_.records.push_back(std::move(record));
    }

    void add_array(ManifestRecord record, const Eigen::VectorXd& array) {
        if (config_.array_store == ArrayStore::Binary) {
            record.array_index = next_array_++;
            arrays_.write(reinterpret_cast<const char*>(array.data()),
                          static_cast<std::streamsize>(array.size() * sizeof(double)));
            if (!arrays_) throw IoError((out_dir_ / kArraysName).string(), "write failed");
        } else {
            record.array.assign(array.data(), array.data() + array.size());
        }
        manifest_.records.push_back(std::move(record));
    }

    DatasetManifest finish() {
        if (arrays_.is_open()) {
            arrays_.close();
            if (!arrays_) throw IoError((out_dir_ / kArraysName).string(), "close failed");
            fs::rename(out_dir_ / (std::string(kArraysName) + ".tmp"), out_dir_ / kArraysName);
        }
        write_file_atomic(out_dir_ / kManifestName, to_json(manifest_).dump(1) + "\n");
        return std::move(manifest_);
    }

    const EmitConfig& config() const { return config_; }

private:
    const EmitConfig& config_;
    fs::path out_dir_;
    DatasetManifest manifest_;
    std::ofstream arrays_;
    std::int64_t next_array_ = 0;
    std::vector<RasterImage> backgrounds_;
};

json points_to_json(const View2& p) {
    json arr = json::array();
    for (int i = 0; i < kVertexCount; ++i) arr.push_back({p(0, i), p(1, i)});
    return arr;
}

View2 points_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != kVertexCount)
        throw SchemaError(fmt::format("{}: 'points' must hold {} pairs", where, kVertexCount));
    View2 p;
    for (int i = 0; i < kVertexCount; ++i) {
        const json& pt = j[i];
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
            throw SchemaError(fmt::format("{}: 'points'[{}] must be [x, y]", where, i));
        p(0, i) = pt[0].get<double>();
        p(1, i) = pt[1].get<double>();
    }
    return p;
}

}  // namespace

std::string to_string(Representation repr) {
    switch (repr) {
        case Representation::Wireframe: return "wireframe";
        case Representation::CoordImage: return "coordimage";
        case Representation::CoordArray: return "coordarray";
        case Representation::Mesh: return "mesh";
    }
    return "?";
}

Representation parse_representation(std::string_view text) {
    for (auto r : {Representation::Wireframe, Representation::CoordImage, Representation::CoordArray,
                   Representation::Mesh})
        if (to_string(r) == text) return r;
    throw InvalidArgument(fmt::format("unknown representation '{}'", text));
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string(), "cannot open for writing");
        out << text;
        out.close();
        if (!out) throw IoError(tmp.string(), "write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError(path.string(), ec.message());
}

json pose_to_json(const PoseSpec& pose) {
    json angles = json::array({pose.angles_deg[0]});
    if (is_dual(pose.axes)) angles.push_back(pose.angles_deg[1]);
    return {{"axes", std::string(to_string(pose.axes))}, {"angles", angles}};
}

PoseSpec pose_from_json(const json& j) {
    const std::string where = "pose";
    PoseSpec pose;
    try {
        pose.axes = parse_axis_set(get_field<std::string>(j, "axes", where));
    } catch (const InvalidArgument& e) {
        throw SchemaError(std::string("pose: field 'axes': ") + e.what());
    }
    const auto angles = get_field<std::vector<double>>(j, "angles", where);
    const std::size_t want = is_dual(pose.axes) ? 2 : 1;
    if (angles.size() != want)
        throw SchemaError(fmt::format("pose: field 'angles' needs {} entries for axes '{}'", want,
                                      to_string(pose.axes)));
    pose.angles_deg[0] = angles[0];
    if (want == 2) pose.angles_deg[1] = angles[1];
    return pose;
}

json to_json(const DatasetManifest& m) {
    json grid_axes = json::array();
    for (AxisSet a : m.grid.axes) grid_axes.push_back(std::string(to_string(a)));
    json records = json::array();
    for (const auto& r : m.records) {
        json rec = {{"class_id", r.class_id}, {"pose", pose_to_json(r.pose)}, {"split", r.split}};
        if (r.points) rec["points"] = points_to_json(*r.points);
        if (!r.path.empty()) rec["path"] = r.path;
        if (!r.array.empty()) rec["array"] = r.array;
        if (r.array_index >= 0) rec["array_index"] = r.array_index;
        records.push_back(std::move(rec));
    }
    return {
        {"format_version", DatasetManifest::kFormatVersion},
        {"seed", m.seed},
        {"classes", m.classes},
        {"representation", to_string(m.representation)},
        {"camera",
         {{"mode", m.camera.mode == Projection::Orthographic ? "orthographic" : "perspective"},
          {"distance", m.camera.distance},
          {"focal", m.camera.focal},
          {"scale", m.camera.scale},
          {"image_size", m.camera.image_size}}},
        {"grid", {{"axes", grid_axes}, {"single_stride", m.grid.single_stride}, {"dual_stride", m.grid.dual_stride}}},
        {"bins", m.bins},
        {"array_store", m.array_store == ArrayStore::Inline ? "inline" : "binary"},
        {"record_count", m.records.size()},
        {"records", records},
    };
}

DatasetManifest manifest_from_json(const json& j) {
    const std::string where = "manifest";
    DatasetManifest m;
    const int version = get_field<int>(j, "format_version", where);
    if (version != DatasetManifest::kFormatVersion)
        throw SchemaError(fmt::format("manifest: unsupported format_version {}", version));
    m.seed = get_field<std::uint64_t>(j, "seed", where);
    m.classes = get_field<int>(j, "classes", where);
    try {
        m.representation = parse_representation(get_field<std::string>(j, "representation", where));
    } catch (const InvalidArgument& e) {
        throw SchemaError(std::string("manifest: field 'representation': ") + e.what());
    }
    const json& cam = field(j, "camera", where);
    const std::string mode = get_field<std::string>(cam, "mode", "camera");
    if (mode != "orthographic" && mode != "perspective")
        throw SchemaError("camera: field 'mode' must be orthographic or perspective");
    m.camera.mode = mode == "orthographic" ? Projection::Orthographic : Projection::Perspective;
    m.camera.distance = get_field<double>(cam, "distance", "camera");
    m.camera.focal = get_field<double>(cam, "focal", "camera");
    m.camera.scale = get_field<double>(cam, "scale", "camera");
    m.camera.image_size = get_field<int>(cam, "image_size", "camera");
    const json& grid = field(j, "grid", where);
    for (const auto& a : get_field<std::vector<std::string>>(grid, "axes", "grid")) {
        try {
            m.grid.axes.push_back(parse_axis_set(a));
        } catch (const InvalidArgument& e) {
            throw SchemaError(std::string("grid: field 'axes': ") + e.what());
        }
    }
    m.grid.single_stride = get_field<int>(grid, "single_stride", "grid");
    m.grid.dual_stride = get_field<int>(grid, "dual_stride", "grid");
    m.bins = get_field<int>(j, "bins", where);
    const std::string store = get_field<std::string>(j, "array_store", where);
    if (store != "inline" && store != "binary")
        throw SchemaError("manifest: field 'array_store' must be inline or binary");
    m.array_store = store == "inline" ? ArrayStore::Inline : ArrayStore::Binary;

    const json& records = field(j, "records", where);
    if (!records.is_array()) throw SchemaError("manifest: field 'records' must be an array");
    m.records.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const json& rj = records[i];
        const std::string rw = fmt::format("records[{}]", i);
        ManifestRecord r;
        r.class_id = get_field<ClassId>(rj, "class_id", rw);
        r.pose = pose_from_json(field(rj, "pose", rw));
        r.split = get_field<std::string>(rj, "split", rw);
        if (rj.contains("points")) r.points = points_from_json(rj.at("points"), rw);
        if (rj.contains("path")) r.path = get_field<std::string>(rj, "path", rw);
        if (rj.contains("array")) r.array = get_field<std::vector<double>>(rj, "array", rw);
        if (rj.contains("array_index")) r.array_index = get_field<std::int64_t>(rj, "array_index", rw);
        m.records.push_back(std::move(r));
    }
    if (j.contains("record_count") && j.at("record_count").get<std::size_t>() != m.records.size())
        throw SchemaError("manifest: field 'record_count' disagrees with records");
    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open manifest");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    try {
        return manifest_from_json(j);
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

std::vector<double> record_array(const DatasetManifest& manifest, const ManifestRecord& record,
                                 const fs::path& manifest_dir) {
    if (!record.array.empty()) return record.array;
    if (record.array_index < 0) throw SchemaError("record has neither 'array' nor 'array_index'");
    const fs::path path = manifest_dir / kArraysName;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open array store");
    const std::size_t width = 2 * static_cast<std::size_t>(manifest.bins);
    std::vector<double> out(width);
    in.seekg(static_cast<std::streamoff>(record.array_index * width * sizeof(double)));
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(width * sizeof(double)));
    if (!in) throw IoError(path.string(), fmt::format("short read at record {}", record.array_index));
    return out;
}

DatasetManifest emit_dataset(const std::vector<Paperclip>& clips, const EmitConfig& config,
                             const fs::path& out_dir) {
    if (config.representation == Representation::Mesh)
        throw InvalidArgument("emit_dataset: paperclips cannot use the mesh representation");
    DatasetWriter writer(config, out_dir, static_cast<int>(clips.size()));
    const auto poses = config.grid.poses();
    for (const Paperclip& clip : clips) {
        for (const PoseSpec& pose : poses) {
            const ViewSample view = make_view(clip, pose, config.camera);
            ManifestRecord rec;
            rec.class_id = clip.class_id;
            rec.pose = pose;
            rec.points = view.plane;
            rec.split = split_tag(config, pose);
            switch (config.representation) {
                case Representation::CoordArray:
                    writer.add_array(std::move(rec), coord_array(view.pixels, config.camera, config.bins));
                    break;
                case Representation::Wireframe:
                    writer.add_image(std::move(rec), render_wireframe(view.pixels, config.camera, config.style));
                    break;
                case Representation::CoordImage:
                    writer.add_image(std::move(rec), render_coord_image(view.pixels, config.camera, config.style));
                    break;
                case Representation::Mesh: break;
            }
        }
    }
    return writer.finish();
}

DatasetManifest emit_mesh_dataset(const std::vector<Mesh>& meshes, const EmitConfig& config,
                                  const fs::path& out_dir) {
    EmitConfig cfg = config;
    cfg.representation = Representation::Mesh;
    DatasetWriter writer(cfg, out_dir, static_cast<int>(meshes.size()));
    const auto poses = cfg.grid.poses();
    for (std::size_t k = 0; k < meshes.size(); ++k) {
        for (const PoseSpec& pose : poses) {
            ManifestRecord rec;
            rec.class_id = static_cast<ClassId>(k);
            rec.pose = pose;
            rec.split = split_tag(cfg, pose);
            writer.add_image(std::move(rec), render_mesh_flat(meshes[k], pose, cfg.camera));
        }
    }
    return writer.finish();
}

void write_geometry(const std::vector<Paperclip>& clips, const GenConfig& config, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string(), ec.message());
    fs::remove(out_dir / kGeometryManifestName, ec);
    json files = json::array();
    for (const Paperclip& clip : clips) {
        json verts = json::array();
        for (int i = 0; i < kVertexCount; ++i)
            verts.push_back({clip.vertices(0, i), clip.vertices(1, i), clip.vertices(2, i)});
        const std::string name = fmt::format("clip_{:05d}.json", clip.class_id);
        write_file_atomic(out_dir / name, json{{"class_id", clip.class_id}, {"vertices", verts}}.dump(1) + "\n");
        files.push_back(name);
    }
    const json manifest = {
        {"format_version", 1},
        {"seed", config.seed},
        {"classes", clips.size()},
        {"generator",
         {{"step_range", {config.step_low, config.step_high}},
          {"min_segment_angle_deg", config.min_segment_angle_deg},
          {"min_clearance", config.min_clearance},
          {"max_attempts", config.max_attempts}}},
        {"files", files},
    };
    write_file_atomic(out_dir / kGeometryManifestName, manifest.dump(1) + "\n");
}

std::vector<Paperclip> read_geometry(const fs::path& dir) {
    const fs::path mpath = dir / kGeometryManifestName;
    std::ifstream in(mpath);
    if (!in) throw IoError(mpath.string(), "cannot open geometry manifest");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError(mpath.string(), std::string("invalid JSON: ") + e.what());
    }
    std::vector<Paperclip> clips;
    for (const auto& name : get_field<std::vector<std::string>>(manifest, "files", mpath.string())) {
        const fs::path p = dir / name;
        std::ifstream f(p);
        if (!f) throw IoError(p.string(), "cannot open geometry file");
        json j;
        try {
            f >> j;
        } catch (const json::exception& e) {
            throw IoError(p.string(), std::string("invalid JSON: ") + e.what());
        }
        Paperclip clip;
        clip.class_id = get_field<ClassId>(j, "class_id", p.string());
        const auto verts = get_field<std::vector<std::vector<double>>>(j, "vertices", p.string());
        if (verts.size() != kVertexCount) throw SchemaError(p.string() + ": need 8 vertices");
        for (int i = 0; i < kVertexCount; ++i) {
            if (verts[i].size() != 3) throw SchemaError(p.string() + ": vertex must be [x, y, z]");
            clip.vertices.col(i) << verts[i][0], verts[i][1], verts[i][2];
        }
        clips.push_back(clip);
    }
    return clips;
}

}  // namespace viewlab
