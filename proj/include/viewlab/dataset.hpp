#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "viewlab/clipgen.hpp"
#include "viewlab/mesh.hpp"
#include "viewlab/raster.hpp"
#include "viewlab/scene.hpp"
#include "viewlab/views.hpp"

namespace viewlab {

enum class Representation { Wireframe, CoordImage, CoordArray, Mesh };
enum class ArrayStore { Inline, Binary };

std::string to_string(Representation repr);
Representation parse_representation(std::string_view text);

struct GridSpec {
    std::vector<AxisSet> axes;
    int single_stride = 1;
    int dual_stride = 10;

    std::vector<PoseSpec> poses() const { return pose_grid(axes, single_stride, dual_stride); }
};

struct ManifestRecord {
    ClassId class_id = 0;
    PoseSpec pose;
    std::optional<View2> points;    ///< image-plane vertices (paperclip datasets)
    std::string path;               ///< image path relative to the manifest
    std::vector<double> array;      ///< inline coordinate array
    std::int64_t array_index = -1;  ///< record index into arrays.f64
    std::string split;              ///< "train", "eval" or "all"
};

struct DatasetManifest {
    static constexpr int kFormatVersion = 1;

    std::uint64_t seed = 0;
    int classes = 0;
    Representation representation = Representation::CoordArray;
    Camera camera;
    GridSpec grid;
    int bins = kDefaultBins;
    ArrayStore array_store = ArrayStore::Inline;
    std::vector<ManifestRecord> records;
};

struct EmitConfig {
    std::uint64_t seed = 0;
    GridSpec grid;
    Representation representation = Representation::CoordArray;
    Camera camera;
    int bins = kDefaultBins;
    ArrayStore array_store = ArrayStore::Inline;
    std::optional<TrainViews> train_views;  ///< tags records "train"/"eval"; otherwise "all"
    std::filesystem::path background_dir;   ///< optional PNG backgrounds for image datasets
    StrokeStyle style;
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kArraysName = "arrays.f64";
inline constexpr const char* kGeometryManifestName = "geometry.json";

/// Renders one record per (class, pose) in (class, pose) order and writes the
/// manifest last via rename, so a manifest exists only for complete runs.
DatasetManifest emit_dataset(const std::vector<Paperclip>& clips, const EmitConfig& config,
                             const std::filesystem::path& out_dir);

/// Flat-shaded image dataset from prepared meshes; class ids follow the
/// vector order.
DatasetManifest emit_mesh_dataset(const std::vector<Mesh>& meshes, const EmitConfig& config,
                                  const std::filesystem::path& out_dir);

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Coordinate array of a record, from inline storage or arrays.f64 next to
/// the manifest.
std::vector<double> record_array(const DatasetManifest& manifest, const ManifestRecord& record,
                                 const std::filesystem::path& manifest_dir);

/// Geometry files: one JSON per class plus geometry.json listing them.
void write_geometry(const std::vector<Paperclip>& clips, const GenConfig& config,
                    const std::filesystem::path& out_dir);
std::vector<Paperclip> read_geometry(const std::filesystem::path& dir);

/// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

nlohmann::json pose_to_json(const PoseSpec& pose);
PoseSpec pose_from_json(const nlohmann::json& j);

}  // namespace viewlab
