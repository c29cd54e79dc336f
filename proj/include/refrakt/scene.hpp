#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refrakt/capture.hpp"
#include "refrakt/shapes.hpp"

namespace refrakt {

/// Everything needed to simulate a capture session.
struct SceneConfig {
    std::string meshPath;               // object mesh; empty selects the built-in `shape`
    std::string shape = "dented_sphere";  // dented_sphere | sphere | ellipsoid
    double tessellationSpacing = 0.05;  // mm, for built-in shapes
    double ior = 1.15;
    Camera camera;
    MonitorPlane monitorA;  // the two monitor positions; their order does not matter
    MonitorPlane monitorB;
    ViewSet views;
    CorrespondenceOptions capture;

    void validate() const;
};

/// Small turntable rig sized for a ~8 mm object: 256^2 camera, 4 correspondence and 24
/// silhouette views.
SceneConfig desk_scene();
/// Same rig at 512^2 with 8 correspondence and 72 silhouette views.
SceneConfig full_scene();

/// JSON scene file. Missing keys keep the desk defaults; malformed files throw ConfigError.
SceneConfig load_scene_config(const std::filesystem::path& path);
void save_scene_config(const std::filesystem::path& path, const SceneConfig& config);

/// The object to capture, in its own frame. Relative mesh paths resolve against `baseDir`.
TriangleMesh scene_object(const SceneConfig& config, const std::filesystem::path& baseDir = {});

/// Simulated capture: masks and correspondences per view, all in the object frame.
struct Dataset {
    SceneConfig scene;
    std::vector<Camera> silhouetteCameras;
    std::vector<SilhouetteMask> masks;
    std::vector<Camera> correspondenceCameras;
    std::vector<std::vector<RayRayCorrespondence>> correspondences;
    std::optional<TriangleMesh> groundTruth;

    double ior() const { return scene.ior; }
};

Dataset simulate(const SceneConfig& config, const TriangleMesh& object);
/// Variant with an explicit refracting surface (e.g. an analytic one).
Dataset simulate(const SceneConfig& config, const RefractiveSurface& object);

/// Directory layout: scene.json, mask_XXX.pgm, corr_XXX.csv, ground_truth.ply (if known).
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

/// Binary PGM (P5) mask I/O; any non-zero byte reads as ON.
void write_pgm(const std::filesystem::path& path, const SilhouetteMask& mask);
SilhouetteMask read_pgm(const std::filesystem::path& path);
/// Raw 8-bit image.
void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels);

void write_correspondences(const std::filesystem::path& path, const std::vector<RayRayCorrespondence>& table);
std::vector<RayRayCorrespondence> read_correspondences(const std::filesystem::path& path, int viewIndex);

}  // namespace refrakt
