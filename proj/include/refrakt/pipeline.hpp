#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refrakt/scene.hpp"
#include "refrakt/shapes.hpp"
#include "refrakt/silhouette_opt.hpp"

namespace refrakt {

struct PipelineConfig {
    std::string profile = "full";
    double ior = 1.15;
    int correspondenceViewCount = 8;
    int silhouetteViewCount = 72;
    int imageSize = 512;
    int sampleCount = 30000;
    double lambdaScale = 10.0;  // lambda = lambdaScale / diaglen
    double alpha = 7.5;
    double betaScale = 50.0;  // beta = betaScale / diaglen
    int knnK = 6;
    int maxProgressiveIters = 20;
    int voxelResolution = 128;
    int surfaceResolution = 128;
    int pcaNeighbors = 20;
    double depthStandoff = 0.15;  // of diaglen; see initial_depth_field
    int depthIters = 1000;
    int consolidateIters = 50;
    int silhouetteRounds = 20;
    double bandPx = kBoundaryBandPx;  // boundary band for the silhouette flags, pixels
    double convergenceFraction = 0.005;  // of diaglen
    int convergencePatience = 3;
    int hausdorffSamples = 20000;
    bool silhouetteStage = true;
    std::uint64_t seed = 1;

    /// Throws ConfigError on non-positive values.
    void validate() const;
};

PipelineConfig full_profile();
/// 128^3 carving, 5K samples, 24 silhouette and 4 correspondence views, 256^2 images, 8 rounds.
PipelineConfig desk_profile();
/// Throws ConfigError for names other than "desk" and "full".
PipelineConfig profile_by_name(const std::string& name);

/// Scene matching the profile's rig: view counts, image size and ior.
SceneConfig scene_for(const PipelineConfig& config, SceneConfig base);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct IterationReport {
    int iterationIndex = 0;  // 0 is the carved hull
    std::optional<double> meanHausdorff;
    std::optional<double> maxHausdorff;
    std::optional<double> dentError;  // mean distance from the true dent surface to the model
    double contourError = 0.0;         // pixels, over the silhouette views
    double modelChange = 0.0;          // mean distance to the previous round's model
    double validCorrespondenceFraction = 0.0;
    std::size_t validCorrespondences = 0;
    double depthEnergy = 0.0;          // depth_energy, summed over views
    double consolidationEnergy = 0.0;  // last consolidation step
    double silhouetteEnergy = 0.0;
    int consolidationIterations = 0;
    int silhouetteRounds = 0;
    int descentViolations = 0;
    std::size_t pointCount = 0;
    std::vector<std::string> stages;  // in execution order
    std::vector<StageTiming> timings;
};

/// Region of the ground truth whose error is reported separately.
using RegionTest = std::function<bool(const Vec3&)>;

/// The dent of the built-in benchmark shape, when the scene uses it.
std::optional<DentedSphereShape> scene_dent(const SceneConfig& scene);

struct Evaluation {
    double meanHausdorff = 0.0;
    double maxHausdorff = 0.0;
    std::optional<double> regionError;
    std::vector<double> perVertexError;  // per model vertex, distance to the ground truth
};

/// Symmetric surface distance with an optional region error measured from ground-truth
/// surface points that satisfy `region`.
Evaluation evaluate(const TriangleMesh& model, const TriangleMesh& groundTruth, int sampleCount = 20000,
                    const RegionTest& region = {});

/// Stage state carried between rounds.
struct ReconstructionContext {
    const Dataset* data = nullptr;
    PipelineConfig config;
    double diaglen = 0.0;
    std::optional<DentedSphereShape> dent;
};

ReconstructionContext make_context(const Dataset& data, const PipelineConfig& config, double diaglen);

/// filter -> solve_depths -> depths_to_cloud -> poisson_disk_sample -> adaptive_radii ->
/// consolidate -> optimize_silhouettes -> reconstruct_mesh. Stage errors come back as
/// StageError naming the stage.
TriangleMesh run_iteration(const TriangleMesh& roughModel, const ReconstructionContext& context, int iterationIndex,
                           IterationReport& report);

/// Space-carved starting model (closed hull mesh).
TriangleMesh carve_initial(const Dataset& data, const PipelineConfig& config);

struct RunResult {
    TriangleMesh initialModel;
    TriangleMesh finalModel;
    std::vector<IterationReport> reports;  // report 0 describes the hull
    bool converged = false;
};

using ReportSink = std::function<void(const IterationReport&, const TriangleMesh&)>;

/// Carve, then refine until maxProgressiveIters or until the error proxy changes by less
/// than convergenceFraction * diaglen for convergencePatience consecutive rounds. The proxy
/// is the ground-truth mean Hausdorff when known, else the distance between consecutive
/// models.
RunResult run_full(const Dataset& data, const PipelineConfig& config, const ReportSink& sink = {});

/// One JSON object; keys in a fixed order. Timings are left out unless asked for so that
/// reports of identical runs compare equal.
std::string report_json(const IterationReport& report, bool withTimings = true);

}  // namespace refrakt
