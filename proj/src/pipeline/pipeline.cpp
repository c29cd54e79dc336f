#include "refrakt/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include <nlohmann/json.hpp>

#include "refrakt/bvh.hpp"
#include "refrakt/consolidate.hpp"
#include "refrakt/depth_solver.hpp"
#include "refrakt/errors.hpp"
#include "refrakt/geometry.hpp"
#include "refrakt/silhouette_opt.hpp"
#include "refrakt/surfacer.hpp"
#include "refrakt/visual_hull.hpp"

namespace refrakt {

void PipelineConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    if (!(ior > 1.0)) throw ConfigError("ior must exceed 1");
    positive(correspondenceViewCount, "correspondenceViewCount");
    if (silhouetteViewCount < 3) throw ConfigError("silhouetteViewCount must be at least 3");
    positive(imageSize, "imageSize");
    positive(sampleCount, "sampleCount");
    positive(lambdaScale, "lambdaScale");
    positive(alpha, "alpha");
    positive(betaScale, "betaScale");
    positive(knnK, "knnK");
    positive(maxProgressiveIters, "maxProgressiveIters");
    positive(voxelResolution, "voxelResolution");
    positive(surfaceResolution, "surfaceResolution");
    positive(pcaNeighbors, "pcaNeighbors");
    if (!(depthStandoff >= 0.0)) throw ConfigError("depthStandoff must not be negative");
    positive(depthIters, "depthIters");
    positive(consolidateIters, "consolidateIters");
    positive(silhouetteRounds, "silhouetteRounds");
    positive(bandPx, "bandPx");
    positive(convergenceFraction, "convergenceFraction");
    positive(convergencePatience, "convergencePatience");
    positive(hausdorffSamples, "hausdorffSamples");
}

PipelineConfig full_profile() { return PipelineConfig{}; }

PipelineConfig desk_profile() {
    PipelineConfig c;
    c.profile = "desk";
    c.correspondenceViewCount = 4;
    c.silhouetteViewCount = 24;
    c.imageSize = 256;
    c.sampleCount = 5000;
    c.maxProgressiveIters = 8;
    c.voxelResolution = 128;
    c.surfaceResolution = 96;
    return c;
}

PipelineConfig profile_by_name(const std::string& name) {
    if (name == "desk") return desk_profile();
    if (name == "full") return full_profile();
    throw ConfigError("unknown profile '" + name + "' (expected desk or full)");
}

SceneConfig scene_for(const PipelineConfig& config, SceneConfig base) {
    const double scale = static_cast<double>(config.imageSize) / base.camera.width;
    base.camera.width = base.camera.height = config.imageSize;
    base.camera.K.fx *= scale;
    base.camera.K.fy *= scale;
    base.camera.K.cx *= scale;
    base.camera.K.cy *= scale;
    base.views.correspondenceViews = even_angles(config.correspondenceViewCount);
    base.views.silhouetteViews = even_angles(config.silhouetteViewCount);
    base.ior = config.ior;
    return base;
}

std::optional<DentedSphereShape> scene_dent(const SceneConfig& scene) {
    if (scene.meshPath.empty() && scene.shape == "dented_sphere") return default_dented_sphere();
    return std::nullopt;
}

Evaluation evaluate(const TriangleMesh& model, const TriangleMesh& groundTruth, int sampleCount,
                    const RegionTest& region) {
    const HausdorffResult h = hausdorff(model, groundTruth, sampleCount);
    Evaluation e;
    e.meanHausdorff = h.meanDist;
    e.maxHausdorff = h.maxDist;
    e.perVertexError = h.perVertexDist;
    if (region) {
        const PointCloud truthPoints = sample_surface_uniform(groundTruth, sampleCount, 11);
        std::vector<Vec3> inside;
        for (const Vec3& p : truthPoints.points)
            if (region(p)) inside.push_back(p);
        if (!inside.empty()) {
            const MeshBvh bvh(model);
            std::vector<double> d(inside.size());
            const int n = static_cast<int>(inside.size());
#pragma omp parallel for schedule(static)
            for (int i = 0; i < n; ++i) d[i] = std::sqrt(bvh.closest_point(inside[i]).squaredDistance);
            double sum = 0.0;
            for (double v : d) sum += v;
            e.regionError = sum / n;
        }
    }
    return e;
}

namespace {

using Clock = std::chrono::steady_clock;

// Runs one named stage: records it, times it and tags its errors.
template <typename F>
auto stage(IterationReport& report, const char* name, F&& body) {
    report.stages.emplace_back(name);
    const auto t0 = Clock::now();
    auto finish = [&] {
        report.timings.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            finish();
        } else {
            auto r = body();
            finish();
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

int count_rises(const std::vector<double>& trace) {
    int n = 0;
    for (std::size_t k = 1; k < trace.size(); ++k) n += trace[k] > trace[k - 1];
    return n;
}

// PCA normals of the final samples, signed by the rough model's nearest face.
std::vector<Vec3> oriented_normals(const std::vector<Vec3>& pts, const MeshBvh& rough, int k) {
    const KdTree tree(pts);
    std::vector<Vec3> normals(pts.size());
    const int n = static_cast<int>(pts.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const Vec3 ref = rough.mesh().face_normal(rough.closest_point(pts[i]).face);
        std::vector<Vec3> patch;
        for (const Neighbor& nb : tree.knn(pts[i], k)) patch.push_back(pts[nb.index]);
        const std::optional<Vec3> nrm = pca_normal(patch);
        Vec3 v = nrm ? *nrm : ref;
        if (dot(v, ref) < 0.0) v = -v;
        normals[i] = v;
    }
    return normals;
}

}  // namespace

ReconstructionContext make_context(const Dataset& data, const PipelineConfig& config, double diaglen) {
    config.validate();
    if (!(diaglen > 0.0)) throw ConfigError("diaglen must be positive");
    ReconstructionContext c;
    c.data = &data;
    c.config = config;
    c.diaglen = diaglen;
    c.dent = scene_dent(data.scene);
    return c;
}

TriangleMesh run_iteration(const TriangleMesh& roughModel, const ReconstructionContext& context, int iterationIndex,
                           IterationReport& report) {
    const Dataset& data = *context.data;
    const PipelineConfig& cfg = context.config;
    const double ior = data.ior();
    report.iterationIndex = iterationIndex;
    const MeshSurface rough(roughModel);

    const std::size_t views = data.correspondences.size();
    std::vector<FilteredCorrespondences> filtered(views);
    stage(report, "filter", [&] {
        std::size_t valid = 0, total = 0;
        for (std::size_t v = 0; v < views; ++v) {
            filtered[v] = filter_correspondences(data.correspondences[v], rough, ior);
            valid += filtered[v].valid.size();
            total += filtered[v].valid.size() + filtered[v].rejected.size();
        }
        report.validCorrespondences = valid;
        report.validCorrespondenceFraction = total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
    });

    std::vector<DepthField> fields;
    stage(report, "solve_depths", [&] {
        const double lambda = cfg.lambdaScale / context.diaglen;
        for (std::size_t v = 0; v < views; ++v) {
            if (filtered[v].valid.empty()) continue;
            DepthField init = initial_depth_field(filtered[v].valid, rough, cfg.pcaNeighbors,
                                                  cfg.depthStandoff * context.diaglen);
            if (init.size() == 0) continue;
            DepthSolveResult r = solve_depths(init, ior, lambda, cfg.depthIters);
            report.depthEnergy += r.optimizer.energy;
            report.descentViolations += count_rises(r.optimizer.energyTrace);
            fields.push_back(std::move(r.field));
        }
    });

    PointCloud target, roughHits;
    stage(report, "depths_to_cloud", [&] {
        if (fields.empty()) return;  // nothing to consolidate toward
        target = depths_to_cloud(fields, static_cast<int>(views));
        roughHits = rough_hits_cloud(fields, static_cast<int>(views));
    });

    PoissonDiskSamples disk;
    stage(report, "poisson_disk_sample", [&] {
        disk = poisson_disk_sample(roughModel, cfg.sampleCount, cfg.seed + static_cast<std::uint64_t>(iterationIndex));
    });

    SampleSet samples;
    stage(report, "adaptive_radii", [&] {
        samples = make_sample_set(disk, cfg.knnK);
        adaptive_radii(samples, target, roughHits);
    });

    stage(report, "consolidate", [&] {
        ConsolidateResult r = consolidate(std::move(samples), target, roughHits, cfg.alpha, cfg.consolidateIters);
        report.consolidationIterations = r.iterations;
        report.descentViolations += r.descentViolations;
        if (!r.steps.empty()) report.consolidationEnergy = r.steps.back().energyAfter;
        samples = std::move(r.samples);
    });

    if (cfg.silhouetteStage) {
        stage(report, "optimize_silhouettes", [&] {
            const SilhouetteTargets targets(data.masks, data.silhouetteCameras);
            SilhouetteOptions opt;
            opt.beta = cfg.betaScale / context.diaglen;
            opt.knn = cfg.knnK;
            opt.maxRounds = cfg.silhouetteRounds;
            opt.bandPx = cfg.bandPx;
            SilhouetteResult r = optimize_silhouettes(std::move(samples), targets, opt);
            report.silhouetteRounds = r.rounds;
            report.silhouetteEnergy = r.finalEnergy;
            report.descentViolations += r.descentViolations;
            samples = std::move(r.samples);
        });
    }

    return stage(report, "reconstruct_mesh", [&] {
        PointCloud cloud;
        cloud.points = samples.positions;
        cloud.normals = oriented_normals(cloud.points, rough.bvh(), cfg.pcaNeighbors);
        report.pointCount = cloud.size();
        return reconstruct_mesh(cloud, cfg.surfaceResolution);
    });
}

TriangleMesh carve_initial(const Dataset& data, const PipelineConfig& config) {
    const Aabb bounds = carving_bounds(data.masks, data.silhouetteCameras, data.scene.views.rotationAxis.origin);
    return hull_mesh(carve(data.masks, data.silhouetteCameras, bounds, config.voxelResolution));
}

namespace {

void score(IterationReport& report, const TriangleMesh& model, const ReconstructionContext& context) {
    const Dataset& data = *context.data;
    report.contourError = contour_error(model, data.masks, data.silhouetteCameras);
    if (!data.groundTruth) return;
    RegionTest region;
    if (context.dent) {
        const DentedSphereShape dent = *context.dent;
        region = [dent](const Vec3& p) { return dent.in_dent(p, 1e-3); };
    }
    const Evaluation e = evaluate(model, *data.groundTruth, context.config.hausdorffSamples, region);
    report.meanHausdorff = e.meanHausdorff;
    report.maxHausdorff = e.maxHausdorff;
    report.dentError = e.regionError;
}

}  // namespace

RunResult run_full(const Dataset& data, const PipelineConfig& config, const ReportSink& sink) {
    config.validate();
    RunResult out;
    IterationReport first;
    out.initialModel = stage(first, "carve", [&] { return carve_initial(data, config); });
    const ReconstructionContext context = make_context(data, config, out.initialModel.bounds().diagonal());
    {
        // valid fraction of the hull, for comparison with later rounds
        const MeshSurface hull(out.initialModel);
        std::size_t valid = 0, total = 0;
        for (const auto& table : data.correspondences) {
            const FilteredCorrespondences f = filter_correspondences(table, hull, data.ior());
            valid += f.valid.size();
            total += f.valid.size() + f.rejected.size();
        }
        first.validCorrespondences = valid;
        first.validCorrespondenceFraction = total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
    }
    score(first, out.initialModel, context);
    out.reports.push_back(first);
    if (sink) sink(first, out.initialModel);

    TriangleMesh model = out.initialModel;
    const double threshold = config.convergenceFraction * context.diaglen;
    int calm = 0;
    for (int it = 1; it <= config.maxProgressiveIters; ++it) {
        IterationReport report;
        TriangleMesh next = run_iteration(model, context, it, report);
        report.modelChange = hausdorff(next, model, config.hausdorffSamples).meanDist;
        score(report, next, context);
        const IterationReport& prev = out.reports.back();
        const double change = report.meanHausdorff && prev.meanHausdorff
                                  ? std::abs(*report.meanHausdorff - *prev.meanHausdorff)
                                  : report.modelChange;
        calm = change < threshold ? calm + 1 : 0;
        model = std::move(next);
        out.reports.push_back(report);
        if (sink) sink(report, model);
        if (calm >= config.convergencePatience) {
            out.converged = true;
            break;
        }
    }
    out.finalModel = std::move(model);
    return out;
}

std::string report_json(const IterationReport& r, bool withTimings) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iterationIndex;
    if (r.meanHausdorff) j["mean_hausdorff"] = *r.meanHausdorff;
    if (r.maxHausdorff) j["max_hausdorff"] = *r.maxHausdorff;
    if (r.dentError) j["dent_error"] = *r.dentError;
    j["contour_error_px"] = r.contourError;
    j["model_change"] = r.modelChange;
    j["valid_correspondence_fraction"] = r.validCorrespondenceFraction;
    j["valid_correspondences"] = r.validCorrespondences;
    j["energy"] = {{"depth", r.depthEnergy}, {"consolidation", r.consolidationEnergy}, {"silhouette", r.silhouetteEnergy}};
    j["consolidation_iterations"] = r.consolidationIterations;
    j["silhouette_rounds"] = r.silhouetteRounds;
    j["descent_violations"] = r.descentViolations;
    j["points"] = r.pointCount;
    j["stages"] = r.stages;
    if (withTimings) {
        nlohmann::ordered_json t;
        for (const StageTiming& s : r.timings) t[s.stage] = s.seconds;
        j["seconds"] = t;
    }
    return j.dump();
}

}  // namespace refrakt
