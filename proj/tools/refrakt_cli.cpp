#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "refrakt/errors.hpp"
#include "refrakt/mesh_io.hpp"
#include "refrakt/pipeline.hpp"
#include "refrakt/visual_hull.hpp"

namespace fs = std::filesystem;
using namespace refrakt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// Flags that mirror PipelineConfig. Values left unset keep the profile's defaults.
struct Overrides {
    std::string profile = "desk";
    std::optional<double> ior, lambdaScale, alpha, betaScale, bandPx, depthStandoff;
    std::optional<int> samples, knn, maxIters, voxels, surfaceResolution, corrViews, silViews, imageSize;
    std::optional<int> pcaNeighbors, depthIters, consolidateIters, silhouetteRounds;
    bool noSilhouette = false;
    std::uint64_t seed = 1;

    void attach(CLI::App* app) {
        app->add_option("--profile", profile, "desk or full")->check(CLI::IsMember({"desk", "full"}));
        app->add_option("--seed", seed, "sampling seed");
        app->add_option("--ior", ior, "refractive index");
        app->add_option("--lambda-scale", lambdaScale, "depth smoothness, lambda = value / diaglen");
        app->add_option("--alpha", alpha, "consolidation smoothness");
        app->add_option("--beta-scale", betaScale, "silhouette smoothness, beta = value / diaglen");
        app->add_option("--samples", samples, "sample count");
        app->add_option("--knn", knn, "neighbors per sample");
        app->add_option("--max-iters", maxIters, "progressive rounds");
        app->add_option("--voxels", voxels, "carving grid resolution");
        app->add_option("--surface-resolution", surfaceResolution, "remeshing grid resolution");
        app->add_option("--correspondence-views", corrViews, "correspondence view count");
        app->add_option("--silhouette-views", silViews, "silhouette view count");
        app->add_option("--image-size", imageSize, "image width and height");
        app->add_option("--band-px", bandPx, "silhouette boundary band, pixels");
        app->add_option("--pca-neighbors", pcaNeighbors, "neighbors for the rough-model normals");
        app->add_option("--depth-standoff", depthStandoff, "depth origin offset before the rough hit, of diaglen");
        app->add_option("--depth-iters", depthIters, "depth solver iterations per view");
        app->add_option("--consolidate-iters", consolidateIters, "consolidation steps per round");
        app->add_option("--silhouette-rounds", silhouetteRounds, "silhouette refresh rounds per round");
        app->add_flag("--no-silhouette", noSilhouette, "skip the silhouette stage");
    }

    PipelineConfig config() const {
        PipelineConfig c = profile_by_name(profile);
        c.seed = seed;
        if (ior) c.ior = *ior;
        if (lambdaScale) c.lambdaScale = *lambdaScale;
        if (alpha) c.alpha = *alpha;
        if (betaScale) c.betaScale = *betaScale;
        if (samples) c.sampleCount = *samples;
        if (knn) c.knnK = *knn;
        if (maxIters) c.maxProgressiveIters = *maxIters;
        if (voxels) c.voxelResolution = *voxels;
        if (surfaceResolution) c.surfaceResolution = *surfaceResolution;
        if (corrViews) c.correspondenceViewCount = *corrViews;
        if (silViews) c.silhouetteViewCount = *silViews;
        if (imageSize) c.imageSize = *imageSize;
        if (bandPx) c.bandPx = *bandPx;
        if (pcaNeighbors) c.pcaNeighbors = *pcaNeighbors;
        if (depthStandoff) c.depthStandoff = *depthStandoff;
        if (depthIters) c.depthIters = *depthIters;
        if (consolidateIters) c.consolidateIters = *consolidateIters;
        if (silhouetteRounds) c.silhouetteRounds = *silhouetteRounds;
        c.silhouetteStage = !noSilhouette;
        c.validate();
        return c;
    }
};

Dataset simulate_scene(const std::string& scenePath, const PipelineConfig& cfg, bool iorGiven) {
    SceneConfig base = cfg.profile == "full" ? full_scene() : desk_scene();
    fs::path baseDir;
    if (!scenePath.empty()) {
        base = load_scene_config(scenePath);
        baseDir = fs::path(scenePath).parent_path();
    }
    SceneConfig scene = scene_for(cfg, base);
    if (!scenePath.empty() && !iorGiven) scene.ior = base.ior;
    return simulate(scene, scene_object(scene, baseDir));
}

void write_evaluation(const fs::path& dir, const TriangleMesh& model, const Dataset& data, int samples) {
    if (!data.groundTruth) {
        std::cerr << "no ground truth in the dataset, skipping evaluation\n";
        return;
    }
    RegionTest region;
    if (const auto dent = scene_dent(data.scene)) region = [d = *dent](const Vec3& p) { return d.in_dent(p, 1e-3); };
    const Evaluation e = evaluate(model, *data.groundTruth, samples, region);
    write_ply(dir / "error_map.ply", model, e.perVertexError);
    nlohmann::ordered_json j;
    j["mean_hausdorff"] = e.meanHausdorff;
    j["max_hausdorff"] = e.maxHausdorff;
    if (e.regionError) j["dent_error"] = *e.regionError;
    std::ofstream(dir / "evaluation.json") << j.dump(2) << '\n';
    std::cout << j.dump() << '\n';
}

void reconstruct(const Dataset& data, const PipelineConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    std::ofstream reports(out / "reports.jsonl");
    const RunResult r = run_full(data, cfg, [&](const IterationReport& rep, const TriangleMesh& model) {
        const std::string line = report_json(rep);
        reports << line << '\n' << std::flush;
        std::cout << line << '\n' << std::flush;
        char name[32];
        std::snprintf(name, sizeof name, "model_%02d.ply", rep.iterationIndex);
        write_ply(out / name, model);
    });
    write_ply(out / "final.ply", r.finalModel);
    std::cout << (r.converged ? "converged" : "stopped at the round limit") << " after " << r.reports.size() - 1
              << " rounds\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transparent object reconstruction from refraction correspondences and silhouettes"};
    app.require_subcommand(1);

    Overrides o;
    std::string scenePath, dataDir, modelPath, truthPath;
    fs::path out = "out";

    auto* sim = app.add_subcommand("simulate", "render masks and correspondences of a scene");
    sim->add_option("--scene", scenePath, "scene JSON (built-in desk/full rig when absent)");
    sim->add_option("--out", out, "dataset directory");
    o.attach(sim);

    auto* carveCmd = app.add_subcommand("carve", "space-carve the visual hull of a dataset");
    carveCmd->add_option("--data", dataDir, "dataset directory")->required();
    carveCmd->add_option("--out", out, "output directory");
    o.attach(carveCmd);

    auto* rec = app.add_subcommand("reconstruct", "run the progressive reconstruction");
    rec->add_option("--data", dataDir, "dataset directory")->required();
    rec->add_option("--out", out, "output directory");
    o.attach(rec);

    auto* eval = app.add_subcommand("evaluate", "compare a mesh with the ground truth");
    eval->add_option("--model", modelPath, "reconstructed mesh")->required();
    eval->add_option("--truth", truthPath, "ground-truth mesh, or a dataset directory")->required();
    eval->add_option("--out", out, "output directory");
    o.attach(eval);

    auto* all = app.add_subcommand("all", "simulate, reconstruct and evaluate");
    all->add_option("--scene", scenePath, "scene JSON (built-in desk/full rig when absent)");
    all->add_option("--out", out, "output directory");
    o.attach(all);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const PipelineConfig cfg = o.config();
        if (*sim) {
            save_dataset(out, simulate_scene(scenePath, cfg, o.ior.has_value()));
            std::cout << "dataset written to " << out << '\n';
        } else if (*carveCmd) {
            const Dataset data = load_dataset(dataDir);
            fs::create_directories(out);
            const TriangleMesh hull = carve_initial(data, cfg);
            write_ply(out / "hull.ply", hull);
            std::cout << "hull: " << hull.vertices.size() << " vertices, " << hull.faces.size() << " faces\n";
        } else if (*rec) {
            reconstruct(load_dataset(dataDir), cfg, out);
        } else if (*eval) {
            fs::create_directories(out);
            const TriangleMesh model = read_mesh(modelPath);
            Dataset data;
            if (fs::is_directory(truthPath)) {
                data = load_dataset(truthPath);
            } else {
                data.scene.shape = "";
                data.scene.meshPath = truthPath;
                data.groundTruth = read_mesh(truthPath);
            }
            write_evaluation(out, model, data, cfg.hausdorffSamples);
        } else if (*all) {
            const Dataset data = simulate_scene(scenePath, cfg, o.ior.has_value());
            save_dataset(out / "dataset", data);
            reconstruct(data, cfg, out);
            write_evaluation(out, read_ply(out / "final.ply").mesh, data, cfg.hausdorffSamples);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
    return 0;
}
