#include "refrakt/scene.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "refrakt/errors.hpp"
#include "refrakt/mesh_io.hpp"

namespace refrakt {

using nlohmann::json;

namespace {

constexpr double kMonitorDistanceNear = 15.0;
constexpr double kMonitorDistanceFar = 30.0;
constexpr double kMonitorPitch = 0.02;

SceneConfig rig(int imageSize, int correspondenceViews, int silhouetteViews) {
    SceneConfig s;
    s.camera.width = s.camera.height = imageSize;
    // 8 mm object spans about two thirds of the frame at 60 mm
    s.camera.K = {5.0 * imageSize, 5.0 * imageSize, 0.5 * imageSize, 0.5 * imageSize};
    s.camera.worldToCamera = look_at({0, 0, 60}, {0, 0, 0}, {0, 1, 0});
    s.monitorA = make_monitor({0, 0, -kMonitorDistanceFar}, {0, 0, 1}, 1920, 1080, kMonitorPitch);
    s.monitorB = make_monitor({0, 0, -kMonitorDistanceNear}, {0, 0, 1}, 1920, 1080, kMonitorPitch);
    s.views.correspondenceViews = even_angles(correspondenceViews);
    s.views.silhouetteViews = even_angles(silhouetteViews);
    return s;
}

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::vector<double> angles_from(const json& j) {
    if (j.is_number_integer()) return even_angles(j.get<int>());
    return j.get<std::vector<double>>();
}

}  // namespace

void SceneConfig::validate() const {
    if (!(ior > 1.0)) throw ConfigError("ior must exceed 1");
    if (meshPath.empty() && shape != "dented_sphere" && shape != "sphere" && shape != "ellipsoid")
        throw ConfigError("unknown shape '" + shape + "'");
    if (!(tessellationSpacing > 0)) throw ConfigError("tessellationSpacing must be positive");
    try {
        camera.validate();
        monitorA.validate();
        monitorB.validate();
        views.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (distance(monitorA.center(), monitorB.center()) < 1e-9) throw ConfigError("monitor positions must differ");
    if (views.silhouetteViews.size() < 3) throw ConfigError("need at least 3 silhouette views");
    if (views.correspondenceViews.empty()) throw ConfigError("need at least 1 correspondence view");
}

SceneConfig desk_scene() { return rig(256, 4, 24); }
SceneConfig full_scene() { return rig(512, 8, 72); }

SceneConfig load_scene_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scene config " + path.string());
    SceneConfig s = desk_scene();
    try {
        const json j = json::parse(in);
        if (j.contains("object")) {
            const json& o = j["object"];
            s.meshPath = o.value("mesh", s.meshPath);
            s.shape = o.value("shape", s.shape);
            s.tessellationSpacing = o.value("tessellationSpacing", s.tessellationSpacing);
        }
        s.ior = j.value("ior", s.ior);
        if (j.contains("camera")) {
            const json& c = j["camera"];
            s.camera.K.fx = c.value("fx", s.camera.K.fx);
            s.camera.K.fy = c.value("fy", s.camera.K.fy);
            s.camera.K.cx = c.value("cx", s.camera.K.cx);
            s.camera.K.cy = c.value("cy", s.camera.K.cy);
            s.camera.width = c.value("width", s.camera.width);
            s.camera.height = c.value("height", s.camera.height);
            if (c.contains("worldToCamera")) {
                const json& p = c["worldToCamera"];
                const json& r = p.at("rotation");
                s.camera.worldToCamera = {Mat3::from_rows(vec_from(r.at(0)), vec_from(r.at(1)), vec_from(r.at(2))),
                                          vec_from(p.at("translation"))};
            } else if (c.contains("position")) {
                s.camera.worldToCamera = look_at(vec_from(c["position"]), vec_from(c.value("lookAt", json::array({0, 0, 0}))),
                                                 vec_from(c.value("up", json::array({0, 1, 0}))));
            }
        }
        if (j.contains("monitors")) {
            const json& m = j["monitors"];
            if (!m.is_array() || m.size() != 2) throw ConfigError("monitors must list exactly two positions");
            MonitorPlane* dst[2] = {&s.monitorA, &s.monitorB};
            for (int i = 0; i < 2; ++i) {
                const auto res = m[i].value("resolution", std::vector<int>{1920, 1080});
                if (res.size() != 2) throw ConfigError("monitor resolution must have two entries");
                *dst[i] = make_monitor(vec_from(m[i].at("center")), vec_from(m[i].value("facing", json::array({0, 0, 1}))),
                                       res[0], res[1], m[i].value("pixelPitch", kMonitorPitch));
            }
        }
        if (j.contains("views")) {
            const json& v = j["views"];
            if (v.contains("correspondence")) s.views.correspondenceViews = angles_from(v["correspondence"]);
            if (v.contains("silhouette")) s.views.silhouetteViews = angles_from(v["silhouette"]);
            if (v.contains("axisOrigin")) s.views.rotationAxis.origin = vec_from(v["axisOrigin"]);
            if (v.contains("axisDirection")) s.views.rotationAxis.direction = normalized(vec_from(v["axisDirection"]));
        }
        if (j.contains("capture")) {
            s.capture.maxEvents = j["capture"].value("maxEvents", s.capture.maxEvents);
            s.capture.quantizeMonitor = j["capture"].value("quantizeMonitor", s.capture.quantizeMonitor);
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    s.validate();
    return s;
}

void save_scene_config(const std::filesystem::path& path, const SceneConfig& s) {
    nlohmann::ordered_json j;
    j["object"] = {{"mesh", s.meshPath}, {"shape", s.shape}, {"tessellationSpacing", s.tessellationSpacing}};
    j["ior"] = s.ior;
    const Mat3& r = s.camera.worldToCamera.rotation;
    j["camera"] = {{"fx", s.camera.K.fx},
                   {"fy", s.camera.K.fy},
                   {"cx", s.camera.K.cx},
                   {"cy", s.camera.K.cy},
                   {"width", s.camera.width},
                   {"height", s.camera.height},
                   {"worldToCamera",
                    {{"rotation", {vec_to(r.row(0)), vec_to(r.row(1)), vec_to(r.row(2))}},
                     {"translation", vec_to(s.camera.worldToCamera.translation)}}}};
    j["monitors"] = json::array();
    for (const MonitorPlane* m : {&s.monitorA, &s.monitorB})
        j["monitors"].push_back({{"center", vec_to(m->center())},
                                 {"facing", vec_to(m->normal())},
                                 {"resolution", {m->resX, m->resY}},
                                 {"pixelPitch", m->pixelPitch}});
    j["views"] = {{"correspondence", s.views.correspondenceViews},
                  {"silhouette", s.views.silhouetteViews},
                  {"axisOrigin", vec_to(s.views.rotationAxis.origin)},
                  {"axisDirection", vec_to(s.views.rotationAxis.direction)}};
    j["capture"] = {{"maxEvents", s.capture.maxEvents}, {"quantizeMonitor", s.capture.quantizeMonitor}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17) << j.dump(2) << '\n';
}

TriangleMesh scene_object(const SceneConfig& config, const std::filesystem::path& baseDir) {
    if (!config.meshPath.empty()) {
        std::filesystem::path p = config.meshPath;
        if (p.is_relative() && !baseDir.empty()) p = baseDir / p;
        TriangleMesh m = read_mesh(p);
        if (!m.has_normals()) m.compute_vertex_normals();
        return m;
    }
    if (config.shape == "sphere") return tessellate(SphereShape({0, 0, 0}, 4.0), config.tessellationSpacing);
    if (config.shape == "ellipsoid") return tessellate(kitten_scale_ellipsoid(), config.tessellationSpacing);
    return tessellate(default_dented_sphere(), config.tessellationSpacing);
}

Dataset simulate(const SceneConfig& config, const RefractiveSurface& object) {
    config.validate();
    Dataset d;
    d.scene = config;
    const Ray& axis = config.views.rotationAxis;
    for (std::size_t i = 0; i < config.views.silhouetteViews.size(); ++i) {
        const double rad = deg_to_rad(config.views.silhouetteViews[i]);
        d.silhouetteCameras.push_back(camera_for_view(config.camera, axis, rad));
        d.masks.push_back(render_silhouette(object, d.silhouetteCameras.back(), static_cast<int>(i)));
    }
    for (std::size_t i = 0; i < config.views.correspondenceViews.size(); ++i) {
        const double rad = deg_to_rad(config.views.correspondenceViews[i]);
        d.correspondenceCameras.push_back(camera_for_view(config.camera, axis, rad));
        d.correspondences.push_back(generate_correspondences(object, config.ior, config.camera, config.monitorA,
                                                             config.monitorB, axis, rad, static_cast<int>(i),
                                                             config.capture));
    }
    return d;
}

Dataset simulate(const SceneConfig& config, const TriangleMesh& object) {
    const MeshSurface surface(object);
    Dataset d = simulate(config, surface);
    d.groundTruth = object;
    return d;
}

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_pgm(const std::filesystem::path& path, const SilhouetteMask& mask) {
    std::vector<std::uint8_t> px(mask.bitmap.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.bitmap[i] ? 255 : 0;
    write_pgm(path, mask.width, mask.height, px);
}

SilhouetteMask read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError(path.string() + " is not a binary PGM");
    auto next_int = [&] {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
            in >> std::ws;
        }
        int v = 0;
        if (!(in >> v)) throw IoError("bad PGM header in " + path.string());
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw IoError("unsupported PGM in " + path.string());
    in.get();
    SilhouetteMask mask(w, h);
    std::vector<char> raw(static_cast<std::size_t>(w) * h);
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw IoError("truncated PGM " + path.string());
    for (std::size_t i = 0; i < raw.size(); ++i) mask.bitmap[i] = raw[i] != 0;
    mask.update_boundary();
    return mask;
}

void write_correspondences(const std::filesystem::path& path, const std::vector<RayRayCorrespondence>& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "u,v,exit_ox,exit_oy,exit_oz,exit_dx,exit_dy,exit_dz,inc_ox,inc_oy,inc_oz,inc_dx,inc_dy,inc_dz,"
           "refractions,tir,valid\n";
    out << std::setprecision(17);
    for (const RayRayCorrespondence& c : table) {
        out << c.pixel.u << ',' << c.pixel.v;
        for (const Vec3* v : {&c.exitRay.origin, &c.exitRay.direction, &c.incidentRay.origin, &c.incidentRay.direction})
            out << ',' << v->x << ',' << v->y << ',' << v->z;
        out << ',' << c.refractionCount << ',' << int(c.hadTotalInternalReflection) << ',' << int(c.valid) << '\n';
    }
}

std::vector<RayRayCorrespondence> read_correspondences(const std::filesystem::path& path, int viewIndex) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<RayRayCorrespondence> table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(std::strtod(cell.c_str(), nullptr));
        if (f.size() != 17) throw IoError("malformed correspondence row in " + path.string());
        RayRayCorrespondence c;
        c.viewIndex = viewIndex;
        c.pixel = {static_cast<int>(f[0]), static_cast<int>(f[1])};
        c.exitRay = {{f[2], f[3], f[4]}, {f[5], f[6], f[7]}};
        c.incidentRay = {{f[8], f[9], f[10]}, {f[11], f[12], f[13]}};
        c.refractionCount = static_cast<int>(f[14]);
        c.hadTotalInternalReflection = f[15] != 0;
        c.valid = f[16] != 0;
        table.push_back(c);
    }
    return table;
}

namespace {

std::string indexed(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, i, ext);
    return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir);
    // the ground truth travels as ground_truth.ply; the object description stays as given
    save_scene_config(dir / "scene.json", data.scene);
    for (std::size_t i = 0; i < data.masks.size(); ++i) write_pgm(dir / indexed("mask", i, "pgm"), data.masks[i]);
    for (std::size_t i = 0; i < data.correspondences.size(); ++i)
        write_correspondences(dir / indexed("corr", i, "csv"), data.correspondences[i]);
    if (data.groundTruth) write_ply(dir / "ground_truth.ply", *data.groundTruth);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset d;
    d.scene = load_scene_config(dir / "scene.json");
    const Ray& axis = d.scene.views.rotationAxis;
    for (std::size_t i = 0; i < d.scene.views.silhouetteViews.size(); ++i) {
        d.silhouetteCameras.push_back(camera_for_view(d.scene.camera, axis, deg_to_rad(d.scene.views.silhouetteViews[i])));
        SilhouetteMask m = read_pgm(dir / indexed("mask", i, "pgm"));
        m.viewIndex = static_cast<int>(i);
        d.masks.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < d.scene.views.correspondenceViews.size(); ++i) {
        d.correspondenceCameras.push_back(
            camera_for_view(d.scene.camera, axis, deg_to_rad(d.scene.views.correspondenceViews[i])));
        d.correspondences.push_back(read_correspondences(dir / indexed("corr", i, "csv"), static_cast<int>(i)));
    }
    if (std::filesystem::exists(dir / "ground_truth.ply")) d.groundTruth = read_ply(dir / "ground_truth.ply").mesh;
    return d;
}

}  // namespace refrakt
