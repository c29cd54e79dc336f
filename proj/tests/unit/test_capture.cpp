#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "refrakt/capture.hpp"
#include "refrakt/errors.hpp"
#include "refrakt/scene.hpp"

using namespace refrakt;

namespace {

// Deviation of a ray through a homogeneous ball: each interface turns the ray by
// theta_i - theta_t toward the center, so the total turn is 2 (theta_i - theta_t).
Vec3 ball_exit_direction(const Ray& ray, const Vec3& center, double radius, double ior) {
    const Vec3 oc = center - ray.origin;
    const Vec3 toAxis = oc - ray.direction * dot(oc, ray.direction);  // from the ray toward the center line
    const double b = norm(toAxis);
    const double ti = std::asin(b / radius);
    const double tt = std::asin(std::sin(ti) / ior);
    const double turn = 2.0 * (ti - tt);
    return ray.direction * std::cos(turn) + normalized(toAxis) * std::sin(turn);
}

Camera test_camera() {
    Camera c;
    c.width = c.height = 128;
    c.K = {640, 640, 64, 64};
    c.worldToCamera = look_at({0, 0, 60}, {0, 0, 0}, {0, 1, 0});
    return c;
}

}  // namespace

TEST(Snell, NormalIncidenceIsUnchanged) {
    const Vec3 n{0, 0, 1};
    const auto t = snell_refract({0, 0, -1}, n, 1.0 / 1.5);
    ASSERT_TRUE(t);
    EXPECT_NEAR(distance(*t, Vec3{0, 0, -1}), 0.0, 1e-15);
}

TEST(Snell, FortyFiveDegreesMatchesClosedForm) {
    const double ti = kPi / 4;
    const Vec3 d{std::sin(ti), 0, -std::cos(ti)};
    const auto t = snell_refract(d, {0, 0, 1}, 1.0 / 1.5);
    ASSERT_TRUE(t);
    const double expected = std::asin(std::sin(ti) / 1.5);
    EXPECT_NEAR(std::atan2(t->x, -t->z), expected, 1e-12);
    EXPECT_NEAR(t->y, 0.0, 1e-15);
}

TEST(Snell, TotalInternalReflectionPastCriticalAngle) {
    const double ti = deg_to_rad(60);
    EXPECT_FALSE(snell_refract({std::sin(ti), 0, -std::cos(ti)}, {0, 0, 1}, 1.5));
    const double below = std::asin(1 / 1.5) - 1e-3;
    EXPECT_TRUE(snell_refract({std::sin(below), 0, -std::cos(below)}, {0, 0, 1}, 1.5));
}

TEST(Snell, NormalFromFlatInterface) {
    const double ti = deg_to_rad(30);
    const Vec3 d{std::sin(ti), 0, -std::cos(ti)};
    const double tt = std::asin(std::sin(ti) / 1.5);
    const Vec3 out{std::sin(tt), 0, -std::cos(tt)};
    const Vec3 n = snell_normal(d, out, 1.0, 1.5);
    EXPECT_NEAR(distance(n, Vec3{0, 0, 1}), 0.0, 1e-12);
    EXPECT_NEAR(distance(snell_normal(d, d, 1.0, 1.5), -d), 0.0, 1e-15);
}

TEST(Snell, NormalRoundTripRandom) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    int checked = 0;
    for (int i = 0; i < 20000; ++i) {
        const Vec3 n = normalized({g(rng), g(rng), g(rng)});
        Vec3 d = normalized({g(rng), g(rng), g(rng)});
        if (dot(d, n) > 0) d = -d;
        if (dot(d, n) > -1e-3) continue;
        const double eta = (i % 2) ? 1.0 / 1.4723 : 1.4723;
        const auto t = snell_refract(d, n, eta);
        if (!t) continue;
        const Vec3 got = snell_normal(d, *t, eta, 1.0);
        EXPECT_LT(angle_between(got, n), 1e-9);
        ++checked;
    }
    EXPECT_GT(checked, 10000);
}

TEST(Snell, InfeasiblePairThrows) {
    // entering glass of index 1.5 turns a ray by at most 90 - asin(1/1.5) = 48.2 degrees
    const Vec3 d{0, 0, -1};
    const Vec3 out{std::sin(deg_to_rad(60)), 0, -std::cos(deg_to_rad(60))};
    EXPECT_THROW(snell_normal(d, out, 1.0, 1.5), NoValidNormal);
}

TEST(Tracer, MissLeavesRayUntouched) {
    const SphereSurface s({0, 0, 0}, 1.0);
    const Ray r{{5, 5, 5}, normalized({1, 0, 0})};
    const TracedPath p = trace_refractive_path(r, s, 1.5);
    EXPECT_EQ(p.refractionCount, 0);
    EXPECT_EQ(p.exitRay.direction, r.direction);
}

TEST(Tracer, AnalyticSphereMatchesClosedForm) {
    const Vec3 c{0.3, -0.2, 0.1};
    const double R = 2.0;
    const SphereSurface s(c, R);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 o = c + Vec3{u(rng) * 1.9, u(rng) * 1.9, 20.0};
        const Ray r{o, {0, 0, -1}};
        if (norm(Vec3{o.x - c.x, o.y - c.y, 0}) >= R) continue;
        for (double ior : {1.15, 1.5}) {
            const TracedPath p = trace_refractive_path(r, s, ior);
            ASSERT_EQ(p.refractionCount, 2);
            EXPECT_LT(angle_between(p.exitRay.direction, ball_exit_direction(r, c, R, ior)), 1e-6);
        }
    }
}

TEST(Tracer, MeshSphereHitsLieOnSurfaceAndAreReciprocal) {
    const TriangleMesh m = make_icosphere({0, 0, 0}, 2.0, 4);
    const MeshSurface s(m);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.9, 1.9);
    for (int i = 0; i < 300; ++i) {
        const Ray r{{u(rng), u(rng), 20.0}, {0, 0, -1}};
        const TracedPath p = trace_refractive_path(r, s, 1.15);
        if (p.refractionCount != 2) continue;
        for (const Vec3& h : p.surfaceHits) EXPECT_LT(std::sqrt(s.bvh().closest_point(h).squaredDistance), 1e-6);
        // run the exit ray backwards from far away
        const Ray back{p.exitRay.at(50.0), -p.exitRay.direction};
        const TracedPath q = trace_refractive_path(back, s, 1.15);
        ASSERT_EQ(q.refractionCount, 2);
        EXPECT_LT(angle_between(q.exitRay.direction, -r.direction), 1e-6);
    }
}

TEST(Tracer, ConvexObjectAtLowIorRefractsTwice) {
    const MeshSurface s(tessellate(SphereShape({0, 0, 0}, 3.0), 0.1));
    const Camera cam = test_camera();
    int hits = 0;
    for (int v = 0; v < cam.height; v += 3)
        for (int u = 0; u < cam.width; u += 3) {
            const TracedPath p = trace_refractive_path(cam.pixel_ray(u, v), s, 1.15);
            if (p.refractionCount == 0) continue;
            ++hits;
            EXPECT_EQ(p.refractionCount, 2);
            EXPECT_FALSE(p.hadTotalInternalReflection);
        }
    EXPECT_GT(hits, 100);
}

TEST(Capture, SilhouetteOfSphereIsProjectedDisk) {
    const Camera cam = test_camera();
    const double rho = 3.0, D = 60.0;
    const SphereSurface s({0, 0, 0}, rho);
    const SilhouetteMask m = render_silhouette(s, cam, 0);
    const double r = cam.K.fx * rho / std::sqrt(D * D - rho * rho);
    for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u) {
            const double dist = std::hypot(u + 0.5 - cam.K.cx, v + 0.5 - cam.K.cy);
            if (dist < r - 1) EXPECT_TRUE(m.on(u, v));
            if (dist > r + 1) EXPECT_FALSE(m.on(u, v));
        }
    for (const PixelCoord& p : m.boundaryPixels) {
        EXPECT_TRUE(m.on(p.u, p.v));
        EXPECT_NEAR(std::hypot(p.u + 0.5 - cam.K.cx, p.v + 0.5 - cam.K.cy), r, 1.5);
    }
    const SphereSurface away({100, 0, 0}, 1.0);
    EXPECT_EQ(render_silhouette(away, cam, 0).count_on(), 0u);
}

TEST(Capture, BoundaryIsOnPixelsWithOffNeighbor) {
    SilhouetteMask m(5, 4);
    for (int v = 0; v < 4; ++v)
        for (int u = 1; u < 4; ++u) m.set(u, v, true);
    m.update_boundary();
    // interior column u=2, rows 1..2 are not boundary; the image edge counts as OFF
    EXPECT_EQ(m.boundaryPixels.size(), 10u);
}

TEST(Capture, EmptySceneGivesCollinearRays) {
    SceneConfig scene = desk_scene();
    const SphereSurface far({0, 1000, 0}, 1.0);
    const auto table = generate_correspondences(far, 1.15, scene.camera, scene.monitorA, scene.monitorB,
                                                scene.views.rotationAxis, deg_to_rad(30), 0);
    EXPECT_FALSE(table.empty());
    for (const auto& c : table) {
        EXPECT_EQ(c.refractionCount, 0);
        EXPECT_LT(angle_between(c.incidentRay.direction, -c.exitRay.direction), 1e-9);
        // the incident line passes through the camera center
        const Vec3 w = c.exitRay.origin - c.incidentRay.origin;
        EXPECT_LT(norm(w - c.incidentRay.direction * dot(w, c.incidentRay.direction)), 1e-9);
    }
}

TEST(Capture, CorrespondencesAgreeWithTracer) {
    const SceneConfig scene = desk_scene();
    const SphereSurface s({0, 0, 0}, 4.0);
    const double angle = deg_to_rad(45);
    const auto table = generate_correspondences(s, 1.15, scene.camera, scene.monitorA, scene.monitorB,
                                                scene.views.rotationAxis, angle, 2);
    const MonitorPlane a = scene.monitorA.in_object_frame(scene.views.rotationAxis, angle);
    const MonitorPlane b = scene.monitorB.in_object_frame(scene.views.rotationAxis, angle);
    int valid = 0;
    for (const auto& c : table) {
        if (!c.valid || c.refractionCount == 0) continue;
        ++valid;
        const TracedPath p = trace_refractive_path(c.exitRay, s, 1.15);
        for (const MonitorPlane* m : {&a, &b}) {
            const Vec3 q = p.exitRay.at(*m->intersect(p.exitRay));
            const Vec3 w = q - c.incidentRay.origin;
            EXPECT_LT(norm(w - c.incidentRay.direction * dot(w, c.incidentRay.direction)), 1e-6);
        }
        // bending implied by the pair equals the traced bending
        EXPECT_NEAR(angle_between(c.exitRay.direction, -c.incidentRay.direction),
                    angle_between(c.exitRay.direction, p.exitRay.direction), 1e-9);
    }
    EXPECT_GT(valid, 1000);
}

TEST(GrayCode, ExhaustiveElevenBits) {
    std::vector<std::uint8_t> prev;
    for (int v = 0; v < 2048; ++v) {
        const auto code = gray_encode(v, 11);
        ASSERT_EQ(gray_decode(code), v);
        if (v > 0) {
            int diff = 0;
            for (int i = 0; i < 11; ++i) diff += code[i] != prev[i];
            EXPECT_EQ(diff, 1);
        }
        prev = code;
    }
    for (auto b : gray_encode(0, 11)) EXPECT_EQ(b, 0);
    EXPECT_GE(1 << 11, 1920);
    EXPECT_THROW(gray_encode(2048, 11), InvalidArgument);
    EXPECT_THROW(gray_encode(-1, 11), InvalidArgument);
}

TEST(Scene, ConfigAndDatasetRoundTrip) {
    SceneConfig scene = desk_scene();
    scene.camera.width = scene.camera.height = 64;
    scene.camera.K = {320, 320, 32, 32};
    scene.views.silhouetteViews = even_angles(4);
    scene.views.correspondenceViews = even_angles(2);
    scene.tessellationSpacing = 0.2;
    const Dataset d = simulate(scene, scene_object(scene));
    const auto dir = std::filesystem::temp_directory_path() / "refrakt_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(dir, d);
    const Dataset e = load_dataset(dir);
    ASSERT_EQ(e.masks.size(), d.masks.size());
    for (std::size_t i = 0; i < d.masks.size(); ++i) EXPECT_EQ(e.masks[i].bitmap, d.masks[i].bitmap);
    ASSERT_EQ(e.correspondences.size(), d.correspondences.size());
    for (std::size_t i = 0; i < d.correspondences.size(); ++i) {
        ASSERT_EQ(e.correspondences[i].size(), d.correspondences[i].size());
        for (std::size_t k = 0; k < d.correspondences[i].size(); ++k) {
            EXPECT_EQ(e.correspondences[i][k].incidentRay.origin, d.correspondences[i][k].incidentRay.origin);
            EXPECT_EQ(e.correspondences[i][k].valid, d.correspondences[i][k].valid);
        }
    }
    for (std::size_t i = 0; i < d.silhouetteCameras.size(); ++i)
        EXPECT_NEAR(distance(e.silhouetteCameras[i].center(), d.silhouetteCameras[i].center()), 0.0, 1e-9);
    EXPECT_TRUE(e.groundTruth.has_value());
    std::filesystem::remove_all(dir);
}

TEST(Scene, BadConfigThrows) {
    const auto p = std::filesystem::temp_directory_path() / "refrakt_test_bad.json";
    {
        std::ofstream out(p);
        out << "{\"ior\": 0.9}";
    }
    EXPECT_THROW(load_scene_config(p), ConfigError);
    {
        std::ofstream out(p);
        out << "{not json";
    }
    EXPECT_THROW(load_scene_config(p), ConfigError);
    std::filesystem::remove(p);
}
