#include <gtest/gtest.h>

#include <cmath>

#include "refrakt/errors.hpp"
#include "refrakt/scene.hpp"
#include "refrakt/visual_hull.hpp"

using namespace refrakt;

namespace {

struct Views {
    std::vector<Camera> cameras;
    std::vector<SilhouetteMask> masks;
};

Views render_views(const RefractiveSurface& object, int count, int imageSize = 128) {
    SceneConfig scene = desk_scene();
    scene.camera.width = scene.camera.height = imageSize;
    scene.camera.K = {5.0 * imageSize, 5.0 * imageSize, 0.5 * imageSize, 0.5 * imageSize};
    Views v;
    for (double a : even_angles(count)) {
        v.cameras.push_back(camera_for_view(scene.camera, scene.views.rotationAxis, deg_to_rad(a)));
        v.masks.push_back(render_silhouette(object, v.cameras.back(), static_cast<int>(v.masks.size())));
    }
    return v;
}

const Aabb kBounds{{-5, -5, -5}, {5, 5, 5}};

}  // namespace

TEST(VisualHull, SphereHullContainsSphere) {
    const SphereSurface s({0, 0, 0}, 3.0);
    const Views v = render_views(s, 24);
    const VoxelGrid g = carve(v.masks, v.cameras, kBounds, 64);
    const TriangleMesh truth = make_icosphere({0, 0, 0}, 3.0, 3);
    for (const Vec3& p : truth.vertices) EXPECT_LE(g.distance_to_occupied(p), g.spacing);
    EXPECT_GT(g.volume(), 4.0 / 3.0 * kPi * 27 * 0.95);
}

TEST(VisualHull, VolumeNonIncreasingWithViews) {
    const MeshSurface s(tessellate(default_dented_sphere(), 0.15));
    double prev = 1e300;
    for (int n : {8, 24, 72}) {
        const Views v = render_views(s, n);
        const double vol = carve(v.masks, v.cameras, kBounds, 64).volume();
        EXPECT_LE(vol, prev);
        prev = vol;
    }
}

TEST(VisualHull, AllOnMasksKeepTheFrustum) {
    Views v = render_views(SphereSurface({0, 0, 0}, 3.0), 3);
    for (auto& m : v.masks) std::fill(m.bitmap.begin(), m.bitmap.end(), 1);
    const VoxelGrid g = carve(v.masks, v.cameras, {{-1, -1, -1}, {1, 1, 1}}, 16);
    EXPECT_EQ(g.count_on(), g.occupancy.size());
}

TEST(VisualHull, ErrorsOnBadInput) {
    const Views v = render_views(SphereSurface({0, 0, 0}, 3.0), 3);
    EXPECT_THROW(carve(std::span(v.masks).first(2), std::span(v.cameras).first(2), kBounds, 16), InvalidArgument);
    EXPECT_THROW(carve(v.masks, v.cameras, {{20, 20, 20}, {21, 21, 21}}, 8), EmptyHull);
}

TEST(VisualHull, MeshOfCarvedSphere) {
    const SphereSurface s({0, 0, 0}, 3.0);
    const Views v = render_views(s, 24, 256);
    const VoxelGrid g = carve(v.masks, v.cameras, kBounds, 128);
    const TriangleMesh m = hull_mesh(g, 2);
    EXPECT_TRUE(m.is_closed());
    EXPECT_TRUE(m.is_consistently_oriented());
    double err = 0;
    for (const Vec3& p : m.vertices) err += std::abs(norm(p) - 3.0);
    EXPECT_LT(err / m.vertices.size(), 2 * g.spacing);
}

TEST(VisualHull, SingleVoxelGivesClosedMesh) {
    VoxelGrid g;
    g.origin = {0, 0, 0};
    g.spacing = 1.0;
    g.nx = g.ny = g.nz = 3;
    g.occupancy.assign(27, 0);
    g.occupancy[g.index(1, 1, 1)] = 1;
    const TriangleMesh m = hull_mesh(g, 0);
    EXPECT_TRUE(m.is_closed());
    EXPECT_GT(m.signed_volume(), 0.0);
}

TEST(VisualHull, FigurineScaleBoundingBox) {
    const MeshSurface s(tessellate(kitten_scale_ellipsoid(), 0.1));
    const Views v = render_views(s, 72, 256);
    const Aabb bounds = carving_bounds(v.masks, v.cameras, {0, 0, 0});
    const TriangleMesh m = hull_mesh(carve(v.masks, v.cameras, bounds, 128));
    const Vec3 got = m.bounds().extent();
    const Vec3 want{6.3, 9.7, 5.7};
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(got[a], want[a], 0.05 * want[a]);
}
