#include <gtest/gtest.h>

#include <cmath>

#include "refrakt/bvh.hpp"
#include "refrakt/errors.hpp"
#include "refrakt/geometry.hpp"
#include "refrakt/shapes.hpp"
#include "refrakt/surfacer.hpp"

using namespace refrakt;

namespace {

PointCloud oriented_samples(const TriangleMesh& mesh, int count) {
    return poisson_disk_sample(mesh, count, 5).cloud;
}

}  // namespace

TEST(Surfacer, SphereSamplesGiveAClosedSphere) {
    const PointCloud cloud = oriented_samples(make_icosphere({0, 0, 0}, 4.0, 6), 10000);
    const TriangleMesh mesh = reconstruct_mesh(cloud, 96);
    EXPECT_TRUE(mesh.is_closed());
    EXPECT_TRUE(mesh.is_consistently_oriented());
    EXPECT_GT(mesh.signed_volume(), 0.0);
    double err = 0.0;
    for (const Vec3& v : mesh.vertices) err += std::abs(norm(v) - 4.0);
    err /= static_cast<double>(mesh.vertices.size());
    std::printf("mean radial error %.4f mm\n", err);
    EXPECT_LT(err, 0.01 * 4.0);

    // input points stay close to the surface
    const MeshBvh bvh(mesh);
    double d = 0.0;
    for (const Vec3& p : cloud.points) d += std::sqrt(bvh.closest_point(p).squaredDistance);
    EXPECT_LT(d / static_cast<double>(cloud.size()), 2.0 * mean_spacing(cloud.points));
}

TEST(Surfacer, KeepsTheDent) {
    const DentedSphereShape shape = default_dented_sphere();
    const TriangleMesh truth = tessellate(shape, 0.05);
    const PointCloud cloud = oriented_samples(truth, 10000);
    const double spacing = mean_spacing(cloud.points);
    const TriangleMesh mesh = reconstruct_mesh(cloud, 96);
    EXPECT_TRUE(mesh.is_closed());
    const MeshBvh bvh(truth);
    double worst = 0.0;
    int inDent = 0;
    for (const Vec3& v : mesh.vertices) {
        const ClosestPoint c = bvh.closest_point(v);
        if (!shape.in_dent(c.point, 1e-3)) continue;
        ++inDent;
        worst = std::max(worst, std::sqrt(c.squaredDistance));
    }
    ASSERT_GT(inDent, 100);
    std::printf("dent max deviation %.4f mm, spacing %.4f mm\n", worst, spacing);
    EXPECT_LT(worst, 3.0 * spacing);
}

TEST(Surfacer, TooFewPointsThrow) {
    PointCloud cloud;
    for (int i = 0; i < 50; ++i) {
        const double z = -1.0 + (i + 0.5) / 25.0, a = 2.4 * i, r = std::sqrt(1 - z * z);
        cloud.points.push_back({r * std::cos(a), r * std::sin(a), z});
        cloud.normals.push_back(cloud.points.back());
    }
    EXPECT_THROW(reconstruct_mesh(cloud, 32), InsufficientPoints);
}

TEST(Surfacer, FlippedNormalsThrow) {
    PointCloud cloud = oriented_samples(make_icosphere({0, 0, 0}, 4.0, 5), 2000);
    EXPECT_NO_THROW(check_oriented_cloud(cloud));
    for (std::size_t i = 0; i < cloud.size(); i += 3) cloud.normals[i] = -cloud.normals[i];
    EXPECT_THROW(reconstruct_mesh(cloud, 32), InconsistentNormals);
}
