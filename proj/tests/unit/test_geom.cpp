#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "refrakt/bvh.hpp"
#include "refrakt/errors.hpp"
#include "refrakt/geometry.hpp"
#include "refrakt/kdtree.hpp"
#include "refrakt/marching_cubes.hpp"
#include "refrakt/mesh_io.hpp"
#include "refrakt/shapes.hpp"

using namespace refrakt;

namespace {

std::vector<Vec3> random_points(int n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<Vec3> pts(n);
    for (Vec3& p : pts) p = {u(rng), u(rng), u(rng)};
    return pts;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("refrakt_test_" + name);
}

}  // namespace

TEST(Vec3, PoseRoundTrip) {
    const Pose p{Mat3::rotation({0.3, 1.0, -0.2}, 0.7), {1, 2, 3}};
    const Vec3 x{0.5, -1.5, 2.0};
    const Vec3 back = p.inverse().apply(p.apply(x));
    EXPECT_NEAR(distance(back, x), 0.0, 1e-12);
    EXPECT_LT(orthonormality_error(p.rotation), 1e-12);
}

TEST(Vec3, RotationAboutYQuarterTurn) {
    const Vec3 r = Mat3::rotation({0, 1, 0}, kPi / 2) * Vec3{1, 0, 0};
    EXPECT_NEAR(r.x, 0.0, 1e-12);
    EXPECT_NEAR(r.z, -1.0, 1e-12);
}

TEST(KdTree, KnnMatchesBruteForce) {
    const auto pts = random_points(2000, 3);
    const KdTree tree(pts);
    const auto queries = random_points(50, 4, 1.2);
    for (const Vec3& q : queries) {
        std::vector<Neighbor> brute;
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) brute.push_back({i, squared_distance(q, pts[i])});
        std::sort(brute.begin(), brute.end());
        const auto got = tree.knn(q, 15);
        ASSERT_EQ(got.size(), 15u);
        for (int i = 0; i < 15; ++i) {
            EXPECT_EQ(got[i].index, brute[i].index);
            EXPECT_DOUBLE_EQ(got[i].squaredDistance, brute[i].squaredDistance);
        }
        std::vector<int> inRadius;
        for (const auto& b : brute)
            if (b.squaredDistance <= 0.09) inRadius.push_back(b.index);
        std::sort(inRadius.begin(), inRadius.end());
        EXPECT_EQ(tree.radius_search(q, 0.3), inRadius);
    }
}

TEST(KdTree, ExcludeSkipsSelf) {
    const auto pts = random_points(100, 9);
    const KdTree tree(pts);
    const auto nn = tree.knn(pts[7], 3, 7);
    for (const auto& n : nn) EXPECT_NE(n.index, 7);
}

TEST(MarchingCubes, SphereIsClosedAndOutward) {
    const SphereShape sphere({0.1, -0.2, 0.05}, 1.0);
    const TriangleMesh m = tessellate(sphere, 0.05);
    EXPECT_TRUE(m.is_closed());
    EXPECT_TRUE(m.is_consistently_oriented());
    EXPECT_NEAR(m.signed_volume(), 4.0 / 3.0 * kPi, 0.01);
    double worst = 0.0;
    for (const Vec3& v : m.vertices) worst = std::max(worst, std::abs(sphere.value(v)));
    EXPECT_LT(worst, 2e-3);
    int agree = 0;
    for (int f = 0; f < static_cast<int>(m.faces.size()); ++f) {
        const Vec3 c = (m.vertices[m.faces[f][0]] + m.vertices[m.faces[f][1]] + m.vertices[m.faces[f][2]]) / 3.0;
        agree += dot(m.face_normal(f), sphere.normal(c)) > 0.0;
    }
    EXPECT_EQ(agree, static_cast<int>(m.faces.size()));
}

TEST(MarchingCubes, IsoOutsideRangeThrows) {
    ScalarGrid g({0, 0, 0}, 1.0, 3, 3, 3, 1.0);
    EXPECT_THROW(marching_cubes(g, 0.0), EmptyIsoSurface);
}

TEST(Shapes, PrimitivesAreOutward) {
    for (const TriangleMesh& m : {make_icosphere({0, 0, 0}, 2.0, 3), make_box({-1, -2, -3}, {1, 2, 3})}) {
        EXPECT_TRUE(m.is_consistently_oriented());
        EXPECT_GT(m.signed_volume(), 0.0);
    }
    EXPECT_NEAR(make_box({-1, -2, -3}, {1, 2, 3}).signed_volume(), 48.0, 1e-12);
}

TEST(Shapes, DentedSphereVolume) {
    // sphere minus the lens shared with the bite sphere
    const DentedSphereShape s = default_dented_sphere();
    const double R = s.radius(), r = s.dent_radius(), d = distance(s.center(), s.dent_center());
    const double lens = kPi * std::pow(R + r - d, 2) * (d * d + 2 * d * r - 3 * r * r + 2 * d * R + 6 * r * R - 3 * R * R) /
                        (12 * d);
    const TriangleMesh m = tessellate(s, 0.05);
    EXPECT_TRUE(m.is_consistently_oriented());
    EXPECT_NEAR(m.signed_volume(), 4.0 / 3.0 * kPi * R * R * R - lens, 0.2);
    EXPECT_TRUE(s.in_dent({d - r, 0, 0}, 1e-9));
    EXPECT_FALSE(s.in_dent({-R, 0, 0}, 1e-3));
}

TEST(Bvh, MatchesBruteForceIntersections) {
    const TriangleMesh m = tessellate(default_dented_sphere(), 0.2);
    const MeshBvh bvh(m);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 o{u(rng) * 8, u(rng) * 8, u(rng) * 8};
        const Vec3 target{u(rng) * 3, u(rng) * 3, u(rng) * 3};
        const Ray ray{o, normalized(target - o)};
        std::vector<MeshHit> brute;
        for (int f = 0; f < static_cast<int>(m.faces.size()); ++f)
            if (auto h = intersect_triangle(ray, m, f); h && h->t > kRayEpsilon) brute.push_back(*h);
        finalize_hits(brute);
        const auto got = bvh.intersect_all(ray);
        ASSERT_EQ(got.size(), brute.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i].t, brute[i].t, 1e-12);
        const auto first = bvh.first_hit(ray);
        ASSERT_EQ(first.has_value(), !brute.empty());
        if (first) EXPECT_NEAR(first->t, brute.front().t, 1e-12);
        EXPECT_EQ(bvh.any_hit(ray), !brute.empty());
    }
}

TEST(Bvh, ClosestPointAndContainment) {
    const TriangleMesh m = make_icosphere({0, 0, 0}, 1.0, 3);
    const MeshBvh bvh(m);
    for (const Vec3& p : random_points(100, 21, 2.0)) {
        double best = 1e300;
        for (const Face& f : m.faces)
            best = std::min(best, squared_distance(p, closest_point_on_triangle(p, m.vertices[f[0]], m.vertices[f[1]],
                                                                                 m.vertices[f[2]])));
        EXPECT_NEAR(bvh.closest_point(p).squaredDistance, best, 1e-12);
        if (std::abs(norm(p) - 1.0) > 0.02) EXPECT_EQ(bvh.contains(p), norm(p) < 1.0);
    }
}

TEST(Geometry, PcaNormalOfPlane) {
    std::vector<Vec3> pts;
    const Vec3 n = normalized({1, 2, 3});
    const Vec3 a = any_orthogonal(n), b = cross(n, a);
    for (const Vec3& r : random_points(30, 5)) pts.push_back(a * r.x + b * r.y + n * 1e-4 * r.z);
    const auto got = pca_normal(pts);
    ASSERT_TRUE(got);
    EXPECT_GT(std::abs(dot(*got, n)), 1.0 - 1e-6);
    std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_FALSE(pca_normal(line));
}

TEST(Geometry, EstimatedNormalsOnSphereAreOutward) {
    const SphereShape s({0, 0, 0}, 2.0);
    const PointCloud c = sample_surface_uniform(make_icosphere({0, 0, 0}, 2.0, 4), 3000, 2);
    const KdTree tree(c.points);
    const auto normals = estimate_normals_pca(c, tree, 20);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_GT(dot(normals[i], s.normal(c.points[i])), 0.99);
}

TEST(Geometry, PoissonDiskHitsTargetAndSpacing) {
    const TriangleMesh m = make_icosphere({0, 0, 0}, 4.0, 4);
    const auto s = poisson_disk_sample(m, 2000, 3);
    EXPECT_NEAR(static_cast<double>(s.cloud.size()), 2000.0, 2000.0 * 0.05);
    const KdTree tree(s.cloud.points);
    for (std::size_t i = 0; i < s.cloud.size(); ++i)
        EXPECT_GE(std::sqrt(tree.knn(s.cloud.points[i], 1, static_cast<int>(i))[0].squaredDistance),
                  s.minDistance * (1 - 1e-9));
    const auto again = poisson_disk_sample(m, 2000, 3);
    EXPECT_EQ(again.cloud.points, s.cloud.points);
}

TEST(Geometry, HausdorffOfConcentricSpheres) {
    const TriangleMesh a = make_icosphere({0, 0, 0}, 1.0, 4);
    const TriangleMesh b = make_icosphere({0, 0, 0}, 1.1, 4);
    const auto h = hausdorff(a, b, 5000);
    EXPECT_NEAR(h.meanDist, 0.1, 0.005);
    EXPECT_NEAR(h.maxDist, 0.1, 0.01);
    EXPECT_EQ(h.perVertexDist.size(), a.vertices.size());
}

TEST(Mesh, LargestComponentKeepsBiggerPiece) {
    TriangleMesh big = make_icosphere({0, 0, 0}, 1.0, 2);
    const TriangleMesh small = make_icosphere({5, 0, 0}, 0.2, 0);
    const int offset = static_cast<int>(big.vertices.size());
    big.vertices.insert(big.vertices.end(), small.vertices.begin(), small.vertices.end());
    for (Face f : small.faces) big.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    big.vertexNormals.clear();
    const TriangleMesh kept = largest_component(big);
    EXPECT_EQ(kept.faces.size(), make_icosphere({0, 0, 0}, 1.0, 2).faces.size());
}

TEST(MeshIo, PlyAndObjRoundTrip) {
    const TriangleMesh m = make_icosphere({0, 0, 0}, 1.5, 2);
    std::vector<double> q(m.vertices.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.25 * static_cast<double>(i);
    const auto ply = temp_file("rt.ply");
    write_ply(ply, m, q);
    const PlyData back = read_ply(ply);
    ASSERT_EQ(back.mesh.faces, m.faces);
    ASSERT_EQ(back.quality.size(), q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_NEAR(distance(back.mesh.vertices[i], m.vertices[i]), 0.0, 1e-6);
        EXPECT_FLOAT_EQ(back.quality[i], q[i]);
    }
    const auto obj = temp_file("rt.obj");
    write_obj(obj, m);
    const TriangleMesh o = read_obj(obj);
    EXPECT_EQ(o.faces, m.faces);
    EXPECT_EQ(o.vertexNormals.size(), m.vertices.size());
    std::filesystem::remove(ply);
    std::filesystem::remove(obj);
    EXPECT_THROW(read_ply(temp_file("missing.ply")), IoError);
}
