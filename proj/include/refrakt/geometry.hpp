#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "refrakt/kdtree.hpp"
#include "refrakt/mesh.hpp"
#include "refrakt/point_cloud.hpp"

namespace refrakt {

/// Unit normals by local PCA: eigenvector of the smallest covariance eigenvalue over the
/// `neighborCount` nearest points (the point itself included).
///
/// Each normal is flipped so that dot(normal, viewDirections[i]) < 0, i.e. it faces back
/// along the ray that observed the point. Without view directions normals point away from
/// the cloud centroid. Throws DegenerateNeighborhood for rank-deficient neighborhoods.
std::vector<Vec3> estimate_normals_pca(const PointCloud& cloud, const KdTree& index, int neighborCount,
                                       std::span<const Vec3> viewDirections = {});

/// Smallest-eigenvalue eigenvector of the covariance of `pts`; nullopt if rank < 2.
std::optional<Vec3> pca_normal(std::span<const Vec3> pts);

struct PoissonDiskSamples {
    PointCloud cloud;          // points with the source face normals
    std::vector<int> faces;    // source face per point
    double meanSpacing = 0.0;  // mean nearest-neighbor distance
    double minDistance = 0.0;  // the disk radius used for rejection
};

/// Dart-throwing Poisson-disk sampling with the disk radius tuned so the count lands near
/// `targetCount`. Deterministic for a given seed.
PoissonDiskSamples poisson_disk_sample(const TriangleMesh& mesh, int targetCount, std::uint64_t seed = 1);

/// Area-uniform random surface samples.
PointCloud sample_surface_uniform(const TriangleMesh& mesh, int count, std::uint64_t seed);

using AdjacencyLists = std::vector<std::vector<int>>;

/// k nearest neighbors of every point (self excluded), ordered by distance then index.
AdjacencyLists knn_graph(std::span<const Vec3> points, int k);

struct HausdorffResult {
    double meanDist = 0.0;
    double maxDist = 0.0;
    std::vector<double> perVertexDist;  // per vertex of the first mesh
};

/// Symmetric sampled surface distance between two meshes.
HausdorffResult hausdorff(const TriangleMesh& meshA, const TriangleMesh& meshB, int sampleCount,
                          std::uint64_t seed = 7);

/// Mean nearest-neighbor distance of a point set.
double mean_spacing(std::span<const Vec3> points);

}  // namespace refrakt
