#include "refrakt/surfacer.hpp"

#include <cmath>
#include <string>

#include "refrakt/errors.hpp"
#include "refrakt/geometry.hpp"
#include "refrakt/kdtree.hpp"

namespace refrakt {

void check_oriented_cloud(const PointCloud& cloud, int k, double maxFlipped) {
    if (cloud.size() < kMinSurfacePoints)
        throw InsufficientPoints("surface reconstruction needs at least " + std::to_string(kMinSurfacePoints) +
                                 " points, got " + std::to_string(cloud.size()));
    if (cloud.normals.size() != cloud.size()) throw InvalidArgument("surface reconstruction needs normals");
    const AdjacencyLists graph = knn_graph(cloud.points, k);
    std::size_t pairs = 0, flipped = 0;
    for (std::size_t i = 0; i < graph.size(); ++i)
        for (int j : graph[i]) {
            ++pairs;
            flipped += dot(cloud.normals[i], cloud.normals[j]) < 0.0;
        }
    if (pairs > 0 && static_cast<double>(flipped) > maxFlipped * static_cast<double>(pairs))
        throw InconsistentNormals(std::to_string(flipped) + " of " + std::to_string(pairs) +
                                  " neighbor pairs have opposing normals");
}

ScalarGrid ImlsSurfacer::field(const PointCloud& cloud, int gridResolution) const {
    if (gridResolution < 4) throw InvalidArgument("grid resolution must be at least 4");
    const KdTree tree(cloud.points);
    const double sigma = options_.sigmaScale * mean_spacing(cloud.points);
    if (!(sigma > 0.0)) throw InsufficientPoints("point set has no extent");
    const Aabb box = cloud.bounds();
    const Vec3 ext = box.hi - box.lo;
    const double h = std::max({ext.x, ext.y, ext.z}) / gridResolution;
    // two cells of air on every side keep the boundary nodes outside
    const int pad = 2;
    const Vec3 origin = box.lo - Vec3{1, 1, 1} * (pad * h);
    auto cells = [&](double e) { return static_cast<int>(std::ceil(e / h)) + 2 * pad + 1; };
    ScalarGrid grid(origin, h, cells(ext.x), cells(ext.y), cells(ext.z));
    const double inv = 1.0 / (sigma * sigma);
    const int k = options_.neighbors;
    grid.sample([&](const Vec3& x) {
        const std::vector<Neighbor> nb = tree.knn(x, k);
        // weights relative to the nearest sample so far nodes do not underflow
        const double d0 = nb.front().squaredDistance;
        double num = 0.0, den = 0.0;
        for (const Neighbor& n : nb) {
            const double w = std::exp(-(n.squaredDistance - d0) * inv);
            num += w * dot(x - cloud.points[n.index], cloud.normals[n.index]);
            den += w;
        }
        return num / den;
    });
    return grid;
}

TriangleMesh ImlsSurfacer::reconstruct(const PointCloud& cloud, int gridResolution) const {
    check_oriented_cloud(cloud, options_.normalCheckK, options_.maxFlippedPairs);
    TriangleMesh mesh = largest_component(marching_cubes(field(cloud, gridResolution), 0.0));
    mesh.compute_vertex_normals();
    return mesh;
}

TriangleMesh reconstruct_mesh(const PointCloud& cloud, int gridResolution) {
    return ImlsSurfacer().reconstruct(cloud, gridResolution);
}

}  // namespace refrakt
