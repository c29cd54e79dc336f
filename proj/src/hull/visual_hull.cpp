#include "refrakt/visual_hull.hpp"

#include <cmath>

#include "refrakt/errors.hpp"

namespace refrakt {

std::size_t VoxelGrid::count_on() const {
    std::size_t n = 0;
    for (auto o : occupancy) n += o != 0;
    return n;
}

double VoxelGrid::distance_to_occupied(const Vec3& p) const {
    const Vec3 rel = (p - origin) / spacing;
    const int ci = static_cast<int>(std::floor(rel.x)), cj = static_cast<int>(std::floor(rel.y)),
              ck = static_cast<int>(std::floor(rel.z));
    if (on(ci, cj, ck)) return 0.0;
    double best = 1e300;
    // grow the search shell until it cannot contain anything closer
    for (int r = 1; r <= std::max({nx, ny, nz}); ++r) {
        for (int k = ck - r; k <= ck + r; ++k)
            for (int j = cj - r; j <= cj + r; ++j)
                for (int i = ci - r; i <= ci + r; ++i) {
                    if (std::max({std::abs(i - ci), std::abs(j - cj), std::abs(k - ck)}) != r || !on(i, j, k)) continue;
                    const Aabb box{origin + Vec3{double(i), double(j), double(k)} * spacing,
                                   origin + Vec3{i + 1.0, j + 1.0, k + 1.0} * spacing};
                    best = std::min(best, std::sqrt(box.squared_distance_to(p)));
                }
        if (best <= r * spacing) break;
    }
    return best;
}

VoxelGrid carve(std::span<const SilhouetteMask> masks, std::span<const Camera> cameras, const Aabb& bounds,
                int resolution) {
    if (masks.size() != cameras.size()) throw InvalidArgument("one camera per mask required");
    if (masks.size() < 3) throw InvalidArgument("space carving needs at least 3 views");
    if (resolution < 2) throw InvalidArgument("carving resolution must be at least 2");
    if (bounds.empty()) throw InvalidArgument("empty carving bounds");
    const Vec3 ext = bounds.extent();
    VoxelGrid g;
    g.origin = bounds.lo;
    g.spacing = std::max({ext.x, ext.y, ext.z}) / resolution;
    g.nx = std::max(2, static_cast<int>(std::ceil(ext.x / g.spacing - 1e-9)));
    g.ny = std::max(2, static_cast<int>(std::ceil(ext.y / g.spacing - 1e-9)));
    g.nz = std::max(2, static_cast<int>(std::ceil(ext.z / g.spacing - 1e-9)));
    g.occupancy.assign(static_cast<std::size_t>(g.nx) * g.ny * g.nz, 1);

#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Vec3 c = g.voxel_center(i, j, k);
                for (std::size_t v = 0; v < masks.size(); ++v) {
                    const auto uv = cameras[v].project(c);
                    if (!uv || !masks[v].on(static_cast<int>(std::floor(uv->x)), static_cast<int>(std::floor(uv->y)))) {
                        g.occupancy[g.index(i, j, k)] = 0;
                        break;
                    }
                }
            }
    if (g.count_on() == 0) throw EmptyHull("every voxel was carved away; check calibration and bounds");
    return g;
}

TriangleMesh hull_mesh(const VoxelGrid& grid, int smoothingPasses) {
    if (grid.count_on() == 0) throw EmptyIsoSurface("grid has no occupied voxel");
    // nodes at voxel centers plus one empty layer all around so the surface closes
    ScalarGrid field(grid.origin - Vec3{0.5, 0.5, 0.5} * grid.spacing, grid.spacing, grid.nx + 2, grid.ny + 2,
                     grid.nz + 2, 1.0);
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (grid.on(i, j, k)) field.at(i + 1, j + 1, k + 1) = -1.0;
    TriangleMesh mesh = marching_cubes(field, 0.0);
    if (smoothingPasses > 0) laplacian_smooth(mesh, smoothingPasses);
    return mesh;
}

Aabb carving_bounds(std::span<const SilhouetteMask> masks, std::span<const Camera> cameras, const Vec3& axisOrigin,
                    double margin) {
    double half = 0.0;
    for (std::size_t v = 0; v < masks.size(); ++v) {
        const Camera& cam = cameras[v];
        const double depth = cam.worldToCamera.apply(axisOrigin).z;
        for (const PixelCoord& p : masks[v].boundaryPixels) {
            for (double du : {0.0, 1.0})
                for (double dv : {0.0, 1.0}) {
                    half = std::max(half, std::abs(p.u + du - cam.K.cx) / cam.K.fx * depth);
                    half = std::max(half, std::abs(p.v + dv - cam.K.cy) / cam.K.fy * depth);
                }
        }
    }
    if (half == 0.0) throw EmptyHull("masks are empty");
    half *= margin;
    return {axisOrigin - Vec3{half, half, half}, axisOrigin + Vec3{half, half, half}};
}

}  // namespace refrakt
