#pragma once

#include <span>
#include <vector>

#include "refrakt/capture.hpp"
#include "refrakt/marching_cubes.hpp"

namespace refrakt {

/// Binary voxel grid; voxel (i, j, k) is the cube starting at origin + spacing * (i, j, k).
struct VoxelGrid {
    Vec3 origin;
    double spacing = 1.0;
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::uint8_t> occupancy;

    std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(k) * ny + j) * nx + i; }
    bool on(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz && occupancy[index(i, j, k)];
    }
    Vec3 voxel_center(int i, int j, int k) const {
        return origin + Vec3{i + 0.5, j + 0.5, k + 0.5} * spacing;
    }
    std::size_t count_on() const;
    double volume() const { return static_cast<double>(count_on()) * spacing * spacing * spacing; }

    /// Distance from p to the nearest ON voxel (0 inside one).
    double distance_to_occupied(const Vec3& p) const;
};

/// Space carving: a voxel stays ON iff its center projects onto an ON pixel of every mask.
/// `resolution` voxels span the longest side of `bounds`. Throws InvalidArgument with fewer
/// than 3 views and EmptyHull when nothing survives.
VoxelGrid carve(std::span<const SilhouetteMask> masks, std::span<const Camera> cameras, const Aabb& bounds,
                int resolution);

/// Closed mesh of the ON voxels: marching cubes on the +-1 occupancy field followed by
/// `smoothingPasses` umbrella passes.
TriangleMesh hull_mesh(const VoxelGrid& grid, int smoothingPasses = 2);

/// Cube around the rotation axis origin that contains every point visible in the masks,
/// with a safety margin.
Aabb carving_bounds(std::span<const SilhouetteMask> masks, std::span<const Camera> cameras, const Vec3& axisOrigin,
                    double margin = 1.15);

}  // namespace refrakt
