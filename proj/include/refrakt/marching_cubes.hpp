#pragma once

#include <vector>

#include "refrakt/mesh.hpp"

namespace refrakt {

/// Scalar samples on a regular grid; node (i, j, k) sits at origin + spacing * (i, j, k).
struct ScalarGrid {
    Vec3 origin;
    double spacing = 1.0;
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> values;

    ScalarGrid() = default;
    ScalarGrid(const Vec3& o, double h, int x, int y, int z, double fill = 0.0)
        : origin(o), spacing(h), nx(x), ny(y), nz(z), values(static_cast<std::size_t>(x) * y * z, fill) {}

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    Vec3 node(int i, int j, int k) const { return origin + Vec3{double(i), double(j), double(k)} * spacing; }

    /// Fills every node with f(position).
    template <typename F>
    void sample(F&& f) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) at(i, j, k) = f(node(i, j, k));
    }
};

/// Extracts the isoLevel surface. Values below isoLevel are inside; the result is wound
/// outward and vertices shared between adjacent cells. Throws EmptyIsoSurface when no
/// cell straddles isoLevel.
TriangleMesh marching_cubes(const ScalarGrid& field, double isoLevel);

}  // namespace refrakt
