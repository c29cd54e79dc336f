#include "refrakt/marching_cubes.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "refrakt/errors.hpp"

namespace refrakt {

namespace {

#include "mc_tables.inc"

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
                               {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// keep crossings strictly inside an edge so distinct edges never yield coincident vertices
constexpr double kMinFraction = 1e-6;

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& field, double isoLevel) {
    if (field.nx < 2 || field.ny < 2 || field.nz < 2) throw InvalidArgument("grid needs >= 2 nodes per axis");
    const auto [mn, mx] = std::minmax_element(field.values.begin(), field.values.end());
    if (!(isoLevel > *mn && isoLevel <= *mx)) throw EmptyIsoSurface("iso level outside field range");

    TriangleMesh mesh;
    // key: grid node of the lower edge endpoint and the edge axis
    std::unordered_map<std::uint64_t, int> edgeVertex;
    auto vertex_on_edge = [&](int i0, int j0, int k0, int i1, int j1, int k1) {
        if (i1 < i0 || j1 < j0 || k1 < k0) std::swap(i0, i1), std::swap(j0, j1), std::swap(k0, k1);
        const int axis = i1 != i0 ? 0 : (j1 != j0 ? 1 : 2);
        const std::uint64_t key = static_cast<std::uint64_t>(field.index(i0, j0, k0)) * 3 + axis;
        auto [it, inserted] = edgeVertex.try_emplace(key, static_cast<int>(mesh.vertices.size()));
        if (inserted) {
            const double v0 = field.at(i0, j0, k0), v1 = field.at(i1, j1, k1);
            double t = (isoLevel - v0) / (v1 - v0);
            t = std::clamp(t, kMinFraction, 1.0 - kMinFraction);
            mesh.vertices.push_back(field.node(i0, j0, k0) + (field.node(i1, j1, k1) - field.node(i0, j0, k0)) * t);
        }
        return it->second;
    };

    for (int k = 0; k + 1 < field.nz; ++k)
        for (int j = 0; j + 1 < field.ny; ++j)
            for (int i = 0; i + 1 < field.nx; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c)
                    if (field.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < isoLevel) cube |= 1 << c;
                if (kEdgeTable[cube] == 0) continue;
                int ids[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(kEdgeTable[cube] & (1 << e))) continue;
                    const int* a = kCorner[kEdgeCorners[e][0]];
                    const int* b = kCorner[kEdgeCorners[e][1]];
                    ids[e] = vertex_on_edge(i + a[0], j + a[1], k + a[2], i + b[0], j + b[1], k + b[2]);
                }
                for (const int* t = kTriTable[cube]; *t != -1; t += 3)
                    mesh.faces.push_back({ids[t[0]], ids[t[1]], ids[t[2]]});
            }
    if (mesh.faces.empty()) throw EmptyIsoSurface("no cell straddles the iso level");
    mesh.compute_vertex_normals();
    return mesh;
}

}  // namespace refrakt
