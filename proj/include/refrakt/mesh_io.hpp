#pragma once

#include <filesystem>
#include <vector>

#include "refrakt/mesh.hpp"
#include "refrakt/point_cloud.hpp"

namespace refrakt {

/// ASCII Wavefront OBJ: `v`, `vn` and `f` records (polygons are fan-triangulated).
TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Binary little-endian PLY. Vertex normals are written when present; `quality`, when
/// non-empty, becomes a per-vertex float property (used for error maps and radii).
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               const std::vector<double>& quality = {});
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const std::vector<double>& quality = {});

struct PlyData {
    TriangleMesh mesh;            // faces empty for point clouds
    std::vector<double> quality;  // empty when the file has none
};

/// Reads binary little-endian or ASCII PLY with float/double vertex properties.
PlyData read_ply(const std::filesystem::path& path);

/// Dispatches on extension (.obj / .ply).
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace refrakt
