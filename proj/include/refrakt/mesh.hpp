#pragma once

#include <array>
#include <vector>

#include "refrakt/vec3.hpp"

namespace refrakt {

using Face = std::array<int, 3>;

/// Indexed triangle mesh. Faces wind counter-clockwise seen from outside.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Vec3> vertexNormals;  // empty or one unit normal per vertex

    /// Validates indices and drops zero-area faces. Throws InvalidArgument on bad input.
    static TriangleMesh build(std::vector<Vec3> vertices, std::vector<Face> faces,
                              std::vector<Vec3> vertexNormals = {});

    bool empty() const { return faces.empty(); }
    bool has_normals() const { return !vertexNormals.empty(); }

    Vec3 face_normal(int f) const;  // unit, from winding
    double face_area(int f) const;
    double surface_area() const;
    Aabb bounds() const;

    /// Every undirected edge is shared by exactly two faces.
    bool is_closed() const;
    /// Closed and every edge is traversed once in each direction.
    bool is_consistently_oriented() const;
    /// Divergence-theorem volume; positive for outward winding.
    double signed_volume() const;

    /// Area-weighted vertex normals from face winding.
    void compute_vertex_normals();
};

/// Removes faces with zero area and unused vertices, re-indexing faces.
TriangleMesh compact(const TriangleMesh& mesh);

/// Keeps only the largest edge-connected component (by face count).
TriangleMesh largest_component(const TriangleMesh& mesh);

/// Uniform (umbrella) Laplacian smoothing with step `lambda`; normals recomputed.
void laplacian_smooth(TriangleMesh& mesh, int passes, double lambda = 0.5);

/// Translates all vertices.
TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset);

/// Applies a rigid transform to vertices and normals.
TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose);

}  // namespace refrakt
