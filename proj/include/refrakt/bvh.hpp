#pragma once

#include <optional>
#include <vector>

#include "refrakt/mesh.hpp"

namespace refrakt {

/// Self-intersection offset for secondary rays, in mm.
inline constexpr double kRayEpsilon = 1e-6;

struct MeshHit {
    double t = 0.0;
    int face = -1;
    Vec3 point;
    Vec3 geometricNormal;  // unit, oriented against the ray direction
    double b1 = 0.0;       // barycentric weights of face vertices 1 and 2
    double b2 = 0.0;
};

struct ClosestPoint {
    Vec3 point;
    int face = -1;
    double squaredDistance = 0.0;
};

/// Moller-Trumbore test with inclusive edges. Returns t (no tMin filtering) on hit.
std::optional<MeshHit> intersect_triangle(const Ray& ray, const TriangleMesh& mesh, int face);

/// Closest point on triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Sorts hits by t and merges duplicates closer than 1e-9 in t (edge/vertex hits).
void finalize_hits(std::vector<MeshHit>& hits);

/// Bounding-volume hierarchy over a mesh. Keeps a reference to the mesh, which must outlive it.
class MeshBvh {
  public:
    explicit MeshBvh(const TriangleMesh& mesh);

    const TriangleMesh& mesh() const { return *mesh_; }

    /// All hits with t > tMin, sorted ascending.
    std::vector<MeshHit> intersect_all(const Ray& ray, double tMin = kRayEpsilon) const;
    std::optional<MeshHit> first_hit(const Ray& ray, double tMin = kRayEpsilon) const;
    bool any_hit(const Ray& ray, double tMin = kRayEpsilon) const;

    ClosestPoint closest_point(const Vec3& p) const;

    /// Parity test along +x with a slightly skewed direction; assumes a closed mesh.
    bool contains(const Vec3& p) const;

  private:
    struct Node {
        Aabb box;
        int begin = 0;
        int end = 0;
        int left = -1;
        int right = -1;
    };
    int build(int begin, int end, std::vector<Vec3>& centroids);
    template <typename Visit>
    void traverse(const Ray& ray, double tMax, Visit&& visit) const;

    const TriangleMesh* mesh_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

/// All intersections of `ray` with `mesh` beyond the epsilon, sorted by t.
std::vector<MeshHit> ray_mesh_intersect(const Ray& ray, const MeshBvh& bvh);

}  // namespace refrakt
