#pragma once

#include <vector>

#include "refrakt/vec3.hpp"

namespace refrakt {

/// Unorganized point set. `normals` and `tags` are either empty or sized like `points`.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<int> tags;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    void push_back(const Vec3& p) { points.push_back(p); }

    Aabb bounds() const {
        Aabb b;
        for (const Vec3& p : points) b.expand(p);
        return b;
    }
};

}  // namespace refrakt
