#pragma once

#include <span>
#include <vector>

#include "refrakt/vec3.hpp"

namespace refrakt {

struct Neighbor {
    int index = -1;
    double squaredDistance = 0.0;

    /// Orders by distance, ties by lower index.
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.squaredDistance < b.squaredDistance ||
               (a.squaredDistance == b.squaredDistance && a.index < b.index);
    }
};

/// Static kd-tree over a point set. Queries are read-only and thread-safe.
class KdTree {
  public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// The k nearest points sorted by (distance, index). `exclude` is skipped when >= 0.
    std::vector<Neighbor> knn(const Vec3& query, int k, int exclude = -1) const;

    /// All points with squared distance <= radius^2, sorted by index.
    std::vector<int> radius_search(const Vec3& query, double radius) const;

    /// Same, with squared distances.
    std::vector<Neighbor> radius_neighbors(const Vec3& query, double radius) const;

    Neighbor nearest(const Vec3& query) const;

  private:
    struct Node {
        Aabb box;
        int begin = 0;
        int end = 0;
        int left = -1;
        int right = -1;
    };

    int build(int begin, int end);

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace refrakt
