#include "refrakt/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace refrakt {

namespace {
constexpr int kLeafSize = 12;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, static_cast<int>(points_.size()));
    }
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    for (int i = begin; i < end; ++i) box.expand(points_[order_[i]]);
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;

    const Vec3 ext = box.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, int k, int exclude) const {
    std::vector<Neighbor> heap;  // max-heap on (distance, index)
    if (k <= 0 || nodes_.empty()) return heap;
    heap.reserve(k + 1);

    auto consider = [&](int idx) {
        if (idx == exclude) return;
        const Neighbor cand{idx, squared_distance(points_[idx], query)};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
        }
    };

    // best-first traversal; ties at equal box distance must still be visited
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    queue.emplace(nodes_[0].box.squared_distance_to(query), 0);
    while (!queue.empty()) {
        const auto [d, id] = queue.top();
        queue.pop();
        if (static_cast<int>(heap.size()) == k && d > heap.front().squaredDistance) break;
        const Node& node = nodes_[id];
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
            continue;
        }
        for (int child : {node.left, node.right}) {
            const double cd = nodes_[child].box.squared_distance_to(query);
            if (static_cast<int>(heap.size()) < k || cd <= heap.front().squaredDistance)
                queue.emplace(cd, child);
        }
    }
    std::sort_heap(heap.begin(), heap.end());
    return heap;
}

std::vector<Neighbor> KdTree::radius_neighbors(const Vec3& query, double radius) const {
    std::vector<Neighbor> out;
    if (nodes_.empty()) return out;
    const double r2 = radius * radius;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& node = nodes_[id];
        if (node.box.squared_distance_to(query) > r2) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                const double d2 = squared_distance(points_[idx], query);
                if (d2 <= r2) out.push_back({idx, d2});
            }
        } else {
            stack.push_back(node.right);
            stack.push_back(node.left);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    return out;
}

std::vector<int> KdTree::radius_search(const Vec3& query, double radius) const {
    const auto nb = radius_neighbors(query, radius);
    std::vector<int> out(nb.size());
    std::transform(nb.begin(), nb.end(), out.begin(), [](const Neighbor& n) { return n.index; });
    return out;
}

Neighbor KdTree::nearest(const Vec3& query) const {
    const auto nb = knn(query, 1);
    return nb.empty() ? Neighbor{} : nb.front();
}

}  // namespace refrakt
