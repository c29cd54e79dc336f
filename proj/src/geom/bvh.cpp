#include "refrakt/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace refrakt {

namespace {

constexpr int kLeafSize = 4;
constexpr double kDuplicateHitT = 1e-9;

bool slab(const Aabb& box, const Vec3& origin, const Vec3& invDir, double tMax, double& tEnter) {
    double t0 = 0.0, t1 = tMax;
    for (int k = 0; k < 3; ++k) {
        double ta = (box.lo[k] - origin[k]) * invDir[k];
        double tb = (box.hi[k] - origin[k]) * invDir[k];
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
        if (t0 > t1) return false;
    }
    tEnter = t0;
    return true;
}

}  // namespace

std::optional<MeshHit> intersect_triangle(const Ray& ray, const TriangleMesh& mesh, int face) {
    const Face& f = mesh.faces[face];
    const Vec3& v0 = mesh.vertices[f[0]];
    const Vec3 e1 = mesh.vertices[f[1]] - v0;
    const Vec3 e2 = mesh.vertices[f[2]] - v0;
    const Vec3 pv = cross(ray.direction, e2);
    const double det = dot(e1, pv);
    if (det == 0.0) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 tv = ray.origin - v0;
    const double u = dot(tv, pv) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 qv = cross(tv, e1);
    const double v = dot(ray.direction, qv) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    MeshHit hit;
    hit.t = dot(e2, qv) * inv;
    hit.face = face;
    hit.b1 = u;
    hit.b2 = v;
    hit.point = ray.at(hit.t);
    Vec3 n = normalized(cross(e1, e2));
    if (dot(n, ray.direction) > 0.0) n = -n;
    hit.geometricNormal = n;
    return hit;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

void finalize_hits(std::vector<MeshHit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const MeshHit& a, const MeshHit& b) {
        return a.t < b.t || (a.t == b.t && a.face < b.face);
    });
    std::vector<MeshHit> merged;
    merged.reserve(hits.size());
    for (const MeshHit& h : hits)
        if (merged.empty() || h.t - merged.back().t > kDuplicateHitT) merged.push_back(h);
    hits = std::move(merged);
}

MeshBvh::MeshBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
    const int n = static_cast<int>(mesh.faces.size());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Vec3> centroids(n);
    for (int f = 0; f < n; ++f) {
        const Face& t = mesh.faces[f];
        centroids[f] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    }
    if (n > 0) {
        nodes_.reserve(2 * n / kLeafSize + 2);
        build(0, n, centroids);
    }
}

int MeshBvh::build(int begin, int end, std::vector<Vec3>& centroids) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Aabb box, cbox;
    for (int i = begin; i < end; ++i) {
        const Face& f = mesh_->faces[order_[i]];
        for (int v : f) box.expand(mesh_->vertices[v]);
        cbox.expand(centroids[order_[i]]);
    }
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;
    const Vec3 ext = cbox.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const int l = build(begin, mid, centroids);
    const int r = build(mid, end, centroids);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

template <typename Visit>
void MeshBvh::traverse(const Ray& ray, double tMax, Visit&& visit) const {
    if (nodes_.empty()) return;
    const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        double tEnter;
        if (!slab(node.box, ray.origin, inv, tMax, tEnter)) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i)
                if (!visit(order_[i], tMax)) return;
        } else {
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }
}

std::vector<MeshHit> MeshBvh::intersect_all(const Ray& ray, double tMin) const {
    std::vector<MeshHit> hits;
    traverse(ray, std::numeric_limits<double>::infinity(), [&](int face, double&) {
        if (auto h = intersect_triangle(ray, *mesh_, face); h && h->t > tMin) hits.push_back(*h);
        return true;
    });
    finalize_hits(hits);
    return hits;
}

std::optional<MeshHit> MeshBvh::first_hit(const Ray& ray, double tMin) const {
    std::optional<MeshHit> best;
    traverse(ray, std::numeric_limits<double>::infinity(), [&](int face, double& tMax) {
        if (auto h = intersect_triangle(ray, *mesh_, face); h && h->t > tMin) {
            if (!best || h->t < best->t || (h->t == best->t && h->face < best->face)) {
                best = h;
                tMax = h->t;
            }
        }
        return true;
    });
    return best;
}

bool MeshBvh::any_hit(const Ray& ray, double tMin) const {
    bool found = false;
    traverse(ray, std::numeric_limits<double>::infinity(), [&](int face, double&) {
        if (auto h = intersect_triangle(ray, *mesh_, face); h && h->t > tMin) found = true;
        return !found;
    });
    return found;
}

ClosestPoint MeshBvh::closest_point(const Vec3& p) const {
    ClosestPoint best;
    best.squaredDistance = std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return best;
    std::vector<std::pair<double, int>> stack;
    stack.emplace_back(nodes_[0].box.squared_distance_to(p), 0);
    while (!stack.empty()) {
        const auto [d, id] = stack.back();
        stack.pop_back();
        if (d > best.squaredDistance) continue;
        const Node& node = nodes_[id];
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const Face& f = mesh_->faces[order_[i]];
                const Vec3 q = closest_point_on_triangle(p, mesh_->vertices[f[0]],
                                                         mesh_->vertices[f[1]], mesh_->vertices[f[2]]);
                const double d2 = squared_distance(p, q);
                if (d2 < best.squaredDistance) best = {q, order_[i], d2};
            }
            continue;
        }
        const double dl = nodes_[node.left].box.squared_distance_to(p);
        const double dr = nodes_[node.right].box.squared_distance_to(p);
        // push the farther child first so the nearer one is popped next
        if (dl < dr) {
            stack.emplace_back(dr, node.right);
            stack.emplace_back(dl, node.left);
        } else {
            stack.emplace_back(dl, node.left);
            stack.emplace_back(dr, node.right);
        }
    }
    return best;
}

bool MeshBvh::contains(const Vec3& p) const {
    const Ray ray{p, normalized(Vec3{1.0, 0.000123457, 0.000271828})};
    return intersect_all(ray, 0.0).size() % 2 == 1;
}

std::vector<MeshHit> ray_mesh_intersect(const Ray& ray, const MeshBvh& bvh) {
    return bvh.intersect_all(ray, kRayEpsilon);
}

}  // namespace refrakt
