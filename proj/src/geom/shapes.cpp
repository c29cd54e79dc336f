#include "refrakt/shapes.hpp"

#include <cmath>
#include <map>

#include "refrakt/marching_cubes.hpp"

namespace refrakt {

Aabb SphereShape::bounds() const {
    return {center_ - Vec3{radius_, radius_, radius_}, center_ + Vec3{radius_, radius_, radius_}};
}

double DentedSphereShape::value(const Vec3& p) const {
    const double outer = distance(p, center_) - radius_;
    const double bite = dentRadius_ - distance(p, dentCenter_);
    return std::max(outer, bite);
}

Vec3 DentedSphereShape::normal(const Vec3& p) const {
    const double outer = distance(p, center_) - radius_;
    const double bite = dentRadius_ - distance(p, dentCenter_);
    return outer >= bite ? normalized(p - center_) : normalized(dentCenter_ - p);
}

Aabb DentedSphereShape::bounds() const {
    return {center_ - Vec3{radius_, radius_, radius_}, center_ + Vec3{radius_, radius_, radius_}};
}

bool DentedSphereShape::in_dent(const Vec3& p, double tolerance) const {
    return distance(p, dentCenter_) <= dentRadius_ + tolerance &&
           distance(p, center_) <= radius_ + tolerance;
}

double EllipsoidShape::value(const Vec3& p) const {
    const Vec3 q{(p.x - center_.x) / axes_.x, (p.y - center_.y) / axes_.y, (p.z - center_.z) / axes_.z};
    const double minAxis = std::min({axes_.x, axes_.y, axes_.z});
    return (norm(q) - 1.0) * minAxis;
}

Vec3 EllipsoidShape::normal(const Vec3& p) const {
    const Vec3 d = p - center_;
    return normalized(Vec3{d.x / (axes_.x * axes_.x), d.y / (axes_.y * axes_.y), d.z / (axes_.z * axes_.z)});
}

Aabb EllipsoidShape::bounds() const { return {center_ - axes_, center_ + axes_}; }

TriangleMesh tessellate(const ImplicitShape& shape, double spacing) {
    const Aabb b = shape.bounds();
    const Vec3 pad{2 * spacing, 2 * spacing, 2 * spacing};
    const Vec3 lo = b.lo - pad;
    const Vec3 ext = b.extent() + pad * 2.0;
    ScalarGrid grid(lo, spacing, static_cast<int>(std::ceil(ext.x / spacing)) + 1,
                    static_cast<int>(std::ceil(ext.y / spacing)) + 1,
                    static_cast<int>(std::ceil(ext.z / spacing)) + 1);
    grid.sample([&](const Vec3& p) { return shape.value(p); });
    TriangleMesh mesh = marching_cubes(grid, 0.0);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) mesh.vertexNormals[i] = shape.normal(mesh.vertices[i]);
    return mesh;
}

TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& p : v) p = normalized(p);
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back(normalized(v[a] + v[b]));
            const int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<Face> next;
        next.reserve(f.size() * 4);
        for (const Face& tri : f) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    std::vector<Vec3> normals = v;
    for (Vec3& p : v) p = center + p * radius;
    return TriangleMesh::build(std::move(v), std::move(f), std::move(normals));
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    std::vector<Vec3> v;
    for (int i = 0; i < 8; ++i)
        v.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
    std::vector<Face> f = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                           {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return TriangleMesh::build(std::move(v), std::move(f));
}

TriangleMesh make_unit_square(double z) {
    return TriangleMesh::build({{0, 0, z}, {1, 0, z}, {1, 1, z}, {0, 1, z}}, {{0, 1, 2}, {0, 2, 3}});
}

DentedSphereShape default_dented_sphere() { return {{0, 0, 0}, 4.0, {5.0, 0, 0}, 2.5}; }

EllipsoidShape kitten_scale_ellipsoid() { return {{0, 0, 0}, {3.15, 4.85, 2.85}}; }

}  // namespace refrakt
