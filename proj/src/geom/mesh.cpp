#include "refrakt/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>

#include "refrakt/errors.hpp"

namespace refrakt {

namespace {

std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

bool zero_area(const std::vector<Vec3>& v, const Face& f) {
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return true;
    return squared_norm(cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]])) == 0.0;
}

}  // namespace

TriangleMesh TriangleMesh::build(std::vector<Vec3> vertices, std::vector<Face> faces,
                                 std::vector<Vec3> vertexNormals) {
    const int n = static_cast<int>(vertices.size());
    for (const Face& f : faces)
        for (int idx : f)
            if (idx < 0 || idx >= n) throw InvalidArgument("face index out of range");
    if (!vertexNormals.empty() && vertexNormals.size() != vertices.size())
        throw InvalidArgument("vertex normal count does not match vertex count");
    for (Vec3& nrm : vertexNormals) {
        const double len = norm(nrm);
        if (!(len > 0.0)) throw InvalidArgument("zero vertex normal");
        nrm /= len;
    }
    TriangleMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.vertexNormals = std::move(vertexNormals);
    mesh.faces.reserve(faces.size());
    for (const Face& f : faces)
        if (!zero_area(mesh.vertices, f)) mesh.faces.push_back(f);
    return mesh;
}

Vec3 TriangleMesh::face_normal(int f) const {
    const Face& t = faces[f];
    return normalized(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double TriangleMesh::face_area(int f) const {
    const Face& t = faces[f];
    return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double TriangleMesh::surface_area() const {
    double a = 0.0;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) a += face_area(f);
    return a;
}

Aabb TriangleMesh::bounds() const {
    Aabb b;
    for (const Face& f : faces)
        for (int i : f) b.expand(vertices[i]);
    return b;
}

bool TriangleMesh::is_closed() const {
    std::unordered_map<std::uint64_t, int> count;
    count.reserve(faces.size() * 3);
    for (const Face& f : faces)
        for (int e = 0; e < 3; ++e) {
            int a = f[e], b = f[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++count[edge_key(a, b)];
        }
    return !faces.empty() &&
           std::all_of(count.begin(), count.end(), [](const auto& kv) { return kv.second == 2; });
}

bool TriangleMesh::is_consistently_oriented() const {
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(faces.size() * 3);
    for (const Face& f : faces)
        for (int e = 0; e < 3; ++e) ++directed[edge_key(f[e], f[(e + 1) % 3])];
    for (const auto& [key, c] : directed) {
        if (c != 1) return false;
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffu);
        auto it = directed.find(edge_key(b, a));
        if (it == directed.end() || it->second != 1) return false;
    }
    return !faces.empty();
}

double TriangleMesh::signed_volume() const {
    double v = 0.0;
    for (const Face& f : faces) v += dot(vertices[f[0]], cross(vertices[f[1]], vertices[f[2]]));
    return v / 6.0;
}

void TriangleMesh::compute_vertex_normals() {
    std::vector<Vec3> acc(vertices.size());
    for (const Face& f : faces) {
        // cross product magnitude is twice the area: area weighting for free
        const Vec3 n = cross(vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]);
        for (int i : f) acc[i] += n;
    }
    for (Vec3& n : acc) {
        const double len = norm(n);
        n = len > 0.0 ? n / len : Vec3{0, 0, 1};
    }
    vertexNormals = std::move(acc);
}

TriangleMesh compact(const TriangleMesh& mesh) {
    std::vector<int> remap(mesh.vertices.size(), -1);
    TriangleMesh out;
    for (const Face& f : mesh.faces) {
        if (zero_area(mesh.vertices, f)) continue;
        Face g;
        for (int k = 0; k < 3; ++k) {
            int& r = remap[f[k]];
            if (r < 0) {
                r = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[f[k]]);
                if (mesh.has_normals()) out.vertexNormals.push_back(mesh.vertexNormals[f[k]]);
            }
            g[k] = r;
        }
        out.faces.push_back(g);
    }
    return out;
}

TriangleMesh largest_component(const TriangleMesh& mesh) {
    const int nv = static_cast<int>(mesh.vertices.size());
    std::vector<int> parent(nv);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Face& f : mesh.faces) {
        const int a = find(f[0]);
        parent[find(f[1])] = a;
        parent[find(f[2])] = a;
    }
    std::map<int, int> faceCount;
    for (const Face& f : mesh.faces) ++faceCount[find(f[0])];
    if (faceCount.size() <= 1) return mesh;
    int best = -1, bestCount = -1;
    for (const auto& [root, c] : faceCount)
        if (c > bestCount) best = root, bestCount = c;
    TriangleMesh kept;
    kept.vertices = mesh.vertices;
    kept.vertexNormals = mesh.vertexNormals;
    for (const Face& f : mesh.faces)
        if (find(f[0]) == best) kept.faces.push_back(f);
    return compact(kept);
}

void laplacian_smooth(TriangleMesh& mesh, int passes, double lambda) {
    const int nv = static_cast<int>(mesh.vertices.size());
    std::vector<std::vector<int>> nbrs(nv);
    for (const Face& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            nbrs[f[e]].push_back(f[(e + 1) % 3]);
            nbrs[f[e]].push_back(f[(e + 2) % 3]);
        }
    for (auto& n : nbrs) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    for (int pass = 0; pass < passes; ++pass) {
        std::vector<Vec3> next = mesh.vertices;
        for (int i = 0; i < nv; ++i) {
            if (nbrs[i].empty()) continue;
            Vec3 c;
            for (int j : nbrs[i]) c += mesh.vertices[j];
            c /= static_cast<double>(nbrs[i].size());
            next[i] = mesh.vertices[i] + (c - mesh.vertices[i]) * lambda;
        }
        mesh.vertices = std::move(next);
    }
    mesh.compute_vertex_normals();
}

TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset) {
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v += offset;
    return out;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose) {
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v = pose.apply(v);
    for (Vec3& n : out.vertexNormals) n = pose.apply_direction(n);
    return out;
}

}  // namespace refrakt
