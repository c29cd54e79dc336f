#include "refrakt/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "refrakt/bvh.hpp"
#include "refrakt/errors.hpp"

namespace refrakt {

std::optional<Vec3> pca_normal(std::span<const Vec3> pts) {
    if (pts.size() < 3) return std::nullopt;
    Vec3 mean;
    for (const Vec3& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
        const Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const auto& ev = es.eigenvalues();
    // rank < 2: the middle eigenvalue vanishes relative to the largest
    if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300))) return std::nullopt;
    const Eigen::Vector3d n = es.eigenvectors().col(0);
    return normalized(Vec3{n(0), n(1), n(2)});
}

std::vector<Vec3> estimate_normals_pca(const PointCloud& cloud, const KdTree& index, int neighborCount,
                                       std::span<const Vec3> viewDirections) {
    if (neighborCount < 3) throw InvalidArgument("neighborCount must be >= 3");
    if (static_cast<int>(cloud.size()) < neighborCount)
        throw InvalidArgument("cloud has fewer points than neighborCount");
    if (!viewDirections.empty() && viewDirections.size() != cloud.size())
        throw InvalidArgument("view direction count does not match cloud size");

    Vec3 centroid;
    for (const Vec3& p : cloud.points) centroid += p;
    centroid /= static_cast<double>(cloud.size());

    const int n = static_cast<int>(cloud.size());
    std::vector<Vec3> normals(n);
    std::vector<Vec3> nb;
    for (int i = 0; i < n; ++i) {
        nb.clear();
        for (const Neighbor& k : index.knn(cloud.points[i], neighborCount)) nb.push_back(index.points()[k.index]);
        const auto normal = pca_normal(nb);
        if (!normal) throw DegenerateNeighborhood("collinear neighborhood at point " + std::to_string(i));
        Vec3 nrm = *normal;
        const Vec3 ref = viewDirections.empty() ? centroid - cloud.points[i] : viewDirections[i];
        if (dot(nrm, ref) > 0.0) nrm = -nrm;
        normals[i] = nrm;
    }
    return normals;
}

namespace {

struct SurfaceSampler {
    const TriangleMesh& mesh;
    std::vector<double> cdf;

    explicit SurfaceSampler(const TriangleMesh& m) : mesh(m) {
        cdf.resize(m.faces.size());
        double acc = 0.0;
        for (int f = 0; f < static_cast<int>(m.faces.size()); ++f) {
            acc += m.face_area(f);
            cdf[f] = acc;
        }
    }
    double area() const { return cdf.empty() ? 0.0 : cdf.back(); }

    std::pair<Vec3, int> draw(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const double r = uni(rng) * area();
        int f = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
        f = std::min(f, static_cast<int>(cdf.size()) - 1);
        double a = uni(rng), b = uni(rng);
        if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
        const Face& t = mesh.faces[f];
        const Vec3 p = mesh.vertices[t[0]] + (mesh.vertices[t[1]] - mesh.vertices[t[0]]) * a +
                       (mesh.vertices[t[2]] - mesh.vertices[t[0]]) * b;
        return {p, f};
    }
};

struct CellKey {
    long long x, y, z;
    bool operator==(const CellKey&) const = default;
};
struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
    }
};

std::vector<int> dart_throw(const std::vector<Vec3>& candidates, double radius) {
    std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
    grid.reserve(candidates.size());
    const double r2 = radius * radius;
    auto cell = [&](const Vec3& p) {
        return CellKey{static_cast<long long>(std::floor(p.x / radius)),
                       static_cast<long long>(std::floor(p.y / radius)),
                       static_cast<long long>(std::floor(p.z / radius))};
    };
    std::vector<int> accepted;
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
        const Vec3& p = candidates[i];
        const CellKey c = cell(p);
        bool ok = true;
        for (long long dx = -1; dx <= 1 && ok; ++dx)
            for (long long dy = -1; dy <= 1 && ok; ++dy)
                for (long long dz = -1; dz <= 1 && ok; ++dz) {
                    auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
                    if (it == grid.end()) continue;
                    for (int j : it->second)
                        if (squared_distance(p, candidates[j]) < r2) {
                            ok = false;
                            break;
                        }
                }
        if (ok) {
            grid[c].push_back(i);
            accepted.push_back(i);
        }
    }
    return accepted;
}

}  // namespace

PointCloud sample_surface_uniform(const TriangleMesh& mesh, int count, std::uint64_t seed) {
    SurfaceSampler sampler(mesh);
    if (!(sampler.area() > 0.0)) throw InvalidArgument("mesh has zero surface area");
    std::mt19937_64 rng(seed);
    PointCloud out;
    out.points.reserve(count);
    for (int i = 0; i < count; ++i) out.points.push_back(sampler.draw(rng).first);
    return out;
}

double mean_spacing(std::span<const Vec3> points) {
    if (points.size() < 2) return 0.0;
    const KdTree tree(points);
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        acc += std::sqrt(tree.knn(points[i], 1, i).front().squaredDistance);
    return acc / static_cast<double>(points.size());
}

PoissonDiskSamples poisson_disk_sample(const TriangleMesh& mesh, int targetCount, std::uint64_t seed) {
    if (targetCount < 100) throw InvalidArgument("targetCount must be >= 100");
    SurfaceSampler sampler(mesh);
    if (!(sampler.area() > 0.0)) throw InvalidArgument("mesh has zero surface area");

    std::mt19937_64 rng(seed);
    const int candidateCount = 12 * targetCount;
    std::vector<Vec3> candidates(candidateCount);
    std::vector<int> candidateFace(candidateCount);
    for (int i = 0; i < candidateCount; ++i) std::tie(candidates[i], candidateFace[i]) = sampler.draw(rng);

    // random sequential adsorption saturates near 1.44 r^2 of area per disk
    const double guess = std::sqrt(sampler.area() / (1.44 * targetCount));
    double lo = 0.2 * guess, hi = 2.0 * guess;
    std::vector<int> best;
    double bestRadius = guess;
    for (int iter = 0; iter < 40; ++iter) {
        const double mid = 0.5 * (lo + hi);
        std::vector<int> acc = dart_throw(candidates, mid);
        const int count = static_cast<int>(acc.size());
        if (best.empty() || std::abs(count - targetCount) < std::abs(static_cast<int>(best.size()) - targetCount)) {
            best = acc;
            bestRadius = mid;
        }
        if (std::abs(count - targetCount) <= targetCount / 100) break;
        if (count > targetCount)
            lo = mid;
        else
            hi = mid;
    }

    PoissonDiskSamples out;
    out.minDistance = bestRadius;
    out.cloud.points.reserve(best.size());
    out.cloud.normals.reserve(best.size());
    for (int i : best) {
        out.cloud.points.push_back(candidates[i]);
        out.cloud.normals.push_back(mesh.face_normal(candidateFace[i]));
        out.faces.push_back(candidateFace[i]);
    }
    out.meanSpacing = mean_spacing(out.cloud.points);
    return out;
}

AdjacencyLists knn_graph(std::span<const Vec3> points, int k) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (static_cast<int>(points.size()) <= k) throw InvalidArgument("cloud must have more than k points");
    const KdTree tree(points);
    const int n = static_cast<int>(points.size());
    AdjacencyLists adj(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto nb = tree.knn(points[i], k, i);
        adj[i].reserve(k);
        for (const Neighbor& q : nb) adj[i].push_back(q.index);
    }
    return adj;
}

HausdorffResult hausdorff(const TriangleMesh& meshA, const TriangleMesh& meshB, int sampleCount,
                          std::uint64_t seed) {
    if (meshA.empty() || meshB.empty()) throw InvalidArgument("hausdorff needs non-empty meshes");
    const MeshBvh bvhA(meshA), bvhB(meshB);
    const PointCloud sa = sample_surface_uniform(meshA, sampleCount, seed);
    const PointCloud sb = sample_surface_uniform(meshB, sampleCount, seed + 1);

    auto one_side = [](const PointCloud& samples, const MeshBvh& target, double& mean, double& mx) {
        const int n = static_cast<int>(samples.size());
        std::vector<double> d(n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) d[i] = std::sqrt(target.closest_point(samples.points[i]).squaredDistance);
        mean = 0.0;
        mx = 0.0;
        for (double v : d) {
            mean += v;
            mx = std::max(mx, v);
        }
        mean /= std::max(1, n);
    };

    HausdorffResult r;
    double meanAB, maxAB, meanBA, maxBA;
    one_side(sa, bvhB, meanAB, maxAB);
    one_side(sb, bvhA, meanBA, maxBA);
    r.meanDist = 0.5 * (meanAB + meanBA);
    r.maxDist = std::max(maxAB, maxBA);

    const int nv = static_cast<int>(meshA.vertices.size());
    r.perVertexDist.resize(nv);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nv; ++i)
        r.perVertexDist[i] = std::sqrt(bvhB.closest_point(meshA.vertices[i]).squaredDistance);
    return r;
}

}  // namespace refrakt
