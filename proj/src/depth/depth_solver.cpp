#include "refrakt/depth_solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "refrakt/errors.hpp"
#include "refrakt/kdtree.hpp"

namespace refrakt {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

Vector3d ev(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 vv(const Vector3d& v) { return {v.x(), v.y(), v.z()}; }

// derivative of normalize(w) applied to an upstream gradient
Vec3 back_normalize(const Vec3& unit, double length, const Vec3& upstream) {
    return (upstream - unit * dot(unit, upstream)) / length;
}

struct PatchEigen {
    Vector3d mean;
    Vector3d values;  // ascending
    Matrix3d vectors;
    double sign = 1.0;
};

template <typename PointAt>
PatchEigen analyse_patch(const std::vector<int>& patch, PointAt&& point_at, const Vec3& reference) {
    PatchEigen pe;
    pe.mean.setZero();
    for (int j : patch) pe.mean += ev(point_at(j));
    pe.mean /= static_cast<double>(patch.size());
    Matrix3d cov = Matrix3d::Zero();
    for (int j : patch) {
        const Vector3d d = ev(point_at(j)) - pe.mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(patch.size());
    Eigen::SelfAdjointEigenSolver<Matrix3d> es;
    es.computeDirect(cov);
    pe.values = es.eigenvalues();
    pe.vectors = es.eigenvectors();
    pe.sign = pe.vectors.col(0).dot(ev(reference)) < 0 ? -1.0 : 1.0;
    return pe;
}

// Scatters dE/dq_j for every patch member given dE/d(normal); normal = sign * v0.
template <typename PointAt, typename Accumulate>
void patch_normal_gradient(const std::vector<int>& patch, const PatchEigen& pe, const Vec3& dNormal,
                           PointAt&& point_at, Accumulate&& accumulate) {
    const Vector3d g = pe.sign * ev(dNormal);
    const Vector3d v0 = pe.vectors.col(0);
    const double scale = std::max(pe.values(2), 1e-300);
    Matrix3d G = Matrix3d::Zero();
    for (int k = 1; k < 3; ++k) {
        const double gap = pe.values(0) - pe.values(k);
        if (std::abs(gap) <= 1e-12 * scale) continue;  // degenerate direction: no stable derivative
        G += (g.dot(pe.vectors.col(k)) / gap) * pe.vectors.col(k) * v0.transpose();
    }
    const Matrix3d S = (G + G.transpose()) / static_cast<double>(patch.size());
    for (int j : patch) accumulate(j, vv(S * (ev(point_at(j)) - pe.mean)));
}

}  // namespace

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::MultiRefraction: return "MULTI_REFRACTION";
        case RejectReason::TotalInternalReflection: return "TIR";
        case RejectReason::Miss: return "MISS";
    }
    return "?";
}

namespace {

// The camera looked straight at the monitor: incident line runs back through the camera.
bool undeflected(const RayRayCorrespondence& c) {
    if (dot(c.incidentRay.direction, c.exitRay.direction) > -1.0 + 1e-12) return false;
    const Vec3 w = c.exitRay.origin - c.incidentRay.origin;
    return norm(w - c.incidentRay.direction * dot(w, c.incidentRay.direction)) < 1e-6;
}

}  // namespace

FilteredCorrespondences filter_correspondences(std::span<const RayRayCorrespondence> correspondences,
                                               const MeshSurface& roughModel, double ior) {
    std::vector<int> verdict(correspondences.size(), -1);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(correspondences.size()); ++k) {
        const RayRayCorrespondence& c = correspondences[k];
        if (!c.valid || undeflected(c)) {
            verdict[k] = static_cast<int>(RejectReason::Miss);
            continue;
        }
        const TracedPath p = trace_refractive_path(c.exitRay, roughModel, ior);
        if (p.hadTotalInternalReflection)
            verdict[k] = static_cast<int>(RejectReason::TotalInternalReflection);
        else if (p.refractionCount == 0 || !roughModel.first_hit(c.incidentRay))
            verdict[k] = static_cast<int>(RejectReason::Miss);
        else if (p.refractionCount != 2 || p.exceededEvents)
            verdict[k] = static_cast<int>(RejectReason::MultiRefraction);
    }
    FilteredCorrespondences out;
    for (std::size_t k = 0; k < correspondences.size(); ++k) {
        if (verdict[k] < 0)
            out.valid.push_back(correspondences[k]);
        else
            out.rejected.emplace_back(correspondences[k], static_cast<RejectReason>(verdict[k]));
    }
    return out;
}

DepthField initial_depth_field(std::span<const RayRayCorrespondence> valid, const MeshSurface& roughModel,
                               int pcaNeighbors, double standoff) {
    if (pcaNeighbors < 3) throw InvalidArgument("PCA neighborhoods need at least 3 points");
    DepthField f;
    for (const RayRayCorrespondence& c : valid) {
        const auto front = roughModel.first_hit(c.exitRay);
        const auto back = roughModel.first_hit(c.incidentRay);
        if (!front || !back) continue;
        f.viewIndex = c.viewIndex;
        f.pixels.push_back(c.pixel);
        if (standoff > 0.0) {
            f.exitRays.push_back({c.exitRay.at(front->t - standoff), c.exitRay.direction});
            f.incidentRays.push_back({c.incidentRay.at(back->t - standoff), c.incidentRay.direction});
            f.dFront.push_back(standoff);
            f.dBack.push_back(standoff);
        } else {
            f.exitRays.push_back(c.exitRay);
            f.incidentRays.push_back(c.incidentRay);
            f.dFront.push_back(front->t);
            f.dBack.push_back(back->t);
        }
        f.frontRef.push_back(front->normal);
        f.backRef.push_back(back->normal);
    }
    f.roughFront = f.dFront;
    f.roughBack = f.dBack;
    const std::size_t n = f.size();

    std::unordered_map<std::int64_t, int> at;
    auto key = [](int u, int v) { return (static_cast<std::int64_t>(v) << 32) | static_cast<std::uint32_t>(u); };
    for (std::size_t i = 0; i < n; ++i) at.emplace(key(f.pixels[i].u, f.pixels[i].v), static_cast<int>(i));
    f.neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const PixelCoord p = f.pixels[i];
        for (const auto& [du, dv] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}}) {
            auto it = at.find(key(p.u + du, p.v + dv));
            if (it != at.end()) f.neighbors[i].push_back(it->second);
        }
    }

    const int k = static_cast<int>(std::min<std::size_t>(pcaNeighbors, n));
    auto patches = [&](auto point_at, std::vector<std::vector<int>>& out) {
        std::vector<Vec3> pts(n);
        for (std::size_t i = 0; i < n; ++i) pts[i] = point_at(i);
        const KdTree tree(pts);
        out.resize(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            for (const Neighbor& nb : tree.knn(pts[i], k)) out[i].push_back(nb.index);
        }
    };
    if (n > 0) {
        patches([&](std::size_t i) { return f.front_point(i); }, f.frontPatch);
        patches([&](std::size_t i) { return f.back_point(i); }, f.backPatch);
    }
    return f;
}

PathNormals path_snell_normals(const Vec3& p1, const Vec3& p2, const Vec3& exitDirection, const Vec3& incident,
                               double ior) {
    const Vec3 t = normalized(p1 - p2);
    return {normalized(t * ior + exitDirection), normalized(incident - t * ior)};
}

Vec3 patch_normal(std::span<const Vec3> pts, const Vec3& reference) {
    std::vector<int> idx(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<int>(i);
    const PatchEigen pe = analyse_patch(idx, [&](int j) { return pts[j]; }, reference);
    return vv(pe.sign * pe.vectors.col(0));
}

double depth_energy(const DepthField& field, double ior, double lambda, Eigen::VectorXd* gradient) {
    const std::size_t n = field.size();
    for (std::size_t i = 0; i < n; ++i)
        if (!(field.dFront[i] > 0 && field.dBack[i] > 0)) throw InvalidArgument("depths must be positive");
    std::vector<Vec3> p1(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) p1[i] = field.front_point(i), p2[i] = field.back_point(i);

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::vector<std::vector<Vec3>> g1(gradient ? threads : 0, std::vector<Vec3>(n)), g2(g1);
    std::vector<double> partial(threads, 0.0);

#pragma omp parallel num_threads(threads)
    {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        double local = 0.0;
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const PatchEigen front = analyse_patch(field.frontPatch[i], [&](int j) { return p1[j]; }, field.frontRef[i]);
            const PatchEigen back = analyse_patch(field.backPatch[i], [&](int j) { return p2[j]; }, field.backRef[i]);
            const Vec3 n1 = vv(front.sign * front.vectors.col(0));
            const Vec3 n2 = vv(back.sign * back.vectors.col(0));

            const Vec3& e = field.exitRays[i].direction;
            const Vec3& l = field.incidentRays[i].direction;
            const Vec3 u = p1[i] - p2[i];
            const double ulen = norm(u);
            const Vec3 t = u / ulen;
            const Vec3 w1 = t * ior + e, w2 = l - t * ior;
            const double w1len = norm(w1), w2len = norm(w2);
            const Vec3 sn1 = w1 / w1len, sn2 = w2 / w2len;
            local += squared_distance(n1, sn1) + squared_distance(n2, sn2);

            if (!gradient) continue;
            // ||N - SN||^2 = 2 - 2 N.SN for unit vectors
            const Vec3 gt = back_normalize(sn1, w1len, n1 * -2.0) * ior - back_normalize(sn2, w2len, n2 * -2.0) * ior;
            const Vec3 gu = back_normalize(t, ulen, gt);
            g1[tid][i] += gu;
            g2[tid][i] -= gu;
            patch_normal_gradient(field.frontPatch[i], front, sn1 * -2.0, [&](int j) { return p1[j]; },
                                  [&](int j, const Vec3& d) { g1[tid][j] += d; });
            patch_normal_gradient(field.backPatch[i], back, sn2 * -2.0, [&](int j) { return p2[j]; },
                                  [&](int j, const Vec3& d) { g2[tid][j] += d; });
        }
        partial[tid] = local;
    }
    double energy = 0.0;
    for (double p : partial) energy += p;

    if (gradient) {
        gradient->setZero(2 * static_cast<Eigen::Index>(n));
        for (int tid = 0; tid < threads; ++tid)
            for (std::size_t i = 0; i < n; ++i) {
                (*gradient)[i] += dot(field.exitRays[i].direction, g1[tid][i]);
                (*gradient)[n + i] += dot(field.incidentRays[i].direction, g2[tid][i]);
            }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (field.neighbors[i].size() < 2) continue;
        for (int j : field.neighbors[i]) {
            const double df = field.dFront[i] - field.dFront[j];
            const double db = field.dBack[i] - field.dBack[j];
            energy += lambda * (df * df + db * db);
            if (gradient) {
                (*gradient)[i] += 2 * lambda * df;
                (*gradient)[j] -= 2 * lambda * df;
                (*gradient)[n + i] += 2 * lambda * db;
                (*gradient)[n + j] -= 2 * lambda * db;
            }
        }
    }
    return energy;
}

DepthSolveResult solve_depths(const DepthField& initial, double ior, double lambda, int maxIters) {
    DepthSolveResult result{initial, {}};
    const std::size_t n = initial.size();
    Eigen::VectorXd x(2 * n);
    for (std::size_t i = 0; i < n; ++i) x[i] = initial.dFront[i], x[n + i] = initial.dBack[i];
    DepthField work = initial;
    auto unpack = [&](const Eigen::VectorXd& v) {
        for (std::size_t i = 0; i < n; ++i) work.dFront[i] = v[i], work.dBack[i] = v[n + i];
    };
    const Objective objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        unpack(v);
        return depth_energy(work, ior, lambda, &g);
    };
    LbfgsOptions opt;
    opt.maxIters = maxIters;
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(2 * n, 1e-3);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(2 * n, std::numeric_limits<double>::infinity());
    try {
        result.optimizer = minimize_lbfgsb(objective, x, lower, upper, opt);
    } catch (const NonFiniteEnergy& e) {
        throw NonFiniteEnergy(std::string("depth solve for view ") + std::to_string(initial.viewIndex) + ": " + e.what());
    }
    unpack(result.optimizer.x);
    result.field = work;
    return result;
}

namespace {

int infer_view_count(std::span<const DepthField> fields, int viewCount) {
    if (viewCount > 0) return viewCount;
    int mx = 0;
    for (const DepthField& f : fields) mx = std::max(mx, f.viewIndex + 1);
    return mx;
}

template <typename FrontAt, typename BackAt>
PointCloud gather(std::span<const DepthField> fields, int viewCount, FrontAt&& frontAt, BackAt&& backAt) {
    if (fields.empty()) throw InvalidArgument("no depth fields");
    const int groups = std::max(1, infer_view_count(fields, viewCount) / 2);
    PointCloud cloud;
    for (const DepthField& f : fields)
        for (std::size_t i = 0; i < f.size(); ++i) {
            cloud.points.push_back(frontAt(f, i));
            cloud.tags.push_back(f.viewIndex % groups);
            cloud.points.push_back(backAt(f, i));
            cloud.tags.push_back(f.viewIndex % groups);
        }
    return cloud;
}

}  // namespace

PointCloud depths_to_cloud(std::span<const DepthField> fields, int viewCount) {
    return gather(
        fields, viewCount, [](const DepthField& f, std::size_t i) { return f.front_point(i); },
        [](const DepthField& f, std::size_t i) { return f.back_point(i); });
}

PointCloud rough_hits_cloud(std::span<const DepthField> fields, int viewCount) {
    return gather(
        fields, viewCount, [](const DepthField& f, std::size_t i) { return f.exitRays[i].at(f.roughFront[i]); },
        [](const DepthField& f, std::size_t i) { return f.incidentRays[i].at(f.roughBack[i]); });
}

void write_depth_table(const std::filesystem::path& path, const DepthField& field) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(12);
    out << "u,v,dFront,dBack\n";
    for (std::size_t i = 0; i < field.size(); ++i)
        out << field.pixels[i].u << ',' << field.pixels[i].v << ',' << field.dFront[i] << ',' << field.dBack[i] << '\n';
}

}  // namespace refrakt
