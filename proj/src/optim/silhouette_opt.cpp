#include "refrakt/silhouette_opt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "refrakt/errors.hpp"
#include "refrakt/lbfgsb.hpp"
#include "refrakt/optics.hpp"
#include "refrakt/scene.hpp"

namespace refrakt {

namespace {

constexpr double kFar = 1e20;
// distance reported when an image has no boundary at all
constexpr double kNoBoundary = 1e6;

// Felzenszwalb-Huttenlocher 1D squared distance transform of f into out.
void dt_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    auto cross = [&](int q, int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p)); };
    int k = 0;
    v[0] = 0;
    z[0] = -kFar;
    z[1] = kFar;
    for (int q = 1; q < n; ++q) {
        double s = cross(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = cross(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kFar;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double d = q - v[k];
        out[q] = d * d + f[v[k]];
    }
}

Vec3 at3(const Eigen::VectorXd& x, std::size_t j) { return {x[3 * j], x[3 * j + 1], x[3 * j + 2]}; }

Eigen::VectorXd pack(std::span<const Vec3> pts) {
    Eigen::VectorXd x(3 * pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) {
        x[3 * j] = pts[j].x;
        x[3 * j + 1] = pts[j].y;
        x[3 * j + 2] = pts[j].z;
    }
    return x;
}

std::vector<Vec3> unpack(const Eigen::VectorXd& x) {
    std::vector<Vec3> pts(x.size() / 3);
    for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = at3(x, j);
    return pts;
}

double laplacian_energy(std::span<const Vec3> positions, std::span<const Vec3> base, const AdjacencyLists& graph,
                        double beta, std::vector<double>* gradient) {
    double e = 0.0;
    for (std::size_t j = 0; j < positions.size(); ++j) {
        const auto& nb = graph[j];
        if (nb.empty()) continue;
        const double c = beta / static_cast<double>(nb.size());
        const Vec3 dj = positions[j] - base[j];
        for (int m : nb) {
            const Vec3 diff = dj - (positions[m] - base[m]);
            e += c * squared_norm(diff);
            if (gradient) {
                const Vec3 g = diff * (2.0 * c);
                auto& gr = *gradient;
                gr[3 * j] += g.x, gr[3 * j + 1] += g.y, gr[3 * j + 2] += g.z;
                gr[3 * m] -= g.x, gr[3 * m + 1] -= g.y, gr[3 * m + 2] -= g.z;
            }
        }
    }
    return e;
}

}  // namespace

BoundaryDistance::BoundaryDistance(std::span<const std::uint8_t> bitmap, int width, int height)
    : nodesX_(2 * width + 1), nodesY_(2 * height + 1) {
    if (width <= 0 || height <= 0 || bitmap.size() != static_cast<std::size_t>(width) * height)
        throw InvalidArgument("bitmap size does not match its dimensions");
    auto on = [&](int u, int v) {
        return u >= 0 && v >= 0 && u < width && v < height && bitmap[static_cast<std::size_t>(v) * width + u];
    };
    dist_.assign(static_cast<std::size_t>(nodesX_) * nodesY_, kFar);
    auto seed = [&](int a, int b) { dist_[static_cast<std::size_t>(b) * nodesX_ + a] = 0.0; };
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            if (!on(u, v)) continue;
            if (!on(u - 1, v)) {
                seed(2 * u, 2 * v + 1);
                boundary_.push_back({double(u), v + 0.5});
            }
            if (!on(u + 1, v)) {
                seed(2 * u + 2, 2 * v + 1);
                boundary_.push_back({u + 1.0, v + 0.5});
            }
            if (!on(u, v - 1)) {
                seed(2 * u + 1, 2 * v);
                boundary_.push_back({u + 0.5, double(v)});
            }
            if (!on(u, v + 1)) {
                seed(2 * u + 1, 2 * v + 2);
                boundary_.push_back({u + 0.5, v + 1.0});
            }
        }
    if (boundary_.empty()) {
        std::fill(dist_.begin(), dist_.end(), kNoBoundary);
        return;
    }
    const int longest = std::max(nodesX_, nodesY_);
    std::vector<double> f, out(longest);
    std::vector<int> vtx(longest);
    std::vector<double> z(longest + 1);
    for (int b = 0; b < nodesY_; ++b) {
        f.assign(dist_.begin() + static_cast<long>(b) * nodesX_, dist_.begin() + static_cast<long>(b + 1) * nodesX_);
        out.resize(f.size());
        dt_1d(f, out, vtx, z);
        std::copy(out.begin(), out.end(), dist_.begin() + static_cast<long>(b) * nodesX_);
    }
    f.resize(nodesY_);
    out.resize(nodesY_);
    for (int a = 0; a < nodesX_; ++a) {
        for (int b = 0; b < nodesY_; ++b) f[b] = dist_[static_cast<std::size_t>(b) * nodesX_ + a];
        dt_1d(f, out, vtx, z);
        for (int b = 0; b < nodesY_; ++b) dist_[static_cast<std::size_t>(b) * nodesX_ + a] = out[b];
    }
    // lattice spacing is half a pixel
    for (double& d : dist_) d = 0.5 * std::sqrt(d);
}

double BoundaryDistance::at(const Vec2& q) const {
    Vec2 g;
    return at(q, g);
}

double BoundaryDistance::at(const Vec2& q, Vec2& gradient) const {
    gradient = {};
    if (dist_.empty()) return kNoBoundary;
    double a = 2.0 * q.x, b = 2.0 * q.y;
    const bool clampA = a < 0.0 || a > nodesX_ - 1, clampB = b < 0.0 || b > nodesY_ - 1;
    a = std::clamp(a, 0.0, double(nodesX_ - 1));
    b = std::clamp(b, 0.0, double(nodesY_ - 1));
    const int i0 = std::min(static_cast<int>(a), nodesX_ - 2);
    const int j0 = std::min(static_cast<int>(b), nodesY_ - 2);
    const double fa = a - i0, fb = b - j0;
    auto node = [&](int i, int j) { return dist_[static_cast<std::size_t>(j) * nodesX_ + i]; };
    const double d00 = node(i0, j0), d10 = node(i0 + 1, j0), d01 = node(i0, j0 + 1), d11 = node(i0 + 1, j0 + 1);
    const double top = d00 + (d10 - d00) * fa, bottom = d01 + (d11 - d01) * fa;
    if (!clampA) gradient.x = 2.0 * ((d10 - d00) * (1 - fb) + (d11 - d01) * fb);
    if (!clampB) gradient.y = 2.0 * (bottom - top);
    return top + (bottom - top) * fb;
}

std::size_t ProjectedShape::boundary_count() const {
    return static_cast<std::size_t>(std::count(boundaryFlags.begin(), boundaryFlags.end(), 1));
}

ProjectedShape project_and_fill(std::span<const Vec3> positions, const Camera& camera, const AdjacencyLists& graph,
                                int viewIndex, double bandPx) {
    ProjectedShape s;
    s.viewIndex = viewIndex;
    s.width = camera.width;
    s.height = camera.height;
    const int W = s.width, H = s.height;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.projections.assign(positions.size(), {nan, nan});
    std::vector<std::uint8_t> mark(static_cast<std::size_t>(W) * H, 0);
    auto inside = [&](long u, long v) { return u >= 0 && v >= 0 && u < W && v < H; };
    std::set<long> distinct;
    for (std::size_t j = 0; j < positions.size(); ++j) {
        const auto q = camera.project(positions[j]);
        if (!q) continue;
        s.projections[j] = *q;
        const long u = static_cast<long>(std::floor(q->x)), v = static_cast<long>(std::floor(q->y));
        if (!inside(u, v)) continue;
        mark[v * W + u] = 1;
        distinct.insert(v * W + u);
    }
    if (positions.size() >= 3 && distinct.size() < 3)
        throw DegenerateProjection("samples cover fewer than three pixels in view " + std::to_string(viewIndex));

    for (std::size_t j = 0; j < positions.size() && j < graph.size(); ++j) {
        const Vec2& a = s.projections[j];
        if (std::isnan(a.x)) continue;
        for (int m : graph[j]) {
            const Vec2& b = s.projections[m];
            if (std::isnan(b.x)) continue;
            long x0 = static_cast<long>(std::floor(a.x)), y0 = static_cast<long>(std::floor(a.y));
            const long x1 = static_cast<long>(std::floor(b.x)), y1 = static_cast<long>(std::floor(b.y));
            const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
            if (dx - dy > 2L * (W + H)) continue;
            const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
            long err = dx + dy;
            while (true) {
                if (inside(x0, y0)) mark[y0 * W + x0] = 1;
                if (x0 == x1 && y0 == y1) break;
                const long e2 = 2 * err;
                if (e2 >= dy) err += dy, x0 += sx;
                if (e2 <= dx) err += dx, y0 += sy;
            }
        }
    }

    // exterior = unmarked pixels 4-connected to the image border
    std::vector<std::uint8_t> exterior(mark.size(), 0);
    std::deque<long> queue;
    auto push = [&](long u, long v) {
        if (!inside(u, v)) return;
        const long id = v * W + u;
        if (mark[id] || exterior[id]) return;
        exterior[id] = 1;
        queue.push_back(id);
    };
    for (long u = 0; u < W; ++u) push(u, 0), push(u, H - 1);
    for (long v = 0; v < H; ++v) push(0, v), push(W - 1, v);
    while (!queue.empty()) {
        const long id = queue.front();
        queue.pop_front();
        const long u = id % W, v = id / W;
        push(u - 1, v), push(u + 1, v), push(u, v - 1), push(u, v + 1);
    }
    s.filled.resize(mark.size());
    for (std::size_t i = 0; i < mark.size(); ++i) s.filled[i] = exterior[i] ? 0 : 1;
    s.region = BoundaryDistance(s.filled, W, H);

    s.boundaryFlags.assign(positions.size(), 0);
    for (std::size_t j = 0; j < positions.size(); ++j) {
        const Vec2& q = s.projections[j];
        if (std::isnan(q.x) || !inside(static_cast<long>(std::floor(q.x)), static_cast<long>(std::floor(q.y))))
            continue;
        s.boundaryFlags[j] = s.region.at(q) <= bandPx ? 1 : 0;
    }
    return s;
}

SilhouetteTargets::SilhouetteTargets(std::span<const SilhouetteMask> maskList, std::span<const Camera> cameraList)
    : cameras(cameraList.begin(), cameraList.end()) {
    if (maskList.size() != cameraList.size()) throw InvalidArgument("one camera per mask required");
    maskDistance.resize(maskList.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long v = 0; v < static_cast<long>(maskList.size()); ++v) maskDistance[v] = BoundaryDistance(maskList[v]);
    for (const SilhouetteMask& m : maskList) masks.push_back(&m);
}

std::vector<ProjectedShape> project_all(std::span<const Vec3> positions, const SilhouetteTargets& targets,
                                        const AdjacencyLists& graph, double bandPx) {
    std::vector<ProjectedShape> shapes(targets.size());
    const long n = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long v = 0; v < n; ++v) shapes[v] = project_and_fill(positions, targets.cameras[v], graph, static_cast<int>(v), bandPx);
    return shapes;
}

BoundaryFit boundary_fit(std::span<const ProjectedShape> shapes, const SilhouetteTargets& targets) {
    BoundaryFit fit;
    for (std::size_t v = 0; v < shapes.size(); ++v)
        for (std::size_t j = 0; j < shapes[v].boundaryFlags.size(); ++j) {
            if (!shapes[v].boundaryFlags[j]) continue;
            fit.total += targets.maskDistance[v].at(shapes[v].projections[j]);
            ++fit.flagged;
        }
    return fit;
}

double silhouette_energy(std::span<const Vec3> positions, std::span<const Vec3> base, const AdjacencyLists& graph,
                         std::span<const ProjectedShape> shapes, const SilhouetteTargets& targets, double beta,
                         std::vector<double>* gradient) {
    if (positions.size() != base.size() || graph.size() != positions.size())
        throw InvalidArgument("positions, base and graph must match in size");
    if (shapes.size() != targets.size()) throw InvalidArgument("one projected shape per view required");
    const std::size_t n = positions.size();
    if (gradient) gradient->assign(3 * n, 0.0);
    const long views = static_cast<long>(shapes.size());
    std::vector<double> viewEnergy(shapes.size(), 0.0);
    std::vector<std::vector<double>> viewGrad(gradient ? shapes.size() : 0);
#pragma omp parallel for schedule(dynamic, 1)
    for (long v = 0; v < views; ++v) {
        const ProjectedShape& s = shapes[v];
        const Camera& cam = targets.cameras[v];
        if (gradient) viewGrad[v].assign(3 * n, 0.0);
        double e = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!s.boundaryFlags[j]) continue;
            const auto q = cam.project(positions[j]);
            if (!q) continue;
            Vec2 g;
            e += targets.maskDistance[v].at(*q, g);
            if (gradient) {
                const auto& [du, dv] = cam.projection_jacobian(positions[j]);
                const Vec3 gx = du * g.x + dv * g.y;
                viewGrad[v][3 * j] += gx.x;
                viewGrad[v][3 * j + 1] += gx.y;
                viewGrad[v][3 * j + 2] += gx.z;
            }
        }
        viewEnergy[v] = e;
    }
    double e = 0.0;
    for (long v = 0; v < views; ++v) {
        e += viewEnergy[v];
        if (gradient)
            for (std::size_t k = 0; k < 3 * n; ++k) (*gradient)[k] += viewGrad[v][k];
    }
    return e + laplacian_energy(positions, base, graph, beta, gradient);
}

SilhouetteResult optimize_silhouettes(SampleSet samples, const SilhouetteTargets& targets,
                                      const SilhouetteOptions& options) {
    SilhouetteResult result;
    std::vector<Vec3> x = samples.positions;
    const std::vector<Vec3> start = x;
    AdjacencyLists graph = knn_graph(x, options.knn);
    std::vector<ProjectedShape> shapes = project_all(x, targets, graph, options.bandPx);
    BoundaryFit fit = boundary_fit(shapes, targets);
    result.fitTrace.push_back(fit);

    LbfgsOptions lopt;
    lopt.maxIters = options.lbfgsIters;
    for (int round = 0; round < options.maxRounds; ++round) {
        const std::vector<Vec3> base = x;
        const Objective objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
            std::vector<double> g;
            const double e = silhouette_energy(unpack(v), base, graph, shapes, targets, options.beta, &g);
            grad = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<long>(g.size()));
            return e;
        };
        const LbfgsResult r = minimize_lbfgs(objective, pack(base), lopt);
        for (std::size_t k = 0; k < r.energyTrace.size(); ++k) {
            if (k > 0 && r.energyTrace[k] > r.energyTrace[k - 1]) ++result.descentViolations;
            result.energyTrace.push_back(r.energyTrace[k]);
        }
        result.finalEnergy = r.energy;
        const std::vector<Vec3> proposal = unpack(r.x);

        bool accepted = false;
        double step = 1.0;
        std::vector<Vec3> candidate(x.size());
        AdjacencyLists nextGraph;
        std::vector<ProjectedShape> nextShapes;
        BoundaryFit nextFit;
        for (int attempt = 0; attempt < 6 && !accepted; ++attempt, step *= 0.5) {
            for (std::size_t j = 0; j < x.size(); ++j) candidate[j] = base[j] + (proposal[j] - base[j]) * step;
            nextGraph = knn_graph(candidate, options.knn);
            nextShapes = project_all(candidate, targets, nextGraph, options.bandPx);
            nextFit = boundary_fit(nextShapes, targets);
            accepted = nextFit.total <= fit.total;
        }
        if (!accepted) {
            ++result.rejectedRounds;
            break;
        }
        const double change = std::abs(nextFit.mean() - fit.mean());
        x = candidate;
        graph = std::move(nextGraph);
        shapes = std::move(nextShapes);
        fit = nextFit;
        result.fitTrace.push_back(fit);
        ++result.rounds;
        if (change < options.stopChangePx) break;
    }
    for (std::size_t j = 0; j < x.size(); ++j) samples.displacements[j] = x[j] - start[j];
    samples.positions = std::move(x);
    samples.neighbors = std::move(graph);
    result.samples = std::move(samples);
    return result;
}

double contour_error(const TriangleMesh& model, std::span<const SilhouetteMask> masks, std::span<const Camera> cameras) {
    if (masks.size() != cameras.size()) throw InvalidArgument("one camera per mask required");
    if (masks.empty()) return 0.0;
    const MeshSurface surface(model);
    std::vector<double> perView(masks.size(), 0.0);
    const long n = static_cast<long>(masks.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long v = 0; v < n; ++v) {
        const SilhouetteMask rendered = render_silhouette(surface, cameras[v], static_cast<int>(v));
        const BoundaryDistance toMask(masks[v]), toModel(rendered);
        auto mean_to = [](const BoundaryDistance& from, const BoundaryDistance& to) {
            if (from.empty()) return 0.0;
            double s = 0.0;
            for (const Vec2& b : from.boundary()) s += to.at(b);
            return s / static_cast<double>(from.boundary().size());
        };
        perView[v] = 0.5 * (mean_to(toModel, toMask) + mean_to(toMask, toModel));
    }
    double s = 0.0;
    for (double e : perView) s += e;
    return s / static_cast<double>(perView.size());
}

void write_overlay_pgm(const std::filesystem::path& path, const SilhouetteMask& mask, const ProjectedShape& shape) {
    if (mask.width != shape.width || mask.height != shape.height)
        throw InvalidArgument("mask and projection differ in size");
    std::vector<std::uint8_t> img(static_cast<std::size_t>(mask.width) * mask.height, 0);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(mask.bitmap[i] * 70 + shape.filled[i] * 110);
    for (const PixelCoord& p : mask.boundaryPixels) img[static_cast<std::size_t>(p.v) * mask.width + p.u] = 255;
    for (std::size_t j = 0; j < shape.projections.size(); ++j) {
        if (!shape.boundaryFlags[j]) continue;
        const auto u = static_cast<int>(std::floor(shape.projections[j].x));
        const auto v = static_cast<int>(std::floor(shape.projections[j].y));
        if (u >= 0 && v >= 0 && u < mask.width && v < mask.height) img[static_cast<std::size_t>(v) * mask.width + u] = 20;
    }
    write_pgm(path, mask.width, mask.height, img);
}

}  // namespace refrakt
