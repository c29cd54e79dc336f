#include "refrakt/consolidate.hpp"

#include <algorithm>
#include <cmath>

#include "refrakt/errors.hpp"
#include "refrakt/kdtree.hpp"

namespace refrakt {

namespace {

constexpr double kPinnedWeight = 1e-12;
constexpr double kRelaxationTolerance = 1e-6;
constexpr int kMaxSweeps = 2000;

double theta(double squaredDist, double h) {
    const double s = h / 4.0;
    return std::exp(-squaredDist / (s * s));
}

double laplacian_term(const SampleSet& samples, std::span<const Vec3> disp, double alpha,
                      std::vector<Vec3>* gradient) {
    double e = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const auto& nb = samples.neighbors[j];
        if (nb.empty()) continue;
        const double c = alpha / static_cast<double>(nb.size());
        double s = 0.0;
        for (int m : nb) {
            s += squared_distance(disp[j], disp[m]);
            if (gradient) {
                const Vec3 g = (disp[j] - disp[m]) * (2.0 * c);
                (*gradient)[j] += g;
                (*gradient)[m] -= g;
            }
        }
        e += c * s;
    }
    return e;
}

double energy_with_index(const SampleSet& samples, std::span<const Vec3> candidate, const KdTree& index,
                         double alpha, std::vector<Vec3>* gradient = nullptr) {
    const auto n = static_cast<long>(samples.size());
    std::vector<double> data(samples.size(), 0.0);
    if (gradient) gradient->assign(samples.size(), Vec3{});
    std::vector<Vec3> disp(samples.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (long j = 0; j < n; ++j) {
        const Vec3& x = samples.positions[j];
        disp[j] = candidate[j] - x;
        const double h = samples.radii[j];
        double s = 0.0;
        for (const Neighbor& nb : index.radius_neighbors(x, support_radius(h))) {
            const double w = theta(nb.squaredDistance, h);
            if (w < kWeightCutoff) continue;
            const Vec3 diff = candidate[j] - index.points()[nb.index];
            const double d = norm(diff);
            s += w * d;
            if (gradient && d > 0.0) (*gradient)[j] += diff * (w / d);
        }
        data[j] = s;
    }
    double e = 0.0;
    for (double d : data) e += d;
    return e + laplacian_term(samples, disp, alpha, gradient);
}

void check_sizes(const SampleSet& samples) {
    if (samples.radii.size() != samples.size() || samples.neighbors.size() != samples.size())
        throw InvalidArgument("sample set arrays disagree in size");
}

}  // namespace

double support_radius(double h) { return h / 4.0 * std::sqrt(-std::log(kWeightCutoff)); }

SampleSet make_sample_set(std::vector<Vec3> positions, std::vector<Vec3> normals, double meanSpacing, int k) {
    if (!(meanSpacing > 0.0)) throw InvalidArgument("mean spacing must be positive");
    SampleSet s;
    s.neighbors = knn_graph(positions, std::min<int>(k, static_cast<int>(positions.size()) - 1));
    s.displacements.assign(positions.size(), Vec3{});
    s.radii.assign(positions.size(), meanSpacing);
    s.positions = std::move(positions);
    s.normals = std::move(normals);
    s.meanSpacing = meanSpacing;
    return s;
}

SampleSet make_sample_set(const PoissonDiskSamples& samples, int k) {
    return make_sample_set(samples.cloud.points, samples.cloud.normals, samples.meanSpacing, k);
}

void adaptive_radii(SampleSet& samples, const PointCloud& target, const PointCloud& roughHits) {
    if (target.size() != roughHits.size()) throw InvalidArgument("target and rough hits must pair up");
    const double r = samples.meanSpacing;
    samples.radii.assign(samples.size(), r);
    if (target.empty()) return;
    std::vector<double> gap(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) gap[i] = distance(target.points[i], roughHits.points[i]);
    const KdTree index(roughHits.points);
    const auto n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (long j = 0; j < n; ++j) {
        const std::vector<int> near = index.radius_search(samples.positions[j], r);
        if (near.empty()) continue;
        double sum = 0.0;
        for (int i : near) sum += gap[i];
        samples.radii[j] = std::max(r, sum / static_cast<double>(near.size()));
    }
}

double consolidate_energy(const SampleSet& samples, std::span<const Vec3> candidate, const PointCloud& target,
                          double alpha, std::vector<Vec3>* gradient) {
    check_sizes(samples);
    if (candidate.size() != samples.size()) throw InvalidArgument("candidate size mismatch");
    const KdTree index(target.points);
    return energy_with_index(samples, candidate, index, alpha, gradient);
}

SampleSet consolidate_step(const SampleSet& samples, const PointCloud& target, double alpha, StepStats* stats) {
    check_sizes(samples);
    SampleSet next = samples;
    next.displacements.assign(samples.size(), Vec3{});
    StepStats local;
    if (target.empty() || samples.size() == 0) {
        if (stats) *stats = local;
        return next;
    }
    const KdTree index(target.points);
    const auto n = static_cast<long>(samples.size());
    const double floorDist = 1e-9 * samples.meanSpacing;

    // Weiszfeld majorizer of the data term at the current positions
    std::vector<double> weight(samples.size(), 0.0);
    std::vector<Vec3> pull(samples.size());
    std::vector<char> pinned(samples.size(), 0);
#pragma omp parallel for schedule(dynamic, 64)
    for (long j = 0; j < n; ++j) {
        const Vec3& x = samples.positions[j];
        const double h = samples.radii[j];
        double thetaSum = 0.0, w = 0.0;
        Vec3 t;
        for (const Neighbor& nb : index.radius_neighbors(x, support_radius(h))) {
            const double th = theta(nb.squaredDistance, h);
            if (th < kWeightCutoff) continue;
            thetaSum += th;
            const double a = th / std::max(std::sqrt(nb.squaredDistance), floorDist);
            w += a;
            t += index.points()[nb.index] * a;
        }
        if (thetaSum < kPinnedWeight) {
            pinned[j] = 1;
            continue;
        }
        weight[j] = w;
        pull[j] = t - x * w;
    }

    // symmetric coupling weights of the displacement Laplacian
    std::vector<std::vector<std::pair<int, double>>> coupling(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const auto& nb = samples.neighbors[j];
        if (nb.empty()) continue;
        const double c = alpha / static_cast<double>(nb.size());
        for (int m : nb) {
            coupling[j].emplace_back(m, c);
            coupling[m].emplace_back(static_cast<int>(j), c);
        }
    }

    std::vector<Vec3> disp(samples.size()), fresh(samples.size());
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double change = 0.0, scale = 0.0;
#pragma omp parallel for schedule(static) reduction(max : change, scale)
        for (long j = 0; j < n; ++j) {
            if (pinned[j]) {
                fresh[j] = Vec3{};
                continue;
            }
            Vec3 rhs = pull[j];
            double diag = weight[j];
            for (const auto& [m, c] : coupling[j]) {
                rhs += disp[m] * (2.0 * c);
                diag += 2.0 * c;
            }
            fresh[j] = rhs / diag;
            change = std::max(change, norm(fresh[j] - disp[j]));
            scale = std::max(scale, norm(fresh[j]));
        }
        disp.swap(fresh);
        if (change <= kRelaxationTolerance * scale) {
            ++sweep;
            break;
        }
    }

    local.relaxationSweeps = sweep;
    local.pinned = static_cast<int>(std::count(pinned.begin(), pinned.end(), 1));
    local.energyBefore = energy_with_index(samples, samples.positions, index, alpha);

    // safeguard against an inexact inner solve: shrink the step until the energy drops
    std::vector<Vec3> candidate(samples.size());
    double factor = 1.0;
    for (int attempt = 0; attempt < 40; ++attempt, factor *= 0.5) {
        for (std::size_t j = 0; j < samples.size(); ++j) candidate[j] = samples.positions[j] + disp[j] * factor;
        local.energyAfter = energy_with_index(samples, candidate, index, alpha);
        if (local.energyAfter <= local.energyBefore) break;
    }
    if (local.energyAfter > local.energyBefore) {
        candidate = samples.positions;
        local.energyAfter = local.energyBefore;
        factor = 0.0;
    }
    for (std::size_t j = 0; j < samples.size(); ++j) {
        next.displacements[j] = disp[j] * factor;
        next.positions[j] = candidate[j];
        local.maxDisplacement = std::max(local.maxDisplacement, norm(next.displacements[j]));
    }
    if (stats) *stats = local;
    return next;
}

ConsolidateResult consolidate(SampleSet samples, const PointCloud& target, const PointCloud& roughHits,
                              double alpha, int maxOuterIters) {
    adaptive_radii(samples, target, roughHits);
    ConsolidateResult result;
    for (int it = 0; it < maxOuterIters; ++it) {
        StepStats st;
        samples = consolidate_step(samples, target, alpha, &st);
        result.steps.push_back(st);
        ++result.iterations;
        if (st.energyAfter > st.energyBefore) ++result.descentViolations;
        if (st.maxDisplacement < 1e-3 * samples.meanSpacing) break;
    }
    result.samples = std::move(samples);
    return result;
}

}  // namespace refrakt
