#pragma once

#include <span>
#include <vector>

#include "refrakt/geometry.hpp"
#include "refrakt/point_cloud.hpp"

namespace refrakt {

/// Evenly spaced samples of the rough model that get projected onto the measured cloud.
struct SampleSet {
    std::vector<Vec3> positions;
    std::vector<Vec3> displacements;  // last accepted step
    std::vector<Vec3> normals;        // rough-model normals, carried for orientation
    std::vector<double> radii;
    AdjacencyLists neighbors;  // kNN graph
    double meanSpacing = 0.0;

    std::size_t size() const { return positions.size(); }
};

/// Builds a sample set from Poisson-disk samples: kNN graph with `k` neighbors, zero
/// displacements and every radius at the spacing floor.
SampleSet make_sample_set(const PoissonDiskSamples& samples, int k = 6);
SampleSet make_sample_set(std::vector<Vec3> positions, std::vector<Vec3> normals, double meanSpacing,
                          int k = 6);

/// h_j = mean |p_i - pbar_i| over the rough hits pbar_i within meanSpacing of x_j, floored
/// at meanSpacing (also used for empty neighborhoods).
void adaptive_radii(SampleSet& samples, const PointCloud& target, const PointCloud& roughHits);

/// Weights below this are dropped; the matching cutoff distance is about 1.52 h.
constexpr double kWeightCutoff = 1e-16;

/// Support radius beyond which theta(s) = exp(-s^2 / (h/4)^2) falls below kWeightCutoff.
double support_radius(double h);

/// Energy of moving the samples from `samples.positions` to `candidate`: the
/// theta-weighted l1 distance of each candidate to the targets (weights taken at the
/// current positions) plus alpha/|N_j| times the squared differences of displacements.
/// `gradient`, when given, receives the derivative with respect to each candidate.
double consolidate_energy(const SampleSet& samples, std::span<const Vec3> candidate, const PointCloud& target,
                          double alpha, std::vector<Vec3>* gradient = nullptr);

struct StepStats {
    double energyBefore = 0.0;  // candidate = current positions
    double energyAfter = 0.0;
    double maxDisplacement = 0.0;
    int relaxationSweeps = 0;
    int pinned = 0;  // samples outside every target support
};

/// One reweighted l1-median step with the Laplacian displacement coupling solved by
/// Jacobi relaxation. Never increases consolidate_energy.
SampleSet consolidate_step(const SampleSet& samples, const PointCloud& target, double alpha,
                           StepStats* stats = nullptr);

struct ConsolidateResult {
    SampleSet samples;
    int iterations = 0;
    std::vector<StepStats> steps;
    int descentViolations = 0;
};

/// Computes the radii once, then steps until the largest displacement drops below
/// 1e-3 * meanSpacing or `maxOuterIters` is reached.
ConsolidateResult consolidate(SampleSet samples, const PointCloud& target, const PointCloud& roughHits,
                              double alpha, int maxOuterIters = 50);

}  // namespace refrakt
