#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "refrakt/camera.hpp"
#include "refrakt/capture.hpp"
#include "refrakt/consolidate.hpp"
#include "refrakt/geometry.hpp"
#include "refrakt/mesh.hpp"

namespace refrakt {

/// Exact Euclidean distance (pixels) to the crack boundary between on and off pixels of a
/// binary image, stored on the half-pixel lattice and read back by bilinear interpolation.
/// Pixels outside the image count as off.
class BoundaryDistance {
  public:
    BoundaryDistance() = default;
    BoundaryDistance(std::span<const std::uint8_t> bitmap, int width, int height);
    explicit BoundaryDistance(const SilhouetteMask& mask) : BoundaryDistance(mask.bitmap, mask.width, mask.height) {}

    /// Distance at continuous pixel coordinates (pixel (i, j) spans [i, i+1) x [j, j+1)).
    double at(const Vec2& q) const;
    /// Distance and its gradient with respect to q.
    double at(const Vec2& q, Vec2& gradient) const;

    /// Boundary crack midpoints, in pixel coordinates.
    const std::vector<Vec2>& boundary() const { return boundary_; }
    bool empty() const { return boundary_.empty(); }

  private:
    int nodesX_ = 0, nodesY_ = 0;
    std::vector<double> dist_;
    std::vector<Vec2> boundary_;
};

/// Samples projected into one view, the region they cover and which of them lie on its
/// boundary.
struct ProjectedShape {
    int viewIndex = 0;
    int width = 0, height = 0;
    std::vector<Vec2> projections;
    std::vector<std::uint8_t> filled;
    std::vector<std::uint8_t> boundaryFlags;
    BoundaryDistance region;

    std::size_t boundary_count() const;
};

// Wider bands flag samples a pixel inside the contour and push them outward, which
// inflates the model.
constexpr double kBoundaryBandPx = 0.75;

/// Projects the samples, rasterizes them and their graph edges, flood-fills the exterior
/// from the image border and flags samples within `bandPx` of the filled region's
/// boundary. Throws DegenerateProjection when three or more samples land on fewer than
/// three distinct pixels.
ProjectedShape project_and_fill(std::span<const Vec3> positions, const Camera& camera, const AdjacencyLists& graph,
                                int viewIndex = 0, double bandPx = kBoundaryBandPx);

/// The captured side: cameras and mask boundary distances of every silhouette view.
struct SilhouetteTargets {
    std::vector<Camera> cameras;
    std::vector<BoundaryDistance> maskDistance;
    std::vector<const SilhouetteMask*> masks;

    SilhouetteTargets(std::span<const SilhouetteMask> masks, std::span<const Camera> cameras);
    std::size_t size() const { return cameras.size(); }
};

/// sum_j sum_v delta_j^v D_v(q_j^v) + beta/|N_j| sum_{j' in N_j} |Delta_j - Delta_j'|^2 with
/// Delta = positions - base, delta taken from `shapes` and N from `graph`. Fills
/// `gradient` (3 per sample, x y z) when non-null.
double silhouette_energy(std::span<const Vec3> positions, std::span<const Vec3> base, const AdjacencyLists& graph,
                         std::span<const ProjectedShape> shapes, const SilhouetteTargets& targets, double beta,
                         std::vector<double>* gradient = nullptr);

/// sum over views of delta-flagged D, and the number of flags.
struct BoundaryFit {
    double total = 0.0;
    std::size_t flagged = 0;
    double mean() const { return flagged ? total / static_cast<double>(flagged) : 0.0; }
};
BoundaryFit boundary_fit(std::span<const ProjectedShape> shapes, const SilhouetteTargets& targets);

std::vector<ProjectedShape> project_all(std::span<const Vec3> positions, const SilhouetteTargets& targets,
                                        const AdjacencyLists& graph, double bandPx = kBoundaryBandPx);

struct SilhouetteOptions {
    double beta = 1.0;
    int maxRounds = 20;
    int knn = 6;
    int lbfgsIters = 50;
    double stopChangePx = 0.05;
    double bandPx = kBoundaryBandPx;
};

struct SilhouetteResult {
    SampleSet samples;
    int rounds = 0;
    int rejectedRounds = 0;
    std::vector<BoundaryFit> fitTrace;   // before the first round, then per accepted round
    std::vector<double> energyTrace;     // every optimizer iterate, in order
    int descentViolations = 0;
    double finalEnergy = 0.0;
};

/// Alternates quasi-Newton descent of silhouette_energy (flags and graph frozen) with a
/// refresh of graph, projections and flags. A round whose refreshed boundary fit gets
/// worse is retried at half the step, and dropped if that keeps failing.
SilhouetteResult optimize_silhouettes(SampleSet samples, const SilhouetteTargets& targets,
                                      const SilhouetteOptions& options);

/// Mean distance (pixels) between the model's rendered contour and the mask contour,
/// averaged over both directions and all views.
double contour_error(const TriangleMesh& model, std::span<const SilhouetteMask> masks,
                     std::span<const Camera> cameras);

/// Debug image: mask region dark gray, projected region light gray, mask boundary white,
/// boundary-flagged projections black.
void write_overlay_pgm(const std::filesystem::path& path, const SilhouetteMask& mask, const ProjectedShape& shape);

}  // namespace refrakt
