#pragma once

#include <memory>

#include "refrakt/marching_cubes.hpp"
#include "refrakt/point_cloud.hpp"

namespace refrakt {

/// Watertight remeshing of an oriented point set. Implementations are interchangeable.
class Surfacer {
  public:
    virtual ~Surfacer() = default;
    /// `gridResolution` cells span the longest side of the cloud's bounding box.
    virtual TriangleMesh reconstruct(const PointCloud& cloud, int gridResolution) const = 0;
};

/// Implicit moving least squares: f(x) = sum w_i (x - p_i).n_i / sum w_i over the nearest
/// samples with Gaussian weights of width sigma, zero set extracted by marching cubes and
/// reduced to its largest component.
class ImlsSurfacer final : public Surfacer {
  public:
    struct Options {
        int neighbors = 12;
        double sigmaScale = 1.0;  // sigma = sigmaScale * mean spacing
        int normalCheckK = 6;
        double maxFlippedPairs = 0.05;
    };
    ImlsSurfacer() = default;
    explicit ImlsSurfacer(const Options& options) : options_(options) {}
    TriangleMesh reconstruct(const PointCloud& cloud, int gridResolution) const override;

    /// The implicit field itself, for inspection and tests.
    ScalarGrid field(const PointCloud& cloud, int gridResolution) const;

  private:
    Options options_;
};

constexpr std::size_t kMinSurfacePoints = 100;

/// Throws InsufficientPoints below kMinSurfacePoints and InconsistentNormals when more
/// than `maxFlipped` of the k-nearest-neighbor pairs have opposing normals.
void check_oriented_cloud(const PointCloud& cloud, int k = 6, double maxFlipped = 0.05);

/// Default surfacer.
TriangleMesh reconstruct_mesh(const PointCloud& cloud, int gridResolution);

}  // namespace refrakt
