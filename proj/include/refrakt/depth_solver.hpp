#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "refrakt/capture.hpp"
#include "refrakt/lbfgsb.hpp"
#include "refrakt/point_cloud.hpp"

namespace refrakt {

enum class RejectReason { MultiRefraction, TotalInternalReflection, Miss };

const char* to_string(RejectReason r);

struct FilteredCorrespondences {
    std::vector<RayRayCorrespondence> valid;
    std::vector<std::pair<RayRayCorrespondence, RejectReason>> rejected;

    double valid_fraction() const {
        const std::size_t total = valid.size() + rejected.size();
        return total ? static_cast<double>(valid.size()) / static_cast<double>(total) : 0.0;
    }
};

/// Keeps correspondences whose exit ray, traced back through the rough model, refracts
/// exactly twice without total internal reflection and whose incident ray meets the model.
/// Correspondences that show no deflection at all (the camera saw the monitor directly)
/// are rejected as misses.
FilteredCorrespondences filter_correspondences(std::span<const RayRayCorrespondence> correspondences,
                                               const MeshSurface& roughModel, double ior);

/// Front/back depth hypotheses for the valid pixels of one view.
///
/// p1 = exitRay.at(dFront) is where light leaves the object toward the camera and
/// p2 = incidentRay.at(dBack) where it entered. The rough-model depths the solve started
/// from are kept alongside.
struct DepthField {
    int viewIndex = 0;
    std::vector<PixelCoord> pixels;
    std::vector<Ray> exitRays;
    std::vector<Ray> incidentRays;
    std::vector<double> dFront, dBack;
    std::vector<double> roughFront, roughBack;
    /// 4-connected neighbors among the entries (indices into the arrays above).
    std::vector<std::vector<int>> neighbors;
    /// Frozen PCA neighborhoods over the front and back point sets (each includes itself).
    std::vector<std::vector<int>> frontPatch, backPatch;
    /// Outward rough-model normals that fix the sign of the PCA normals.
    std::vector<Vec3> frontRef, backRef;

    std::size_t size() const { return pixels.size(); }
    Vec3 front_point(std::size_t i) const { return exitRays[i].at(dFront[i]); }
    Vec3 back_point(std::size_t i) const { return incidentRays[i].at(dBack[i]); }
};

/// Builds a field from filtered correspondences, with depths at the rough-model hits.
/// Pixels whose incident ray misses the model are dropped.
///
/// With a positive `standoff` every ray origin is moved to that distance before its
/// rough-model hit, so all depths start equal and the smoothness term acts on the
/// deviation from the rough model rather than on the rig geometry. Depths stay positive,
/// which caps outward motion at `standoff`.
DepthField initial_depth_field(std::span<const RayRayCorrespondence> valid, const MeshSurface& roughModel,
                               int pcaNeighbors = 20, double standoff = 0.0);

/// Outward Snell normals at the exit point p1 and the entry point p2 of a light path
/// that enters along `incident`, crosses p2 -> p1 inside, and leaves toward the camera
/// against `exitDirection`. Computed without a feasibility check so the energy stays smooth.
struct PathNormals {
    Vec3 front;
    Vec3 back;
};
PathNormals path_snell_normals(const Vec3& p1, const Vec3& p2, const Vec3& exitDirection, const Vec3& incident,
                               double ior);

/// Outward PCA normal of a point patch, signed to agree with `reference`.
Vec3 patch_normal(std::span<const Vec3> pts, const Vec3& reference);

/// sum_i ||N1 - SN1||^2 + ||N2 - SN2||^2 + lambda * sum over 4-neighbor pairs (both
/// orders) of squared front and back depth differences. Pixels with fewer than two
/// neighbors contribute only normal terms. When `gradient` is non-null it receives
/// d/d(dFront) in the first size() slots and d/d(dBack) in the rest.
double depth_energy(const DepthField& field, double ior, double lambda, Eigen::VectorXd* gradient = nullptr);

struct DepthSolveResult {
    DepthField field;
    LbfgsResult optimizer;
};

/// Minimizes depth_energy over the depths with positivity bounds.
DepthSolveResult solve_depths(const DepthField& initial, double ior, double lambda, int maxIters = 200);

/// Union of all p1 and p2 positions, tagged with the opposite-view pair the source view
/// belongs to (view % (viewCount / 2)). `viewCount` 0 infers it from the fields.
PointCloud depths_to_cloud(std::span<const DepthField> fields, int viewCount = 0);
/// The rough-model points matching depths_to_cloud entry for entry.
PointCloud rough_hits_cloud(std::span<const DepthField> fields, int viewCount = 0);

/// Writes u, v, dFront, dBack per entry.
void write_depth_table(const std::filesystem::path& path, const DepthField& field);

}  // namespace refrakt
