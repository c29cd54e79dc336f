#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "refrakt/bvh.hpp"

namespace refrakt {

/// Refracts unit `direction` at a surface with unit `normal` facing against it
/// (dot(direction, normal) < 0). `etaRatio` = eta_incident / eta_transmitted.
/// Returns nullopt on total internal reflection.
std::optional<Vec3> snell_refract(const Vec3& direction, const Vec3& normal, double etaRatio);

/// The normal implied by an incoming/transmitted direction pair: the unit vector along
/// etaI*dIn - etaT*dOut, oriented against dIn. Throws NoValidNormal when the pair cannot
/// come from a refraction with these indices.
Vec3 snell_normal(const Vec3& dIncoming, const Vec3& dTransmitted, double etaI, double etaT);

struct SurfaceHit {
    double t = 0.0;
    Vec3 point;
    Vec3 normal;           // outward shading normal, unit
    Vec3 geometricNormal;  // outward face normal, unit
};

/// Closed refracting boundary that rays can be intersected with.
class RefractiveSurface {
  public:
    virtual ~RefractiveSurface() = default;
    virtual std::optional<SurfaceHit> first_hit(const Ray& ray, double tMin = kRayEpsilon) const = 0;
    /// True when the ray meets the surface at all.
    virtual bool hits(const Ray& ray) const { return first_hit(ray).has_value(); }
};

/// Triangle mesh boundary; shading normals are interpolated vertex normals when the mesh
/// has them.
class MeshSurface final : public RefractiveSurface {
  public:
    explicit MeshSurface(TriangleMesh mesh);
    MeshSurface(const MeshSurface&) = delete;
    MeshSurface& operator=(const MeshSurface&) = delete;

    std::optional<SurfaceHit> first_hit(const Ray& ray, double tMin = kRayEpsilon) const override;
    bool hits(const Ray& ray) const override { return bvh_->any_hit(ray); }

    const TriangleMesh& mesh() const { return mesh_; }
    const MeshBvh& bvh() const { return *bvh_; }

  private:
    TriangleMesh mesh_;
    std::unique_ptr<MeshBvh> bvh_;
};

/// Exact sphere, for checks that need zero tessellation error.
class SphereSurface final : public RefractiveSurface {
  public:
    SphereSurface(const Vec3& center, double radius) : center_(center), radius_(radius) {}
    std::optional<SurfaceHit> first_hit(const Ray& ray, double tMin = kRayEpsilon) const override;

  private:
    Vec3 center_;
    double radius_;
};

struct TracedPath {
    Ray exitRay;                   // final free-space ray (the input ray on a miss)
    int refractionCount = 0;
    bool hadTotalInternalReflection = false;
    bool exceededEvents = false;   // stopped at maxEvents while still interacting
    std::vector<Vec3> surfaceHits;
};

/// Follows a ray through a refracting object of index `ior` in air. Each hit refracts;
/// tracing stops at a miss, total internal reflection, or after `maxEvents` refractions.
TracedPath trace_refractive_path(const Ray& ray, const RefractiveSurface& surface, double ior, int maxEvents = 8);

}  // namespace refrakt
