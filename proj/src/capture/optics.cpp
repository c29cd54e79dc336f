#include "refrakt/optics.hpp"

#include <cmath>

#include "refrakt/errors.hpp"

namespace refrakt {

std::optional<Vec3> snell_refract(const Vec3& direction, const Vec3& normal, double etaRatio) {
    const double cosI = -dot(direction, normal);
    const double sin2T = etaRatio * etaRatio * std::max(0.0, 1.0 - cosI * cosI);
    if (sin2T > 1.0) return std::nullopt;
    const double cosT = std::sqrt(1.0 - sin2T);
    return normalized(direction * etaRatio + normal * (etaRatio * cosI - cosT));
}

Vec3 snell_normal(const Vec3& dIncoming, const Vec3& dTransmitted, double etaI, double etaT) {
    if (!(etaI > 0 && etaT > 0)) throw InvalidArgument("refractive indices must be positive");
    const Vec3 w = dIncoming * etaI - dTransmitted * etaT;
    const double len = norm(w);
    if (len < 1e-15) throw NoValidNormal("direction pair leaves the normal undetermined");
    Vec3 n = w / len;
    if (dot(n, dIncoming) > 0) n = -n;
    // The pair is feasible only if refracting dIncoming about n reproduces dTransmitted.
    const auto back = snell_refract(dIncoming, n, etaI / etaT);
    if (!back || distance(*back, dTransmitted) > 1e-6) throw NoValidNormal("bending not reachable by refraction");
    return n;
}

MeshSurface::MeshSurface(TriangleMesh mesh) : mesh_(std::move(mesh)), bvh_(std::make_unique<MeshBvh>(mesh_)) {}

std::optional<SurfaceHit> MeshSurface::first_hit(const Ray& ray, double tMin) const {
    const auto h = bvh_->first_hit(ray, tMin);
    if (!h) return std::nullopt;
    SurfaceHit s;
    s.t = h->t;
    s.point = h->point;
    s.geometricNormal = mesh_.face_normal(h->face);
    s.normal = s.geometricNormal;
    if (mesh_.has_normals()) {
        const Face& f = mesh_.faces[h->face];
        const Vec3 n = mesh_.vertexNormals[f[0]] * (1.0 - h->b1 - h->b2) + mesh_.vertexNormals[f[1]] * h->b1 +
                       mesh_.vertexNormals[f[2]] * h->b2;
        if (squared_norm(n) > 1e-24) s.normal = normalized(n);
    }
    return s;
}

std::optional<SurfaceHit> SphereSurface::first_hit(const Ray& ray, double tMin) const {
    const Vec3 oc = ray.origin - center_;
    const double b = dot(oc, ray.direction);
    const double c = squared_norm(oc) - radius_ * radius_;
    const double disc = b * b - c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // numerically stable pair of roots
    const double q = b > 0 ? -b - sq : -b + sq;
    double t0 = q, t1 = (q != 0.0) ? c / q : -b;
    if (t0 > t1) std::swap(t0, t1);
    const double t = t0 > tMin ? t0 : (t1 > tMin ? t1 : -1.0);
    if (t < 0) return std::nullopt;
    SurfaceHit s;
    s.t = t;
    s.point = ray.at(t);
    s.normal = s.geometricNormal = normalized(s.point - center_);
    return s;
}

TracedPath trace_refractive_path(const Ray& ray, const RefractiveSurface& surface, double ior, int maxEvents) {
    if (!(ior > 1.0)) throw InvalidArgument("ior must exceed 1");
    if (maxEvents < 2) throw InvalidArgument("maxEvents must be at least 2");
    TracedPath path;
    path.exitRay = ray;
    Ray current = ray;
    while (true) {
        const auto hit = surface.first_hit(current);
        if (!hit) break;
        if (path.refractionCount == maxEvents) {
            path.exceededEvents = true;
            break;
        }
        // the face orientation decides whether the ray is entering or leaving
        const bool entering = dot(current.direction, hit->geometricNormal) < 0;
        const Vec3 facing = entering ? hit->normal : -hit->normal;
        Vec3 n = facing;
        if (dot(current.direction, n) >= 0) n = entering ? hit->geometricNormal : -hit->geometricNormal;
        path.surfaceHits.push_back(hit->point);
        const auto refracted = snell_refract(current.direction, n, entering ? 1.0 / ior : ior);
        if (!refracted) {
            path.hadTotalInternalReflection = true;
            break;
        }
        ++path.refractionCount;
        current = {hit->point, *refracted};
        path.exitRay = current;
    }
    return path;
}

}  // namespace refrakt
