#include "refrakt/capture.hpp"

#include <cmath>

#include "refrakt/errors.hpp"

namespace refrakt {

void MonitorPlane::validate() const {
    if (resX <= 0 || resY <= 0) throw InvalidArgument("monitor resolution must be positive");
    if (!(pixelPitch > 0)) throw InvalidArgument("monitor pixel pitch must be positive");
    if (orthonormality_error(localToWorld.rotation) > 1e-9) throw InvalidArgument("monitor rotation not orthonormal");
}

std::optional<double> MonitorPlane::intersect(const Ray& ray) const {
    const Vec3 n = normal();
    const double denom = dot(ray.direction, n);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double t = dot(center() - ray.origin, n) / denom;
    if (!(t > 0)) return std::nullopt;
    if (!on_screen(to_pixel(ray.at(t)))) return std::nullopt;
    return t;
}

Vec2 MonitorPlane::to_pixel(const Vec3& world) const {
    const Vec3 local = localToWorld.inverse().apply(world);
    return {local.x / pixelPitch + 0.5 * resX, local.y / pixelPitch + 0.5 * resY};
}

Vec3 MonitorPlane::from_pixel(const Vec2& px) const {
    return localToWorld.apply({(px.x - 0.5 * resX) * pixelPitch, (px.y - 0.5 * resY) * pixelPitch, 0.0});
}

MonitorPlane MonitorPlane::in_object_frame(const Ray& axis, double radians) const {
    MonitorPlane m = *this;
    m.localToWorld = Pose::about_axis(axis, -radians).compose(localToWorld);
    return m;
}

MonitorPlane make_monitor(const Vec3& center, const Vec3& towards, int resX, int resY, double pixelPitch) {
    const Vec3 z = normalized(towards);
    const Vec3 helper = std::abs(z.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const Vec3 x = normalized(cross(helper, z));
    const Vec3 y = cross(z, x);
    MonitorPlane m;
    // columns of the local-to-world rotation are the local axes
    m.localToWorld = {Mat3::from_rows(x, y, z).transposed(), center};
    m.resX = resX;
    m.resY = resY;
    m.pixelPitch = pixelPitch;
    m.validate();
    return m;
}

std::vector<double> even_angles(int n) {
    if (n <= 0) throw InvalidArgument("view count must be positive");
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = 360.0 * i / n;
    return a;
}

void ViewSet::validate() const {
    for (const auto* list : {&correspondenceViews, &silhouetteViews}) {
        for (std::size_t i = 0; i < list->size(); ++i) {
            const double a = (*list)[i];
            if (!(a >= 0.0 && a < 360.0)) throw InvalidArgument("view angle outside [0, 360)");
            if (i > 0 && !(a > (*list)[i - 1])) throw InvalidArgument("view angles must be strictly increasing");
        }
    }
    if (std::abs(norm(rotationAxis.direction) - 1.0) > 1e-9) throw InvalidArgument("rotation axis must be unit");
}

std::size_t SilhouetteMask::count_on() const {
    std::size_t n = 0;
    for (auto b : bitmap) n += b != 0;
    return n;
}

void SilhouetteMask::update_boundary() {
    boundaryPixels.clear();
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u)
            if (on(u, v) && (!on(u - 1, v) || !on(u + 1, v) || !on(u, v - 1) || !on(u, v + 1)))
                boundaryPixels.push_back({u, v});
}

namespace {

Vec3 quantized_hit(const MonitorPlane& m, const Vec3& p) {
    const Vec2 px = m.to_pixel(p);
    const auto code_axis = [](double coord, int res) {
        int bits = 1;
        while ((1 << bits) < res) ++bits;
        const int idx = std::clamp(static_cast<int>(std::floor(coord)), 0, res - 1);
        return gray_decode(gray_encode(idx, bits)) + 0.5;
    };
    return m.from_pixel({code_axis(px.x, m.resX), code_axis(px.y, m.resY)});
}

}  // namespace

std::vector<RayRayCorrespondence> generate_correspondences(const RefractiveSurface& object, double ior,
                                                           const Camera& rigCamera, const MonitorPlane& monitorA,
                                                           const MonitorPlane& monitorB, const Ray& axis,
                                                           double radians, int viewIndex,
                                                           const CorrespondenceOptions& options) {
    rigCamera.validate();
    if (distance(monitorA.center(), monitorB.center()) < 1e-9) throw InvalidArgument("monitor positions must differ");
    const Camera cam = camera_for_view(rigCamera, axis, radians);
    const MonitorPlane a = monitorA.in_object_frame(axis, radians);
    const MonitorPlane b = monitorB.in_object_frame(axis, radians);
    const int w = cam.width, h = cam.height;
    std::vector<std::optional<RayRayCorrespondence>> slots(static_cast<std::size_t>(w) * h);

#pragma omp parallel for schedule(dynamic, 4)
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const Ray primary = cam.pixel_ray(u, v);
            const TracedPath path = trace_refractive_path(primary, object, ior, options.maxEvents);
            const Ray& out = path.exitRay;
            const auto ta = a.intersect(out);
            const auto tb = b.intersect(out);
            if (!ta || !tb) {
                // matting leaves such pixels dark; keep them as invalid records only if the
                // path touched the object, so the filter can count them
                if (path.refractionCount == 0 && !path.hadTotalInternalReflection) continue;
            }
            RayRayCorrespondence c;
            c.viewIndex = viewIndex;
            c.pixel = {u, v};
            c.exitRay = primary;
            c.refractionCount = path.refractionCount;
            c.hadTotalInternalReflection = path.hadTotalInternalReflection;
            c.valid = ta && tb && !path.hadTotalInternalReflection && !path.exceededEvents;
            if (ta && tb) {
                Vec3 qa = out.at(*ta), qb = out.at(*tb);
                if (options.quantizeMonitor) qa = quantized_hit(a, qa), qb = quantized_hit(b, qb);
                const bool aFarther = *ta > *tb;
                const Vec3 far = aFarther ? qa : qb, near = aFarther ? qb : qa;
                c.incidentRay = {far, normalized(near - far)};
            } else {
                c.incidentRay = {out.origin, -out.direction};
            }
            slots[static_cast<std::size_t>(v) * w + u] = c;
        }
    }
    std::vector<RayRayCorrespondence> result;
    for (auto& s : slots)
        if (s) result.push_back(*s);
    return result;
}

SilhouetteMask render_silhouette(const RefractiveSurface& object, const Camera& viewCamera, int viewIndex) {
    viewCamera.validate();
    SilhouetteMask mask(viewCamera.width, viewCamera.height);
    mask.viewIndex = viewIndex;
#pragma omp parallel for schedule(dynamic, 8)
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (object.hits(viewCamera.pixel_ray(u, v))) mask.set(u, v, true);
    mask.update_boundary();
    return mask;
}

SilhouetteMask render_silhouette(const RefractiveSurface& object, const Camera& rigCamera, const Ray& axis,
                                 double radians, int viewIndex) {
    return render_silhouette(object, camera_for_view(rigCamera, axis, radians), viewIndex);
}

std::vector<std::uint8_t> gray_encode(int value, int bits) {
    if (bits < 1 || bits > 30) throw InvalidArgument("bit count must be in [1, 30]");
    if (value < 0 || value >= (1 << bits)) throw InvalidArgument("value out of range for bit count");
    const unsigned g = static_cast<unsigned>(value) ^ (static_cast<unsigned>(value) >> 1);
    std::vector<std::uint8_t> pattern(bits);
    for (int i = 0; i < bits; ++i) pattern[i] = (g >> (bits - 1 - i)) & 1u;
    return pattern;
}

int gray_decode(std::span<const std::uint8_t> pattern) {
    if (pattern.empty() || pattern.size() > 30) throw InvalidArgument("pattern length must be in [1, 30]");
    unsigned value = 0, bit = 0;
    for (std::uint8_t g : pattern) {
        if (g > 1) throw InvalidArgument("pattern entries must be 0 or 1");
        bit ^= g;
        value = (value << 1) | bit;
    }
    return static_cast<int>(value);
}

}  // namespace refrakt
