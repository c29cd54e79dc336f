#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "refrakt/camera.hpp"
#include "refrakt/optics.hpp"

namespace refrakt {

/// Flat display used as coded light source. Local frame: x along the 1920-pixel rows,
/// y along columns, z the screen normal; the local origin is the screen center.
struct MonitorPlane {
    Pose localToWorld;
    int resX = 1920;
    int resY = 1080;
    double pixelPitch = 0.1;  // mm per pixel

    void validate() const;

    Vec3 center() const { return localToWorld.translation; }
    Vec3 normal() const { return localToWorld.apply_direction({0, 0, 1}); }

    /// Ray parameter where the ray meets the screen plane (t > 0 and inside the screen).
    std::optional<double> intersect(const Ray& ray) const;

    /// Continuous monitor pixel coordinates of a point on the plane.
    Vec2 to_pixel(const Vec3& world) const;
    Vec3 from_pixel(const Vec2& px) const;
    bool on_screen(const Vec2& px) const { return px.x >= 0 && px.y >= 0 && px.x < resX && px.y < resY; }

    /// The same monitor expressed in the object frame after a turntable rotation.
    MonitorPlane in_object_frame(const Ray& axis, double radians) const;
};

/// Monitor facing `towards`, centered at `center`.
MonitorPlane make_monitor(const Vec3& center, const Vec3& towards, int resX, int resY, double pixelPitch);

/// n angles (degrees) evenly covering [0, 360).
std::vector<double> even_angles(int n);

struct ViewSet {
    std::vector<double> correspondenceViews;  // degrees
    std::vector<double> silhouetteViews;      // degrees
    Ray rotationAxis{{0, 0, 0}, {0, 1, 0}};

    /// Throws InvalidArgument unless each list is strictly increasing inside [0, 360).
    void validate() const;
};

struct PixelCoord {
    int u = 0;
    int v = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct RayRayCorrespondence {
    int viewIndex = 0;
    PixelCoord pixel;
    Ray exitRay;      // from the camera center into the scene
    Ray incidentRay;  // from the far monitor toward the object, along light travel
    int refractionCount = 0;
    bool hadTotalInternalReflection = false;
    bool valid = false;
};

/// Binary object mask. Pixels are stored row-major, 1 = object.
struct SilhouetteMask {
    int viewIndex = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bitmap;
    std::vector<PixelCoord> boundaryPixels;  // ON pixels with an OFF (or out-of-image) 4-neighbor

    SilhouetteMask() = default;
    SilhouetteMask(int w, int h) : width(w), height(h), bitmap(static_cast<std::size_t>(w) * h, 0) {}

    bool on(int u, int v) const {
        return u >= 0 && v >= 0 && u < width && v < height && bitmap[static_cast<std::size_t>(v) * width + u];
    }
    void set(int u, int v, bool value) { bitmap[static_cast<std::size_t>(v) * width + u] = value ? 1 : 0; }
    std::size_t count_on() const;
    void update_boundary();
};

struct CorrespondenceOptions {
    int maxEvents = 8;
    /// Snap monitor hits to pixel centers through a Gray-code round trip, as a decoded
    /// capture would. Off by default so the exact tracer geometry is kept.
    bool quantizeMonitor = false;
};

/// Back-traces one ray per camera pixel through `object` (given in the object frame) for
/// the turntable at `radians`. Every pixel whose path reaches both monitor positions is
/// recorded; paths with total internal reflection, too many events, or a monitor miss are
/// flagged invalid.
std::vector<RayRayCorrespondence> generate_correspondences(const RefractiveSurface& object, double ior,
                                                           const Camera& rigCamera, const MonitorPlane& monitorA,
                                                           const MonitorPlane& monitorB, const Ray& axis,
                                                           double radians, int viewIndex,
                                                           const CorrespondenceOptions& options = {});

/// Pixel-center silhouette of `object` seen by the rig camera at turntable angle `radians`.
SilhouetteMask render_silhouette(const RefractiveSurface& object, const Camera& rigCamera, const Ray& axis,
                                 double radians, int viewIndex);
SilhouetteMask render_silhouette(const RefractiveSurface& object, const Camera& viewCamera, int viewIndex);

/// Reflected binary code of `value`, most significant bit first. Throws InvalidArgument
/// when value is outside [0, 2^bits).
std::vector<std::uint8_t> gray_encode(int value, int bits);
int gray_decode(std::span<const std::uint8_t> pattern);

}  // namespace refrakt
