#pragma once

#include <optional>

#include "refrakt/vec3.hpp"

namespace refrakt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Intrinsics {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
};

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel (i, j) covers
/// [i, i+1) x [j, j+1) in image coordinates, so its center sits at (i + 0.5, j + 0.5).
struct Camera {
    Intrinsics K;
    int width = 0;
    int height = 0;
    Pose worldToCamera;

    /// Throws InvalidArgument on non-positive focal lengths or image size, or a
    /// non-orthonormal rotation.
    void validate() const;

    Vec3 center() const { return worldToCamera.inverse().translation; }

    /// Unit ray from the camera center through image point (u, v).
    Ray ray_through(double u, double v) const;
    Ray pixel_ray(int i, int j) const { return ray_through(i + 0.5, j + 0.5); }

    /// Image coordinates of a world point; nullopt behind the camera.
    std::optional<Vec2> project(const Vec3& world) const;

    /// d(u, v)/d(world) as two rows, for a point in front of the camera.
    std::pair<Vec3, Vec3> projection_jacobian(const Vec3& world) const;
};

/// World-to-camera pose for a camera at `eye` looking at `target`; `up` maps to -y.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

/// The camera seen from the object frame after the turntable turned by `radians` about `axis`.
Camera camera_for_view(const Camera& rig, const Ray& axis, double radians);

}  // namespace refrakt
