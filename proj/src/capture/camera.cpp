#include "refrakt/camera.hpp"

#include "refrakt/errors.hpp"

namespace refrakt {

void Camera::validate() const {
    if (!(K.fx > 0 && K.fy > 0)) throw InvalidArgument("focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
    if (orthonormality_error(worldToCamera.rotation) > 1e-9) throw InvalidArgument("camera rotation not orthonormal");
}

Ray Camera::ray_through(double u, double v) const {
    const Vec3 local{(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
    const Pose camToWorld = worldToCamera.inverse();
    return {camToWorld.translation, normalized(camToWorld.apply_direction(local))};
}

std::optional<Vec2> Camera::project(const Vec3& world) const {
    const Vec3 c = worldToCamera.apply(world);
    if (c.z <= 0.0) return std::nullopt;
    return Vec2{K.fx * c.x / c.z + K.cx, K.fy * c.y / c.z + K.cy};
}

std::pair<Vec3, Vec3> Camera::projection_jacobian(const Vec3& world) const {
    const Vec3 c = worldToCamera.apply(world);
    const double iz = 1.0 / c.z;
    // rows of d(u,v)/dc, pulled back through the rotation: J_world = J_c * R
    const Vec3 du{K.fx * iz, 0.0, -K.fx * c.x * iz * iz};
    const Vec3 dv{0.0, K.fy * iz, -K.fy * c.y * iz * iz};
    const Mat3 rt = worldToCamera.rotation.transposed();
    return {rt * du, rt * dv};
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 z = normalized(target - eye);
    const Vec3 x = normalized(cross(z, up));
    const Vec3 y = cross(z, x);
    const Mat3 r = Mat3::from_rows(x, y, z);
    return {r, -(r * eye)};
}

Camera camera_for_view(const Camera& rig, const Ray& axis, double radians) {
    Camera c = rig;
    c.worldToCamera = rig.worldToCamera.compose(Pose::about_axis(axis, radians));
    return c;
}

}  // namespace refrakt
