#pragma once

#include "refrakt/mesh.hpp"

namespace refrakt {

/// Implicit solid: negative inside, zero on the surface.
class ImplicitShape {
  public:
    virtual ~ImplicitShape() = default;
    virtual double value(const Vec3& p) const = 0;
    /// Outward unit normal of the level set through p.
    virtual Vec3 normal(const Vec3& p) const = 0;
    virtual Aabb bounds() const = 0;
};

class SphereShape final : public ImplicitShape {
  public:
    SphereShape(const Vec3& center, double radius) : center_(center), radius_(radius) {}
    double value(const Vec3& p) const override { return distance(p, center_) - radius_; }
    Vec3 normal(const Vec3& p) const override { return normalized(p - center_); }
    Aabb bounds() const override;

  private:
    Vec3 center_;
    double radius_;
};

/// Sphere with a spherical bite taken out of it: the concave benchmark solid.
class DentedSphereShape final : public ImplicitShape {
  public:
    DentedSphereShape(const Vec3& center, double radius, const Vec3& dentCenter, double dentRadius)
        : center_(center), radius_(radius), dentCenter_(dentCenter), dentRadius_(dentRadius) {}
    double value(const Vec3& p) const override;
    Vec3 normal(const Vec3& p) const override;
    Aabb bounds() const override;

    /// True when p lies on (or within `tolerance` of) the concave dent surface.
    bool in_dent(const Vec3& p, double tolerance) const;

    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }
    const Vec3& dent_center() const { return dentCenter_; }
    double dent_radius() const { return dentRadius_; }

  private:
    Vec3 center_;
    double radius_;
    Vec3 dentCenter_;
    double dentRadius_;
};

class EllipsoidShape final : public ImplicitShape {
  public:
    EllipsoidShape(const Vec3& center, const Vec3& semiAxes) : center_(center), axes_(semiAxes) {}
    double value(const Vec3& p) const override;
    Vec3 normal(const Vec3& p) const override;
    Aabb bounds() const override;

  private:
    Vec3 center_;
    Vec3 axes_;
};

/// Marching-cubes tessellation of an implicit shape with vertex normals taken from the
/// shape's analytic normal.
TriangleMesh tessellate(const ImplicitShape& shape, double spacing);

/// Subdivided icosahedron projected to a sphere, with exact radial normals.
TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions);

/// Axis-aligned box, outward winding.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);

/// Square [0,1]^2 at height z as two triangles facing +z.
TriangleMesh make_unit_square(double z = 0.0);

/// The default concave benchmark: radius-4 mm sphere at the origin with a bite from +x.
DentedSphereShape default_dented_sphere();

/// Ellipsoid with the 6.3 x 9.7 x 5.7 mm bounding box of the small figurine test object.
EllipsoidShape kitten_scale_ellipsoid();

}  // namespace refrakt
