#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace refrakt {

/// 3D vector of doubles. Positions are in millimeters; directions are unitless.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr Vec3& operator/=(double s) { x /= s; y /= s; z /= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator/(Vec3 a, double s) { return a /= s; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

    friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
        return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
    }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double squared_norm(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
constexpr double squared_distance(const Vec3& a, const Vec3& b) { return squared_norm(a - b); }

inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec3{};
}

constexpr Vec3 cwise_min(const Vec3& a, const Vec3& b) {
    return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 cwise_max(const Vec3& a, const Vec3& b) {
    return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

/// Angle between two directions in radians, stable near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

/// Any unit vector orthogonal to `n` (assumed unit).
inline Vec3 any_orthogonal(const Vec3& n) {
    const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return normalized(cross(n, helper));
}

/// Half-line with unit direction.
struct Ray {
    Vec3 origin;
    Vec3 direction;

    Vec3 at(double t) const { return origin + direction * t; }
};

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p) {
        lo = cwise_min(lo, p);
        hi = cwise_max(hi, p);
    }
    void expand(const Aabb& b) {
        lo = cwise_min(lo, b.lo);
        hi = cwise_max(hi, b.hi);
    }
    bool empty() const { return lo.x > hi.x; }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    double diagonal() const { return norm(hi - lo); }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    double squared_distance_to(const Vec3& p) const {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double v = p[k] < lo[k] ? lo[k] - p[k] : (p[k] > hi[k] ? p[k] - hi[k] : 0.0);
            d += v * v;
        }
        return d;
    }
};

/// Row-major 3x3 matrix, used for rotations.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
    }
    /// Rodrigues rotation about a unit axis by `radians`.
    static Mat3 rotation(const Vec3& axis, double radians) {
        const Vec3 a = normalized(axis);
        const double c = std::cos(radians);
        const double s = std::sin(radians);
        const double t = 1.0 - c;
        return {{t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
                 t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x,
                 t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c}};
    }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    Vec3 row(int r) const { return {m[r * 3], m[r * 3 + 1], m[r * 3 + 2]}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i * 3 + j] = m[i * 3] * o.m[j] + m[i * 3 + 1] * o.m[3 + j] + m[i * 3 + 2] * o.m[6 + j];
        return r;
    }
    Mat3 transposed() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }
};

/// Rigid transform y = R x + t.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_direction(const Vec3& d) const { return rotation * d; }
    Pose inverse() const {
        const Mat3 rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
    /// (*this) after `inner`: x -> this(inner(x)).
    Pose compose(const Pose& inner) const {
        return {rotation * inner.rotation, rotation * inner.translation + translation};
    }
    /// Rotation about an arbitrary axis line.
    static Pose about_axis(const Ray& axis, double radians) {
        const Mat3 r = Mat3::rotation(axis.direction, radians);
        return {r, axis.origin - r * axis.origin};
    }
};

/// Maximum deviation of R^T R from identity.
inline double orthonormality_error(const Mat3& r) {
    const Mat3 p = r.transposed() * r;
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) e = std::max(e, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
    return e;
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }

}  // namespace refrakt
