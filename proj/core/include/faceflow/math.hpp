#pragma once

#include <cmath>
#include <cstddef>

namespace faceflow {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return Mat3{}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
};

// Rodrigues formula. An exactly zero rotation vector yields the exact
// identity matrix, which keeps zero-pose skinning bit-exact.
inline Mat3 axis_angle_matrix(const Vec3& aa) {
    double angle = aa.norm();
    if (angle == 0.0) return Mat3::identity();
    Vec3 k = aa * (1.0 / angle);
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m[0][0] = c + k.x * k.x * t;
    r.m[0][1] = k.x * k.y * t - k.z * s;
    r.m[0][2] = k.x * k.z * t + k.y * s;
    r.m[1][0] = k.y * k.x * t + k.z * s;
    r.m[1][1] = c + k.y * k.y * t;
    r.m[1][2] = k.y * k.z * t - k.x * s;
    r.m[2][0] = k.z * k.x * t - k.y * s;
    r.m[2][1] = k.z * k.y * t + k.x * s;
    r.m[2][2] = c + k.z * k.z * t;
    return r;
}

// Rigid transform x -> R x + t.
struct Affine {
    Mat3 r;
    Vec3 t;

    static Affine identity() { return {Mat3::identity(), Vec3{}}; }

    // Rotation about a pivot point: x -> R (x - p) + p, stored as R x + (p - R p).
    // With R == I the translation is exactly zero.
    static Affine rotation_about(const Mat3& rot, const Vec3& pivot) {
        return {rot, pivot - rot * pivot};
    }

    Vec3 apply(const Vec3& v) const { return r * v + t; }

    // this ∘ other: apply `other` first.
    Affine compose(const Affine& other) const { return {r * other.r, r * other.t + t}; }
};

}  // namespace faceflow
