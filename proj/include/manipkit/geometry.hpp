#pragma once

#include <cmath>

namespace manipkit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double squared_norm(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(squared_norm(v)); }

/// Caller guarantees |v| > 0.
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

/// Component of v perpendicular to unit vector u.
inline Vec3 reject(const Vec3& v, const Vec3& u) { return v - u * dot(v, u); }

/// Row-major 3x3 matrix.
struct Mat3 {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r;
  }

  Mat3 transposed() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }

  Vec3 col(int j) const { return {m[j], m[3 + j], m[6 + j]}; }

  /// Rodrigues rotation about unit axis by angle (radians).
  static Mat3 axis_angle(const Vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    const double x = axis.x, y = axis.y, z = axis.z;
    return {{t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
             t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
             t * x * z - s * y, t * y * z + s * x, t * z * z + c}};
  }

  /// R = Rz(yaw) * Ry(pitch) * Rx(roll).
  static Mat3 from_rpy(double roll, double pitch, double yaw) {
    const Mat3 rx = axis_angle({1, 0, 0}, roll);
    const Mat3 ry = axis_angle({0, 1, 0}, pitch);
    const Mat3 rz = axis_angle({0, 0, 1}, yaw);
    return rz * (ry * rx);
  }
};

/// round(x) with ties going up (toward +infinity).
inline double round_half_up(double x) { return std::floor(x + 0.5); }

}  // namespace manipkit
