#pragma once

#include <array>
#include <cmath>

namespace rapid {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? *this / n : Vec3{0, 0, 0};
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Unit quaternion (w,x,y,z) for attitude.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  Quat conj() const { return {w, -x, -y, -z}; }

  // Rotate a vector from body to world frame.
  Vec3 rotate(const Vec3& v) const {
    Vec3 u{x, y, z};
    Vec3 t = 2.0 * u.cross(v);
    return v + w * t + u.cross(t);
  }

  Vec3 rotate_inv(const Vec3& v) const { return conj().rotate(v); }

  static Quat from_axis_angle(const Vec3& axis, double angle) {
    double n = axis.norm();
    if (n < 1e-300 || angle == 0.0) return {};
    double h = 0.5 * angle;
    double s = std::sin(h) / n;
    return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
  }

  // Integrates body angular velocity over dt (exact exponential map).
  static Quat exp_rates(const Vec3& omega, double dt) {
    double n = omega.norm();
    double a = n * dt;
    if (a < 1e-12) {
      Quat q{1.0, 0.5 * omega.x * dt, 0.5 * omega.y * dt, 0.5 * omega.z * dt};
      return q.normalized();
    }
    return from_axis_angle(omega, a);
  }

  static Quat from_yaw(double yaw) { return from_axis_angle({0, 0, 1}, yaw); }

  double yaw() const {
    return std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  }

  // Column i of the equivalent rotation matrix.
  Vec3 col(int i) const {
    switch (i) {
      case 0: return rotate({1, 0, 0});
      case 1: return rotate({0, 1, 0});
      default: return rotate({0, 0, 1});
    }
  }

  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) &&
           std::isfinite(z);
  }
};

// Roll-pitch-yaw (ZYX convention) helpers used by the expert perturbation.
inline Quat quat_from_rpy(double roll, double pitch, double yaw) {
  Quat qz = Quat::from_axis_angle({0, 0, 1}, yaw);
  Quat qy = Quat::from_axis_angle({0, 1, 0}, pitch);
  Quat qx = Quat::from_axis_angle({1, 0, 0}, roll);
  return (qz * qy * qx).normalized();
}

inline std::array<double, 3> quat_to_rpy(const Quat& q) {
  double sinr = 2.0 * (q.w * q.x + q.y * q.z);
  double cosr = 1.0 - 2.0 * (q.x * q.x + q.y * q.y);
  double roll = std::atan2(sinr, cosr);
  double sinp = 2.0 * (q.w * q.y - q.z * q.x);
  sinp = sinp > 1.0 ? 1.0 : (sinp < -1.0 ? -1.0 : sinp);
  double pitch = std::asin(sinp);
  return {roll, pitch, q.yaw()};
}

}  // namespace rapid
