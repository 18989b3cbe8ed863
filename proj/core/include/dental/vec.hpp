#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

namespace dental {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Integer voxel coordinate.
struct Index3 {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  constexpr std::int64_t& operator[](int axis) { return axis == 0 ? i : (axis == 1 ? j : k); }
  constexpr std::int64_t operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }

  friend constexpr bool operator==(const Index3&, const Index3&) = default;
  friend constexpr auto operator<=>(const Index3&, const Index3&) = default;
};

/// Row-major 3x3 matrix; used for tensors and Jacobians.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double& operator()(int r, int c) { return a[3 * r + c]; }
  constexpr double operator()(int r, int c) const { return a[3 * r + c]; }

  static constexpr Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }

  constexpr double trace() const { return a[0] + a[4] + a[8]; }

  constexpr Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(const Mat3& x, const Mat3& y) {
  Mat3 m;
  for (int n = 0; n < 9; ++n) m.a[n] = x.a[n] + y.a[n];
  return m;
}
constexpr Mat3 operator-(const Mat3& x, const Mat3& y) {
  Mat3 m;
  for (int n = 0; n < 9; ++n) m.a[n] = x.a[n] - y.a[n];
  return m;
}
constexpr Mat3 operator*(double s, const Mat3& x) {
  Mat3 m;
  for (int n = 0; n < 9; ++n) m.a[n] = s * x.a[n];
  return m;
}
constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

constexpr double determinant(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Double contraction a:b.
constexpr double contract(const Mat3& x, const Mat3& y) {
  double s = 0.0;
  for (int n = 0; n < 9; ++n) s += x.a[n] * y.a[n];
  return s;
}

}  // namespace dental
