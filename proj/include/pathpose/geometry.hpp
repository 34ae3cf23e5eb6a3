// Copyright 2026 The pathpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pathpose {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kHalfPi = std::numbers::pi / 2.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

// Camera-plane depth below which a rotated center is treated as degenerate.
inline constexpr double kDegenerateDepth = 1e-6;

/// A pitch or yaw angle, |radians| <= pi/2.
class Angle {
 public:
  constexpr Angle() = default;

  /// Throws DomainError when |radians| exceeds pi/2 (+1e-12 slack).
  static Angle radians(double value);
  static Angle degrees(double value) { return radians(value * kDegToRad); }

  constexpr double rad() const { return radians_; }
  constexpr double deg() const { return radians_ * kRadToDeg; }

  friend constexpr bool operator==(Angle, Angle) = default;

 private:
  constexpr explicit Angle(double r) : radians_(r) {}
  double radians_ = 0.0;
};

/// Normalized center-format box. Input boxes live in [0,1]; rotated centers
/// may leave that square.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}
  /// Throws DomainError unless `m` is orthonormal with det +1 (tolerance 1e-9).
  explicit RotationMatrix(const Mat3& m);

  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  RotationMatrix transpose() const;
  RotationMatrix operator*(const RotationMatrix& rhs) const;

 private:
  struct Unchecked {};
  RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

// Single-axis factors. Positive pitch moves principal-point content toward +v,
// positive yaw toward +u.
Mat3 pitch_matrix(double radians);
Mat3 yaw_matrix(double radians);
Mat3 pitch_matrix_derivative(double radians);
Mat3 yaw_matrix_derivative(double radians);

/// R = R_yaw(yaw) * R_pitch(pitch).
RotationMatrix rotation_matrix(Angle pitch, Angle yaw);

/// Maps a tanh latent in [-1, 1] to [-pi/2, pi/2]. Throws DomainError outside.
Angle latent_to_angle(double z);
double angle_to_latent(Angle a);

/// Homogeneous point to image plane. The only place the perspective divide
/// lives; throws DegenerateRotationError when p.z() <= kDegenerateDepth.
std::array<double, 2> dehomogenize(const Vec3& p);

/// Rotation-only homography on one normalized center.
std::array<double, 2> rotate_center(double cx, double cy, const Mat3& r);

/// Rotates every box center by `r`; extents are copied unchanged.
std::vector<BBox> rotate_centers(std::span<const BBox> boxes,
                                 const RotationMatrix& r);

/// Value and Jacobian of one rotated center with respect to
/// (pitch, yaw, cx, cy); angles in radians.
struct CenterJacobian {
  std::array<double, 2> value{};
  // d[k][j]: output k in {cx', cy'}, input j in {pitch, yaw, cx, cy}.
  std::array<std::array<double, 4>, 2> d{};
};

CenterJacobian rotate_center_jacobian(double cx, double cy, double pitch,
                                      double yaw);

}  // namespace pathpose
