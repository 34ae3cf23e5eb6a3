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

#include "pathpose/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "pathpose/error.hpp"

namespace pathpose {

namespace {

constexpr double kAngleSlack = 1e-12;
constexpr double kOrthoTol = 1e-9;

}  // namespace

Angle Angle::radians(double value) {
  if (!std::isfinite(value) || std::abs(value) > kHalfPi + kAngleSlack) {
    std::ostringstream msg;
    msg << "angle " << value << " rad outside [-pi/2, pi/2]";
    throw DomainError(msg.str());
  }
  return Angle(value);
}

RotationMatrix::RotationMatrix(const Mat3& m) : m_(m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= kOrthoTol) || std::abs(m.determinant() - 1.0) > kOrthoTol) {
    throw DomainError("matrix is not a proper rotation");
  }
}

RotationMatrix RotationMatrix::transpose() const {
  return RotationMatrix(Mat3(m_.transpose()), Unchecked{});
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& rhs) const {
  return RotationMatrix(Mat3(m_ * rhs.m_), Unchecked{});
}

Mat3 pitch_matrix(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 m;
  m << 1.0, 0.0, 0.0,
       0.0, c, s,
       0.0, -s, c;
  return m;
}

Mat3 yaw_matrix(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 m;
  m << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return m;
}

Mat3 pitch_matrix_derivative(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 m;
  m << 0.0, 0.0, 0.0,
       0.0, -s, c,
       0.0, -c, -s;
  return m;
}

Mat3 yaw_matrix_derivative(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 m;
  m << -s, 0.0, c,
       0.0, 0.0, 0.0,
       -c, 0.0, -s;
  return m;
}

RotationMatrix rotation_matrix(Angle pitch, Angle yaw) {
  return RotationMatrix(yaw_matrix(yaw.rad()) * pitch_matrix(pitch.rad()));
}

Angle latent_to_angle(double z) {
  if (!std::isfinite(z) || std::abs(z) > 1.0) {
    std::ostringstream msg;
    msg << "latent " << z << " outside [-1, 1]";
    throw DomainError(msg.str());
  }
  return Angle::radians(z * kHalfPi);
}

double angle_to_latent(Angle a) { return a.rad() / kHalfPi; }

std::array<double, 2> dehomogenize(const Vec3& p) {
  if (!(p.z() > kDegenerateDepth)) {
    std::ostringstream msg;
    msg << "rotated center reaches the camera plane (z = " << p.z() << ")";
    throw DegenerateRotationError(msg.str());
  }
  return {p.x() / p.z(), p.y() / p.z()};
}

std::array<double, 2> rotate_center(double cx, double cy, const Mat3& r) {
  const Vec3 lifted(2.0 * cx - 1.0, 2.0 * cy - 1.0, 1.0);
  const auto uv = dehomogenize(r * lifted);
  return {(uv[0] + 1.0) * 0.5, (uv[1] + 1.0) * 0.5};
}

std::vector<BBox> rotate_centers(std::span<const BBox> boxes,
                                 const RotationMatrix& r) {
  std::vector<BBox> out(boxes.begin(), boxes.end());
  if (r.matrix() == Mat3::Identity()) return out;
  for (BBox& b : out) {
    const auto c = rotate_center(b.cx, b.cy, r.matrix());
    b.cx = c[0];
    b.cy = c[1];
  }
  return out;
}

CenterJacobian rotate_center_jacobian(double cx, double cy, double pitch,
                                      double yaw) {
  const Mat3 p = pitch_matrix(pitch);
  const Mat3 y = yaw_matrix(yaw);
  const Mat3 r = y * p;
  const Vec3 lifted(2.0 * cx - 1.0, 2.0 * cy - 1.0, 1.0);
  const Vec3 q = r * lifted;
  const auto uv = dehomogenize(q);

  // Columns: derivative of q with respect to pitch, yaw, cx, cy.
  std::array<Vec3, 4> dq = {
      Vec3(y * pitch_matrix_derivative(pitch) * lifted),
      Vec3(yaw_matrix_derivative(yaw) * p * lifted),
      Vec3(2.0 * r.col(0)),
      Vec3(2.0 * r.col(1)),
  };

  CenterJacobian jac;
  jac.value = {(uv[0] + 1.0) * 0.5, (uv[1] + 1.0) * 0.5};
  const double inv_z = 1.0 / q.z();
  for (int j = 0; j < 4; ++j) {
    jac.d[0][j] = 0.5 * (dq[j].x() - uv[0] * dq[j].z()) * inv_z;
    jac.d[1][j] = 0.5 * (dq[j].y() - uv[1] * dq[j].z()) * inv_z;
  }
  return jac;
}

}  // namespace pathpose
