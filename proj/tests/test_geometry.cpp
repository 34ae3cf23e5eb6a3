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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "fd_oracle.hpp"
#include "pathpose/error.hpp"
#include "pathpose/geometry.hpp"

namespace pathpose {
namespace {

constexpr double kPi = std::numbers::pi;

// Axis-angle construction, independent of the library's closed forms. Pitch
// turns about -x so that positive pitch moves content toward +v.
Mat3 oracle_rotation(double pitch, double yaw) {
  const Mat3 p = Eigen::AngleAxisd(-pitch, Vec3::UnitX()).toRotationMatrix();
  const Mat3 y = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
  return y * p;
}

std::vector<BBox> random_boxes(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<BBox> boxes;
  for (int i = 0; i < n; ++i) boxes.push_back(BBox{u(rng), u(rng), u(rng) * 0.3, u(rng) * 0.3});
  return boxes;
}

TEST(RotationMatrix, ZeroAnglesGiveIdentityExactly) {
  const auto r = rotation_matrix(Angle::radians(0.0), Angle::radians(0.0));
  EXPECT_EQ(r.matrix(), Mat3::Identity());
}

TEST(RotationMatrix, QuarterTurnPitchIsOrthonormal) {
  const auto r = rotation_matrix(Angle::radians(kPi / 2), Angle::radians(0.0));
  EXPECT_LT((r.matrix().transpose() * r.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
  // Pure rotation about the image x-axis: the x column is untouched.
  EXPECT_EQ(r.matrix().col(0), Vec3::UnitX());
}

TEST(RotationMatrix, MatchesComposedSingleAxisOracle) {
  const auto r = rotation_matrix(Angle::radians(0.1), Angle::radians(0.2));
  EXPECT_LT((r.matrix() - oracle_rotation(0.1, 0.2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RotationMatrix, RandomAnglesAreProperRotations) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(-kPi / 2, kPi / 2);
  for (int i = 0; i < 200; ++i) {
    const double p = a(rng), y = a(rng);
    const Mat3 m = rotation_matrix(Angle::radians(p), Angle::radians(y)).matrix();
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-9);
    EXPECT_LT((m - oracle_rotation(p, y)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RotationMatrix, RejectsNonRotation) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = -1.0;
  EXPECT_THROW(RotationMatrix{m}, DomainError);
}

TEST(Angle, RangeIsEnforced) {
  EXPECT_NO_THROW(Angle::radians(kPi / 2));
  EXPECT_THROW(Angle::radians(kPi / 2 + 1e-9), DomainError);
  EXPECT_THROW(Angle::radians(std::nan("")), DomainError);
}

TEST(LatentToAngle, Examples) {
  EXPECT_DOUBLE_EQ(latent_to_angle(1.0).rad(), kPi / 2);
  EXPECT_DOUBLE_EQ(latent_to_angle(1.0).deg(), 90.0);
  EXPECT_EQ(latent_to_angle(0.0).rad(), 0.0);
  EXPECT_DOUBLE_EQ(latent_to_angle(-0.5).rad(), -kPi / 4);
  EXPECT_THROW(latent_to_angle(1.0001), DomainError);
  EXPECT_THROW(latent_to_angle(-2.0), DomainError);
}

TEST(RotateCenters, IdentityIsExact) {
  std::mt19937_64 rng(1);
  const auto boxes = random_boxes(rng, 20);
  EXPECT_EQ(rotate_centers(boxes, RotationMatrix::identity()), boxes);
}

TEST(RotateCenters, YawLineIdentity) {
  for (double theta : {-0.6, -0.2, 0.05, 0.3, 0.7}) {
    for (double cx : {0.1, 0.35, 0.5, 0.8}) {
      const auto r = rotation_matrix(Angle::radians(0.0), Angle::radians(theta));
      const BBox in{cx, 0.5, 0.1, 0.2};
      const auto out = rotate_centers(std::span<const BBox>(&in, 1), r).front();
      const double u = 2.0 * cx - 1.0;
      EXPECT_NEAR(2.0 * out.cx - 1.0, std::tan(std::atan(u) + theta), 1e-9);
      EXPECT_NEAR(out.cy, 0.5, 1e-12);
    }
  }
}

TEST(RotateCenters, PrincipalPointUnderPitch) {
  for (double phi : {-0.8, -0.1, 0.25, 0.9}) {
    const auto r = rotation_matrix(Angle::radians(phi), Angle::radians(0.0));
    const auto c = rotate_center(0.5, 0.5, r.matrix());
    EXPECT_NEAR(2.0 * c[1] - 1.0, std::tan(phi), 1e-9);
    EXPECT_NEAR(2.0 * c[0] - 1.0, 0.0, 1e-12);
  }
}

TEST(RotateCenters, CompositionAndInverseRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a(-0.15, 0.15);
  for (int trial = 0; trial < 100; ++trial) {
    const auto boxes = random_boxes(rng, 6);
    const auto r1 = rotation_matrix(Angle::radians(a(rng)), Angle::radians(a(rng)));
    const auto r2 = rotation_matrix(Angle::radians(a(rng)), Angle::radians(a(rng)));
    const auto twice = rotate_centers(rotate_centers(boxes, r1), r2);
    const auto once = rotate_centers(boxes, r2 * r1);
    const auto back = rotate_centers(rotate_centers(boxes, r1), r1.transpose());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      EXPECT_NEAR(twice[i].cx, once[i].cx, 1e-9);
      EXPECT_NEAR(twice[i].cy, once[i].cy, 1e-9);
      EXPECT_NEAR(back[i].cx, boxes[i].cx, 1e-9);
      EXPECT_NEAR(back[i].cy, boxes[i].cy, 1e-9);
    }
  }
}

TEST(RotateCenters, ExtentsAreBitIdentical) {
  std::mt19937_64 rng(9);
  const auto boxes = random_boxes(rng, 30);
  const auto out = rotate_centers(boxes, rotation_matrix(Angle::radians(0.3), Angle::radians(-0.2)));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(out[i].w), std::bit_cast<std::uint64_t>(boxes[i].w));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(out[i].h), std::bit_cast<std::uint64_t>(boxes[i].h));
  }
}

TEST(RotateCenters, DegenerateRotationIsTyped) {
  // Corner (1,1) lifted to (1,1,1) under 60 degrees of yaw and pitch lands
  // behind the camera plane.
  const auto r = rotation_matrix(Angle::degrees(60), Angle::degrees(60));
  const BBox corner{1.0, 1.0, 0.1, 0.1};
  EXPECT_THROW(rotate_centers(std::span<const BBox>(&corner, 1), r), DegenerateRotationError);
}

TEST(RotateCenterJacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(0.05, 0.95), a(-0.5, 0.5);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    double in[4] = {a(rng), a(rng), c(rng), c(rng)};  // pitch, yaw, cx, cy
    const auto jac = rotate_center_jacobian(in[2], in[3], in[0], in[1]);
    const auto eval = [&](const double* x) {
      return rotate_center(x[2], x[3], (yaw_matrix(x[1]) * pitch_matrix(x[0])));
    };
    EXPECT_NEAR(jac.value[0], eval(in)[0], 1e-15);
    for (int j = 0; j < 4; ++j) {
      double up[4], dn[4];
      std::copy(in, in + 4, up);
      std::copy(in, in + 4, dn);
      up[j] += h;
      dn[j] -= h;
      const auto fu = eval(up), fd = eval(dn);
      for (int k = 0; k < 2; ++k) {
        const double numeric = (fu[k] - fd[k]) / (2.0 * h);
        worst = std::max(worst, testing::relative_error(jac.d[k][j], numeric));
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

}  // namespace
}  // namespace pathpose
