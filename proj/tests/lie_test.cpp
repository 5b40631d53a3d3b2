// Copyright 2026 The gemdyn Authors
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

#include "gemdyn/lie.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"

namespace gemdyn::lie {
namespace {

using gemdyn::testing::central_jacobian;
using gemdyn::testing::random_unit;
using gemdyn::testing::series_exp;
constexpr double kPi = std::numbers::pi;
constexpr GroupKind kAllKinds[] = {GroupKind::kSO2, GroupKind::kSO3, GroupKind::kSE2,
                                   GroupKind::kSE3};

Coeffs random_coeffs(std::mt19937_64& rng, GroupKind kind, double max_norm) {
  const int k = algebra_dim(kind);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Coeffs c(k);
  for (int i = 0; i < k; ++i) c[i] = n(rng);
  c *= max_norm * u(rng) / c.norm();
  return c;
}

TEST(Basis, DimensionsAndStructure) {
  for (GroupKind kind : kAllKinds) {
    const Basis b = basis(kind);
    ASSERT_EQ(static_cast<int>(b.elements.size()), algebra_dim(kind));
    const int n = matrix_dim(kind);
    const int k = rotation_dim(kind);
    for (const Matrix& e : b.elements) {
      ASSERT_EQ(e.rows(), n);
      const Matrix r = e.topLeftCorner(k, k);
      EXPECT_EQ((r + r.transpose()).norm(), 0.0);
      if (is_euclidean(kind)) EXPECT_EQ(e.row(n - 1).norm(), 0.0);
    }
  }
}

TEST(Basis, MatchesPublishedGenerators) {
  const Basis so3 = basis(GroupKind::kSO3);
  Matrix e1 = Matrix::Zero(3, 3);
  e1(1, 2) = -1.0;
  e1(2, 1) = 1.0;
  EXPECT_EQ(so3.elements[0], e1);
  const Basis se3 = basis(GroupKind::kSE3);
  Matrix e4 = Matrix::Zero(4, 4);
  e4(0, 3) = 1.0;
  EXPECT_EQ(se3.elements[3], e4);
  EXPECT_EQ(hat(AlgebraVector::zero(GroupKind::kSO2)), Matrix::Zero(2, 2));
}

TEST(Hat, LinearCombination) {
  EXPECT_EQ(hat(AlgebraVector(GroupKind::kSO3, {0, 0, 0})), Matrix::Zero(3, 3));
  EXPECT_EQ(hat(AlgebraVector(GroupKind::kSO3, {1, 0, 0})),
            basis(GroupKind::kSO3).elements[0]);
  const Matrix m = hat(AlgebraVector(GroupKind::kSE3, {0, 0, 0, 1, 2, 3}));
  Matrix want = Matrix::Zero(4, 4);
  want(0, 3) = 1.0;
  want(1, 3) = 2.0;
  want(2, 3) = 3.0;
  EXPECT_EQ(m, want);
}

TEST(Hat, LengthMismatchThrows) {
  EXPECT_THROW(AlgebraVector(GroupKind::kSO3, {1.0, 2.0}), DimensionError);
  EXPECT_THROW(hat(basis(GroupKind::kSO2), Coeffs::Zero(3)), DimensionError);
}

TEST(ExpMap, ClosedFormExamples) {
  EXPECT_EQ(exp_map(AlgebraVector::zero(GroupKind::kSO3)).matrix(),
            Matrix::Identity(3, 3));
  const Matrix q = exp_map(AlgebraVector(GroupKind::kSO2, {kPi / 2})).matrix();
  Matrix want(2, 2);
  want << 0, -1, 1, 0;
  EXPECT_LT((q - want).norm(), 1e-15);

  const Matrix r = exp_map(AlgebraVector(GroupKind::kSO3, {0, 0, kPi / 2})).matrix();
  Matrix want3(3, 3);
  want3 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::MatrixXd oracle =
      series_exp(hat(AlgebraVector(GroupKind::kSO3, {0, 0, kPi / 2})));
  EXPECT_LT((oracle - want3).norm(), 1e-14);
  EXPECT_LT((r - want3).norm(), 1e-14);
}

TEST(ExpMap, NonFiniteThrows) {
  EXPECT_THROW(exp_map(AlgebraVector(GroupKind::kSO3, {NAN, 0, 0})), NumericError);
}

TEST(ExpMap, AgreesWithSeriesAndStaysOnManifold) {
  std::mt19937_64 rng(7);
  for (GroupKind kind : kAllKinds) {
    for (int trial = 0; trial < 500; ++trial) {
      const AlgebraVector a(kind, random_coeffs(rng, kind, 2 * kPi));
      const GroupElement g = exp_map(a);
      EXPECT_TRUE(invariant_defect(g).ok(1e-9)) << to_string(kind);
      const Eigen::MatrixXd oracle = series_exp(hat(a));
      EXPECT_LT((g.matrix() - oracle).cwiseAbs().maxCoeff(), 1e-10) << to_string(kind);
    }
  }
}

TEST(ExpMap, TinyAnglesMatchSeries) {
  for (GroupKind kind : kAllKinds) {
    for (double scale : {0.0, 1e-12, 1e-8, 1e-7, 5e-3, 1e-2, 2e-2}) {
      Coeffs c = Coeffs::Constant(algebra_dim(kind), scale);
      const AlgebraVector a(kind, c);
      EXPECT_LT((exp_map(a).matrix() - series_exp(hat(a))).cwiseAbs().maxCoeff(),
                1e-15);
    }
  }
}

TEST(LogMap, Examples) {
  EXPECT_EQ(log_map(GroupElement::identity(GroupKind::kSE3)).coeffs().norm(), 0.0);
  Matrix q(2, 2);
  q << 0, -1, 1, 0;
  EXPECT_NEAR(log_map(GroupElement(GroupKind::kSO2, q))[0], kPi / 2, 1e-15);
}

TEST(LogMap, RoundTrip) {
  std::mt19937_64 rng(11);
  for (GroupKind kind : kAllKinds) {
    for (int trial = 0; trial < 500; ++trial) {
      Coeffs c = random_coeffs(rng, kind, 2 * kPi);
      const int kr = kind == GroupKind::kSO3 || kind == GroupKind::kSE3 ? 3 : 1;
      const double rot = c.head(kr).norm();
      if (rot >= kPi - 0.1) c.head(kr) *= (kPi - 0.1) / rot * 0.999;
      const AlgebraVector a(kind, c);
      const AlgebraVector back = log_map(exp_map(a));
      EXPECT_LT((back.coeffs() - c).norm(), 1e-8) << to_string(kind);
      EXPECT_LT((exp_map(back).matrix() - exp_map(a).matrix()).norm(), 1e-8);
    }
  }
}

TEST(LogMap, BranchAmbiguityThrows) {
  EXPECT_THROW(log_map(exp_map(AlgebraVector(GroupKind::kSO3, {kPi, 0, 0}))),
               BranchError);
  EXPECT_THROW(log_map(exp_map(AlgebraVector(GroupKind::kSO2, {kPi}))), BranchError);
  EXPECT_NO_THROW(log_map(exp_map(AlgebraVector(GroupKind::kSO3, {0, kPi - 1e-3, 0}))));
}

TEST(Compose, GroupLaws) {
  std::mt19937_64 rng(3);
  for (GroupKind kind : kAllKinds) {
    const AlgebraVector a(kind, random_coeffs(rng, kind, 3.0));
    const GroupElement ga = exp_map(a);
    EXPECT_EQ(compose(GroupElement::identity(kind), ga).matrix(), ga.matrix());
    const GroupElement inv = exp_map(AlgebraVector(kind, -a.coeffs()));
    const int n = matrix_dim(kind);
    EXPECT_LT((compose(ga, inv).matrix() - Matrix::Identity(n, n)).norm(), 1e-9);
    EXPECT_LT((compose(ga, inverse(ga)).matrix() - Matrix::Identity(n, n)).norm(),
              1e-12);
  }
}

TEST(Compose, PlanarAngleAddition) {
  const GroupElement a = exp_map(AlgebraVector(GroupKind::kSO2, {0.7}));
  const GroupElement b = exp_map(AlgebraVector(GroupKind::kSO2, {1.1}));
  EXPECT_NEAR(log_map(compose(a, b))[0], 1.8, 1e-14);
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(5);
  for (GroupKind kind : kAllKinds) {
    for (int trial = 0; trial < 200; ++trial) {
      const GroupElement a = exp_map(AlgebraVector(kind, random_coeffs(rng, kind, 3)));
      const GroupElement b = exp_map(AlgebraVector(kind, random_coeffs(rng, kind, 3)));
      const GroupElement c = exp_map(AlgebraVector(kind, random_coeffs(rng, kind, 3)));
      const Matrix lhs = compose(compose(a, b), c).matrix();
      const Matrix rhs = compose(a, compose(b, c)).matrix();
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Compose, KindMismatchThrows) {
  EXPECT_THROW(compose(GroupElement::identity(GroupKind::kSO3),
                       GroupElement::identity(GroupKind::kSE2)),
               DimensionError);
}

TEST(Compose, LongChainsStayOnManifold) {
  GroupElement g = GroupElement::identity(GroupKind::kSO3);
  const GroupElement step = exp_map(AlgebraVector(GroupKind::kSO3, {0.3, -0.2, 0.5}));
  for (int i = 0; i < 10000; ++i) g = compose(step, g);
  EXPECT_TRUE(invariant_defect(g).ok(1e-9));
}

TEST(Compose, DriftIsProjectedAway) {
  Matrix m = exp_map(AlgebraVector(GroupKind::kSE3, {0.1, 0.2, 0.3, 1, 2, 3})).matrix();
  m(0, 0) += 1e-6;
  const GroupElement g = compose(GroupElement::identity(GroupKind::kSE3),
                                 GroupElement(GroupKind::kSE3, m));
  EXPECT_TRUE(invariant_defect(g).ok(1e-12));
}

TEST(AngleAxis, Examples) {
  EXPECT_EQ(angle_axis_to_group({Eigen::Vector3d(0, 1, 0), 0.0}).matrix(),
            Matrix::Identity(3, 3));
  Matrix want(3, 3);
  want << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((angle_axis_to_group({Eigen::Vector3d::UnitZ(), kPi / 2}).matrix() - want)
                .norm(),
            1e-15);
  Matrix flip = Matrix::Zero(3, 3);
  flip.diagonal() << 1, -1, -1;
  EXPECT_LT((angle_axis_to_group({Eigen::Vector3d::UnitX(), kPi}).matrix() - flip)
                .norm(),
            1e-15);
}

TEST(AngleAxis, MatchesExponential) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(-2 * kPi, 2 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d u = random_unit(rng);
    const double t = ang(rng);
    const Coeffs c = t * u;
    const Matrix lhs = angle_axis_to_group({u, t}).matrix();
    const Matrix rhs = exp_map(AlgebraVector(GroupKind::kSO3, c)).matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(AngleAxis, NonUnitAxisThrows) {
  EXPECT_THROW(angle_axis_to_group({Eigen::Vector3d(1, 1, 0), 0.5}),
               NormalizationError);
}

TEST(ExpJacobian, AtIdentityEqualsGenerators) {
  for (GroupKind kind : kAllKinds) {
    const Jacobian j = exp_jacobian(AlgebraVector::zero(kind));
    const Basis b = basis(kind);
    const int n = matrix_dim(kind);
    for (int i = 0; i < algebra_dim(kind); ++i) {
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) EXPECT_EQ(j(r * n + c, i), b.elements[i](r, c));
    }
  }
}

// Extended-precision oracle: double-precision central differences carry
// ~1e-10 absolute roundoff, far above 1e-6 relative on small entries.
TEST(ExpJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (GroupKind kind : kAllKinds) {
    std::vector<Eigen::MatrixXd> b;
    for (const Matrix& e : basis(kind).elements) b.emplace_back(e);
    for (int trial = 0; trial < 100; ++trial) {
      // Mix magnitudes so both series and closed-form branches are hit.
      const double scale = trial % 4 == 0 ? 5e-3 : 2 * kPi;
      const Coeffs c = random_coeffs(rng, kind, scale);
      const Eigen::MatrixXd fd =
          gemdyn::testing::quad_fd_exp_jacobian(b, Eigen::VectorXd(c), 1e-6);
      const Jacobian an = exp_jacobian(AlgebraVector(kind, c));
      for (Eigen::Index r = 0; r < fd.rows(); ++r) {
        for (Eigen::Index q = 0; q < fd.cols(); ++q) {
          if (std::abs(fd(r, q)) <= 1e-8) {
            EXPECT_LT(std::abs(an(r, q)), 2e-8);
            continue;
          }
          EXPECT_LT(gemdyn::testing::rel_error(an(r, q), fd(r, q)), 1e-6)
              << to_string(kind) << " r=" << r << " q=" << q << " an=" << an(r, q)
              << " fd=" << fd(r, q);
        }
      }
    }
  }
}

TEST(ExpJacobian, MatchesDoubleCentralDifferencesOnLargeEntries) {
  std::mt19937_64 rng(17);
  for (GroupKind kind : kAllKinds) {
    for (int trial = 0; trial < 100; ++trial) {
      const Coeffs c = random_coeffs(rng, kind, 2 * kPi);
      auto f = [kind](const Eigen::VectorXd& x) {
        const Matrix m = exp_coeffs(kind, Coeffs(x));
        return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()).eval();
      };
      const Eigen::MatrixXd fd = central_jacobian(f, Eigen::VectorXd(c), 1e-6);
      const Jacobian an = exp_jacobian(AlgebraVector(kind, c));
      EXPECT_LT((fd - Eigen::MatrixXd(an)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(FrobeniusDist2, Examples) {
  const GroupElement i2 = GroupElement::identity(GroupKind::kSO2);
  const GroupElement q = exp_map(AlgebraVector(GroupKind::kSO2, {kPi / 2}));
  EXPECT_EQ(frobenius_dist2(q, q), 0.0);
  EXPECT_NEAR(frobenius_dist2(i2, q), 4.0 * (1.0 - std::cos(kPi / 2)), 1e-14);
  EXPECT_EQ(frobenius_dist2(i2, q), frobenius_dist2(q, i2));
  EXPECT_THROW(frobenius_dist2(i2, GroupElement::identity(GroupKind::kSO3)),
               DimensionError);
}

}  // namespace
}  // namespace gemdyn::lie
