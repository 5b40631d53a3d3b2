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

#ifndef GEMDYN_LIE_HPP_
#define GEMDYN_LIE_HPP_

// Matrix Lie groups SO(2), SO(3), SE(2), SE(3) and their algebras.
//
// Algebra coefficient ordering
// ----------------------------
//   SO2: (w)                   one generator, +1 at (1,0)
//   SO3: (w1, w2, w3)          rotation about x, y, z
//   SE2: (w, v1, v2)           rotation first, then translation
//   SE3: (w1, w2, w3, v1, v2, v3)
//
// Matrices are dense, row-major, at most 4x4. Jacobians of the exponential
// are returned as (n*n) x K matrices whose row r*n + c holds d exp(a)(r,c).

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "gemdyn/errors.hpp"

namespace gemdyn::lie {

enum class GroupKind { kSO2, kSO3, kSE2, kSE3 };

constexpr int algebra_dim(GroupKind kind) {
  switch (kind) {
    case GroupKind::kSO2: return 1;
    case GroupKind::kSO3: return 3;
    case GroupKind::kSE2: return 3;
    case GroupKind::kSE3: return 6;
  }
  return 0;
}

constexpr int matrix_dim(GroupKind kind) {
  switch (kind) {
    case GroupKind::kSO2: return 2;
    case GroupKind::kSO3: return 3;
    case GroupKind::kSE2: return 3;
    case GroupKind::kSE3: return 4;
  }
  return 0;
}

// Dimension of the rotation block.
constexpr int rotation_dim(GroupKind kind) {
  return (kind == GroupKind::kSO2 || kind == GroupKind::kSE2) ? 2 : 3;
}

constexpr bool is_euclidean(GroupKind kind) {
  return kind == GroupKind::kSE2 || kind == GroupKind::kSE3;
}

inline std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::kSO2: return "SO2";
    case GroupKind::kSO3: return "SO3";
    case GroupKind::kSE2: return "SE2";
    case GroupKind::kSE3: return "SE3";
  }
  return "?";
}

inline GroupKind parse_group_kind(std::string_view name) {
  if (name == "SO2") return GroupKind::kSO2;
  if (name == "SO3") return GroupKind::kSO3;
  if (name == "SE2") return GroupKind::kSE2;
  if (name == "SE3") return GroupKind::kSE3;
  throw ParseError("unknown group kind '" + std::string(name) + "'");
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor, 4, 4>;
using Coeffs = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor, 16, 6>;

struct Basis {
  GroupKind kind;
  std::vector<Matrix> elements;
};

class AlgebraVector {
 public:
  AlgebraVector(GroupKind kind, Coeffs coeffs)
      : kind_(kind), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != algebra_dim(kind_)) {
      throw DimensionError("algebra vector for " + std::string(to_string(kind_)) +
                           " needs " + std::to_string(algebra_dim(kind_)) +
                           " coefficients, got " +
                           std::to_string(coeffs_.size()));
    }
  }
  AlgebraVector(GroupKind kind, std::initializer_list<double> values)
      : AlgebraVector(kind, from_list(values)) {}

  static AlgebraVector zero(GroupKind kind) {
    return AlgebraVector(kind, Coeffs::Zero(algebra_dim(kind)));
  }

  GroupKind kind() const { return kind_; }
  const Coeffs& coeffs() const { return coeffs_; }
  double operator[](int i) const { return coeffs_[i]; }
  bool finite() const { return coeffs_.allFinite(); }

 private:
  static Coeffs from_list(std::initializer_list<double> values) {
    Coeffs c(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) c[i++] = v;
    return c;
  }

  GroupKind kind_;
  Coeffs coeffs_;
};

class GroupElement {
 public:
  GroupElement(GroupKind kind, Matrix matrix)
      : kind_(kind), matrix_(std::move(matrix)) {
    const int n = matrix_dim(kind_);
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw DimensionError("group element for " + std::string(to_string(kind_)) +
                           " must be " + std::to_string(n) + "x" +
                           std::to_string(n));
    }
  }

  static GroupElement identity(GroupKind kind) {
    const int n = matrix_dim(kind);
    return GroupElement(kind, Matrix::Identity(n, n));
  }

  GroupKind kind() const { return kind_; }
  const Matrix& matrix() const { return matrix_; }
  double operator()(int r, int c) const { return matrix_(r, c); }

  auto rotation() const {
    const int k = rotation_dim(kind_);
    return matrix_.topLeftCorner(k, k);
  }

 private:
  GroupKind kind_;
  Matrix matrix_;
};

struct AngleAxis {
  Eigen::Vector3d axis;
  double angle = 0.0;
};

// Distance from the manifold: orthogonality and determinant of the rotation
// block, plus the deviation of the affine bottom row for SE kinds.
struct InvariantDefect {
  double orthogonality = 0.0;  // ||R^T R - I||_F
  double determinant = 0.0;    // |det R - 1|
  double affine_row = 0.0;     // max |last row - (0,...,0,1)|

  double worst() const {
    return std::max({orthogonality, determinant, affine_row});
  }
  bool ok(double tol = 1e-9) const { return worst() <= tol; }
};

inline InvariantDefect invariant_defect(const GroupElement& g) {
  InvariantDefect d;
  const int k = rotation_dim(g.kind());
  const Matrix r = g.rotation();
  d.orthogonality = (r.transpose() * r - Matrix::Identity(k, k)).norm();
  d.determinant = std::abs(r.determinant() - 1.0);
  if (is_euclidean(g.kind())) {
    const int n = matrix_dim(g.kind());
    for (int c = 0; c < n; ++c) {
      const double want = (c == n - 1) ? 1.0 : 0.0;
      d.affine_row = std::max(d.affine_row, std::abs(g(n - 1, c) - want));
    }
  }
  if (!g.matrix().allFinite()) {
    d.orthogonality = d.determinant = d.affine_row =
        std::numeric_limits<double>::infinity();
  }
  return d;
}

inline Basis basis(GroupKind kind) {
  const int n = matrix_dim(kind);
  auto zero = [n] { return Matrix::Zero(n, n).eval(); };
  Basis b{kind, {}};
  switch (kind) {
    case GroupKind::kSO2: {
      Matrix e = zero();
      e(0, 1) = -1.0;
      e(1, 0) = 1.0;
      b.elements.push_back(e);
      break;
    }
    case GroupKind::kSO3:
    case GroupKind::kSE3: {
      Matrix e1 = zero(), e2 = zero(), e3 = zero();
      e1(1, 2) = -1.0;
      e1(2, 1) = 1.0;
      e2(0, 2) = 1.0;
      e2(2, 0) = -1.0;
      e3(0, 1) = -1.0;
      e3(1, 0) = 1.0;
      b.elements = {e1, e2, e3};
      if (kind == GroupKind::kSE3) {
        for (int i = 0; i < 3; ++i) {
          Matrix t = zero();
          t(i, 3) = 1.0;
          b.elements.push_back(t);
        }
      }
      break;
    }
    case GroupKind::kSE2: {
      Matrix e1 = zero(), e2 = zero(), e3 = zero();
      e1(0, 1) = -1.0;
      e1(1, 0) = 1.0;
      e2(0, 2) = 1.0;
      e3(1, 2) = 1.0;
      b.elements = {e1, e2, e3};
      break;
    }
  }
  return b;
}

// Sum of coeffs[i] * elements[i] for an arbitrary basis; the injection point
// for selftest mutation fixtures.
inline Matrix hat(const Basis& b, const Coeffs& coeffs) {
  if (coeffs.size() != static_cast<Eigen::Index>(b.elements.size())) {
    throw DimensionError("hat: coefficient count does not match basis size");
  }
  const int n = matrix_dim(b.kind);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) m += coeffs[i] * b.elements[i];
  return m;
}

inline Matrix hat(const AlgebraVector& alpha) {
  // Cached per kind; bases are immutable.
  static const std::array<Basis, 4> kBases = {
      basis(GroupKind::kSO2), basis(GroupKind::kSO3), basis(GroupKind::kSE2),
      basis(GroupKind::kSE3)};
  return hat(kBases[static_cast<int>(alpha.kind())], alpha.coeffs());
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

namespace detail {

// Coefficient functions of the closed-form exponential and their
// derivatives, with series expansions near zero where the closed forms
// cancel catastrophically.
//   a = sin t / t          c = a'/t
//   b = (1 - cos t) / t^2  d = b'/t
//   e = (t - sin t) / t^3  f = e'/t
struct RotCoeffs {
  double a, b, e, c, d, f;
};

inline constexpr double kSeriesThreshold = 1e-2;

inline RotCoeffs rot_coeffs(double t) {
  RotCoeffs r;
  const double t2 = t * t;
  if (t < kSeriesThreshold) {
    const double t4 = t2 * t2, t6 = t4 * t2;
    r.a = 1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0;
    r.b = 0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0;
    r.e = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362880.0;
    r.c = -1.0 / 3.0 + t2 / 30.0 - t4 / 840.0 + t6 / 45360.0;
    r.d = -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0 + t6 / 453600.0;
    r.f = -1.0 / 60.0 + t2 / 1260.0 - t4 / 60480.0 + t6 / 4989600.0;
    return r;
  }
  const double s = std::sin(t), co = std::cos(t), sh = std::sin(0.5 * t);
  r.a = s / t;
  r.b = 2.0 * sh * sh / t2;
  r.e = (t - s) / (t2 * t);
  r.c = (co - r.a) / t2;
  r.d = (r.a - 2.0 * r.b) / t2;
  r.f = (r.b - 3.0 * r.e) / t2;
  return r;
}

// Planar: a = sin w / w, g = (1 - cos w) / w and their derivatives in w.
struct PlanarCoeffs {
  double a, g, da, dg;
};

inline PlanarCoeffs planar_coeffs(double w) {
  PlanarCoeffs p;
  const double aw = std::abs(w);
  if (aw < kSeriesThreshold) {
    const double w2 = w * w, w3 = w2 * w, w4 = w2 * w2, w5 = w4 * w, w6 = w4 * w2,
                 w7 = w6 * w;
    p.a = 1.0 - w2 / 6.0 + w4 / 120.0 - w6 / 5040.0;
    p.g = w / 2.0 - w3 / 24.0 + w5 / 720.0 - w7 / 40320.0;
    p.da = -w / 3.0 + w3 / 30.0 - w5 / 840.0 + w7 / 45360.0;
    p.dg = 0.5 - w2 / 8.0 + w4 / 144.0 - w6 / 5760.0;
    return p;
  }
  const double s = std::sin(w), c = std::cos(w), sh = std::sin(0.5 * w);
  p.a = s / w;
  p.g = 2.0 * sh * sh / w;
  p.da = (c - p.a) / w;
  p.dg = (s - p.g) / w;
  return p;
}

inline Eigen::Matrix2d planar_rotation(double w) {
  const double c = std::cos(w), s = std::sin(w);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const RotCoeffs rc = rot_coeffs(w.norm());
  const Eigen::Matrix3d k = skew(w);
  return Eigen::Matrix3d::Identity() + rc.a * k + rc.b * (k * k);
}

inline void require_finite(const Coeffs& c, const char* where) {
  if (!c.allFinite()) throw NumericError(std::string(where) + ": non-finite input");
}

}  // namespace detail

// Closed-form exponential on raw coefficients. Assumes the length matches.
inline Matrix exp_coeffs(GroupKind kind, const Coeffs& c) {
  detail::require_finite(c, "exp_map");
  const int n = matrix_dim(kind);
  Matrix m = Matrix::Identity(n, n);
  switch (kind) {
    case GroupKind::kSO2:
      m = detail::planar_rotation(c[0]);
      break;
    case GroupKind::kSE2: {
      const detail::PlanarCoeffs p = detail::planar_coeffs(c[0]);
      m.topLeftCorner(2, 2) = detail::planar_rotation(c[0]);
      m(0, 2) = p.a * c[1] - p.g * c[2];
      m(1, 2) = p.g * c[1] + p.a * c[2];
      break;
    }
    case GroupKind::kSO3:
      m = detail::rodrigues(c.head<3>());
      break;
    case GroupKind::kSE3: {
      const Eigen::Vector3d w = c.head<3>();
      const detail::RotCoeffs rc = detail::rot_coeffs(w.norm());
      const Eigen::Matrix3d k = skew(w);
      const Eigen::Matrix3d k2 = k * k;
      m.topLeftCorner(3, 3) = Eigen::Matrix3d::Identity() + rc.a * k + rc.b * k2;
      const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + rc.b * k + rc.e * k2;
      m.topRightCorner(3, 1) = v * c.tail<3>();
      break;
    }
  }
  return m;
}

inline GroupElement exp_map(const AlgebraVector& alpha) {
  return GroupElement(alpha.kind(), exp_coeffs(alpha.kind(), alpha.coeffs()));
}

// d vec(exp(c)) / dc on raw coefficients, row-major vec.
inline Jacobian exp_jacobian_coeffs(GroupKind kind, const Coeffs& c) {
  const int n = matrix_dim(kind);
  const int dof = algebra_dim(kind);
  Jacobian jac = Jacobian::Zero(n * n, dof);
  auto put = [&](int col, int row_off, int col_off, const auto& block) {
    for (int r = 0; r < block.rows(); ++r)
      for (int q = 0; q < block.cols(); ++q)
        jac((r + row_off) * n + q + col_off, col) = block(r, q);
  };
  switch (kind) {
    case GroupKind::kSO2:
    case GroupKind::kSE2: {
      const double w = c[0];
      const double cw = std::cos(w), sw = std::sin(w);
      Eigen::Matrix2d dr;
      dr << -sw, -cw, cw, -sw;
      put(0, 0, 0, dr);
      if (kind == GroupKind::kSE2) {
        const detail::PlanarCoeffs p = detail::planar_coeffs(w);
        Eigen::Vector2d dt;
        dt << p.da * c[1] - p.dg * c[2], p.dg * c[1] + p.da * c[2];
        put(0, 0, 2, dt);
        Eigen::Vector2d dv1(p.a, p.g), dv2(-p.g, p.a);
        put(1, 0, 2, dv1);
        put(2, 0, 2, dv2);
      }
      break;
    }
    case GroupKind::kSO3:
    case GroupKind::kSE3: {
      const Eigen::Vector3d w = c.head<3>();
      const detail::RotCoeffs rc = detail::rot_coeffs(w.norm());
      const Eigen::Matrix3d k = skew(w);
      const Eigen::Matrix3d k2 = k * k;
      Eigen::Vector3d rho = Eigen::Vector3d::Zero();
      if (kind == GroupKind::kSE3) rho = c.tail<3>();
      for (int i = 0; i < 3; ++i) {
        const Eigen::Matrix3d ei = skew(Eigen::Vector3d::Unit(i));
        const Eigen::Matrix3d sym = ei * k + k * ei;
        const Eigen::Matrix3d dr =
            rc.c * w[i] * k + rc.a * ei + rc.d * w[i] * k2 + rc.b * sym;
        put(i, 0, 0, dr);
        if (kind == GroupKind::kSE3) {
          const Eigen::Matrix3d dv =
              rc.d * w[i] * k + rc.b * ei + rc.f * w[i] * k2 + rc.e * sym;
          const Eigen::Vector3d dt = dv * rho;
          put(i, 0, 3, dt);
        }
      }
      if (kind == GroupKind::kSE3) {
        const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + rc.b * k + rc.e * k2;
        for (int j = 0; j < 3; ++j) {
          const Eigen::Vector3d col = v.col(j);
          put(3 + j, 0, 3, col);
        }
      }
      break;
    }
  }
  return jac;
}

inline Jacobian exp_jacobian(const AlgebraVector& alpha) {
  return exp_jacobian_coeffs(alpha.kind(), alpha.coeffs());
}

// Angle at which log_map refuses to choose a branch.
inline constexpr double kBranchTolerance = 1e-6;

inline AlgebraVector log_map(const GroupElement& g) {
  const Matrix& m = g.matrix();
  if (!m.allFinite()) throw NumericError("log_map: non-finite input");
  const GroupKind kind = g.kind();
  Coeffs out(algebra_dim(kind));
  auto branch_check = [](double angle) {
    if (std::numbers::pi - std::abs(angle) < kBranchTolerance) {
      throw BranchError("log_map: rotation angle at +-pi is ambiguous");
    }
  };
  switch (kind) {
    case GroupKind::kSO2:
    case GroupKind::kSE2: {
      const double w = std::atan2(m(1, 0), m(0, 0));
      branch_check(w);
      out[0] = w;
      if (kind == GroupKind::kSE2) {
        const detail::PlanarCoeffs p = detail::planar_coeffs(w);
        Eigen::Matrix2d v;
        v << p.a, -p.g, p.g, p.a;
        const Eigen::Vector2d rho = v.partialPivLu().solve(
            Eigen::Vector2d(m(0, 2), m(1, 2)));
        out.tail<2>() = rho;
      }
      break;
    }
    case GroupKind::kSO3:
    case GroupKind::kSE3: {
      const Eigen::Matrix3d r = m.topLeftCorner(3, 3);
      const Eigen::Vector3d vee(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
                                0.5 * (r(1, 0) - r(0, 1)));
      const double s = vee.norm();
      const double co = 0.5 * (r.trace() - 1.0);
      const double theta = std::atan2(s, co);
      branch_check(theta);
      double ratio;  // theta / sin(theta)
      if (theta < detail::kSeriesThreshold) {
        const double t2 = theta * theta;
        ratio = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
      } else {
        ratio = theta / std::sin(theta);
      }
      const Eigen::Vector3d w = ratio * vee;
      out.head<3>() = w;
      if (kind == GroupKind::kSE3) {
        const detail::RotCoeffs rc = detail::rot_coeffs(w.norm());
        const Eigen::Matrix3d k = skew(w);
        const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + rc.b * k + rc.e * k * k;
        const Eigen::Vector3d t(m(0, 3), m(1, 3), m(2, 3));
        out.tail<3>() = v.partialPivLu().solve(t);
      }
      break;
    }
  }
  return AlgebraVector(kind, out);
}

// Nearest rotation (polar factor) of the rotation block.
inline Matrix orthonormalize(GroupKind kind, const Matrix& m) {
  const int k = rotation_dim(kind);
  Matrix out = m;
  const Eigen::MatrixXd r = m.topLeftCorner(k, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.topLeftCorner(k, k) = svd.matrixU() * svd.matrixV().transpose();
  if (is_euclidean(kind)) {
    const int n = matrix_dim(kind);
    out.row(n - 1).setZero();
    out(n - 1, n - 1) = 1.0;
  }
  return out;
}

inline constexpr double kReorthonormalizeThreshold = 1e-9;

// Row-major product of two matrices of the same kind, projected back onto
// the group when drift exceeds the threshold.
inline Matrix compose_matrices(GroupKind kind, const Matrix& a, const Matrix& b) {
  Matrix c = a * b;
  const int k = rotation_dim(kind);
  const double defect =
      (c.topLeftCorner(k, k).transpose() * c.topLeftCorner(k, k) -
       Matrix::Identity(k, k)).norm();
  if (defect > kReorthonormalizeThreshold && std::isfinite(defect)) {
    c = orthonormalize(kind, c);
  }
  return c;
}

inline GroupElement compose(const GroupElement& a, const GroupElement& b) {
  if (a.kind() != b.kind()) throw DimensionError("compose: group kinds differ");
  return GroupElement(a.kind(), compose_matrices(a.kind(), a.matrix(), b.matrix()));
}

inline GroupElement inverse(const GroupElement& g) {
  const GroupKind kind = g.kind();
  const int k = rotation_dim(kind);
  Matrix m = g.matrix();
  const Matrix rt = g.rotation().transpose();
  m.topLeftCorner(k, k) = rt;
  if (is_euclidean(kind)) {
    const int n = matrix_dim(kind);
    m.topRightCorner(k, 1) = -rt * g.matrix().topRightCorner(k, 1);
  }
  return GroupElement(kind, m);
}

inline constexpr double kAxisTolerance = 1e-12;

// cos(t) I + sin(t) [u]x + (1 - cos(t)) u u^T.
inline GroupElement angle_axis_to_group(const AngleAxis& aa) {
  const double norm = aa.axis.norm();
  if (!(std::abs(norm - 1.0) <= kAxisTolerance)) {
    throw NormalizationError("angle_axis_to_group: axis is not a unit vector");
  }
  if (!std::isfinite(aa.angle)) throw NumericError("angle_axis_to_group: bad angle");
  const double c = std::cos(aa.angle), s = std::sin(aa.angle);
  const Eigen::Matrix3d g = c * Eigen::Matrix3d::Identity() + s * skew(aa.axis) +
                            (1.0 - c) * aa.axis * aa.axis.transpose();
  return GroupElement(GroupKind::kSO3, Matrix(g));
}

inline double frobenius_dist2(const GroupElement& a, const GroupElement& b) {
  if (a.kind() != b.kind()) throw DimensionError("frobenius_dist2: group kinds differ");
  return (a.matrix() - b.matrix()).squaredNorm();
}

}  // namespace gemdyn::lie

#endif  // GEMDYN_LIE_HPP_
