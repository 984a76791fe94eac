#pragma once

// Fixed-size 3D kernel: so(3) <-> R^3 isomorphism, projectors and the
// tagged matrix kinds used by the bearing models.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace bearing {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Thrown when a value violates a type invariant or an operation's precondition.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace tolerance {
inline constexpr double kSymmetry = 1e-14;
inline constexpr double kUnitNorm = 1e-12;
inline constexpr double kUnitReject = 1e-3;
inline constexpr double kRotation = 1e-9;
}  // namespace tolerance

/// Symmetric 3x3 matrix. Checked construction rejects asymmetry above 1e-14.
class SymMat3 {
public:
  SymMat3() : m_(Mat3::Zero()) {}
  explicit SymMat3(const Mat3& m);

  /// Symmetric part of an arbitrary matrix; for computed results whose
  /// asymmetry is pure rounding.
  static SymMat3 symmetrized(const Mat3& m);
  static SymMat3 diagonal(double a, double b, double c);

  const Mat3& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
  struct Unchecked {};
  SymMat3(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Antisymmetric 3x3 matrix, the matrix form of an so(3) element.
class SkewMat3 {
public:
  SkewMat3() : m_(Mat3::Zero()) {}
  explicit SkewMat3(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
  friend SkewMat3 hat(const Vec3& a);
  struct Unchecked {};
  SkewMat3(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Proper rotation (orthogonal, det +1) within a configurable tolerance.
class RotMat3 {
public:
  RotMat3() : m_(Mat3::Identity()) {}
  explicit RotMat3(const Mat3& m, double tol = tolerance::kRotation);

  static RotMat3 about_axis(const Vec3& axis, double angle);

  const Mat3& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
  Mat3 m_;
};

/// Unit vector. Renormalizes small drift; rejects deviations above 1e-3.
class UnitVec3 {
public:
  UnitVec3() : v_(0.0, 0.0, 1.0) {}
  explicit UnitVec3(const Vec3& v);
  UnitVec3(double x, double y, double z) : UnitVec3(Vec3(x, y, z)) {}

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }
  double operator[](int i) const { return v_[i]; }

private:
  Vec3 v_;
};

SkewMat3 hat(const Vec3& a);

/// Inverse of hat. Throws DomainError when the symmetric part exceeds `tol`.
Vec3 vee(const Mat3& s, double tol = tolerance::kSymmetry);
inline Vec3 vee(const SkewMat3& s) { return vee(s.matrix()); }

/// E - g g^T, the orthogonal projection onto the plane normal to g.
SymMat3 projector(const UnitVec3& g);

/// Same formula without the unit-norm requirement (extended ambient fields).
Mat3 projector_unnormalized(const Vec3& g);

inline Mat3 commutator(const Mat3& a, const Mat3& b) { return a * b - b * a; }

/// Symmetric part of d(A w x w)/dw, equal to [A, hat(w)] / 2.
SymMat3 lemma_symmetric_part(const SymMat3& a, const Vec3& w);

/// Largest |entry| of R^T R - E.
double orthogonality_defect(const Mat3& r);

/// Gram-Schmidt on the columns, returning a proper rotation.
Mat3 reorthonormalize(const Mat3& r);

}  // namespace bearing
