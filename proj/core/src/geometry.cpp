#include "bearing/geometry.hpp"

#include <cmath>

namespace bearing {

namespace {

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

bool finite(const Mat3& m) { return m.allFinite(); }

}  // namespace

SymMat3::SymMat3(const Mat3& m) : m_(m) {
  if (!finite(m)) throw DomainError("SymMat3: non-finite entry");
  if (max_abs(m - m.transpose()) > tolerance::kSymmetry)
    throw DomainError("SymMat3: matrix is not symmetric");
}

SymMat3 SymMat3::symmetrized(const Mat3& m) {
  if (!finite(m)) throw DomainError("SymMat3: non-finite entry");
  return SymMat3(0.5 * (m + m.transpose()), Unchecked{});
}

SymMat3 SymMat3::diagonal(double a, double b, double c) {
  return SymMat3(Vec3(a, b, c).asDiagonal().toDenseMatrix(), Unchecked{});
}

SkewMat3::SkewMat3(const Mat3& m) : m_(m) {
  if (!finite(m)) throw DomainError("SkewMat3: non-finite entry");
  if (max_abs(m + m.transpose()) > tolerance::kSymmetry)
    throw DomainError("SkewMat3: matrix is not antisymmetric");
}

RotMat3::RotMat3(const Mat3& m, double tol) : m_(m) {
  if (!finite(m)) throw DomainError("RotMat3: non-finite entry");
  if (orthogonality_defect(m) > tol) throw DomainError("RotMat3: matrix is not orthogonal");
  if (std::abs(m.determinant() - 1.0) > tol) throw DomainError("RotMat3: determinant is not +1");
}

RotMat3 RotMat3::about_axis(const Vec3& axis, double angle) {
  return RotMat3(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
}

UnitVec3::UnitVec3(const Vec3& v) {
  if (!v.allFinite()) throw DomainError("UnitVec3: non-finite component");
  const double n = v.norm();
  if (std::abs(n - 1.0) > tolerance::kUnitReject)
    throw DomainError("UnitVec3: norm " + std::to_string(n) + " is not close to 1");
  v_ = std::abs(n - 1.0) > tolerance::kUnitNorm ? Vec3(v / n) : v;
}

SkewMat3 hat(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return SkewMat3(m, SkewMat3::Unchecked{});
}

Vec3 vee(const Mat3& s, double tol) {
  if (max_abs(s + s.transpose()) > tol)
    throw DomainError("vee: matrix has a non-negligible symmetric part");
  return Vec3(0.5 * (s(2, 1) - s(1, 2)), 0.5 * (s(0, 2) - s(2, 0)), 0.5 * (s(1, 0) - s(0, 1)));
}

SymMat3 projector(const UnitVec3& g) {
  return SymMat3::symmetrized(projector_unnormalized(g.vec()));
}

Mat3 projector_unnormalized(const Vec3& g) { return Mat3::Identity() - g * g.transpose(); }

SymMat3 lemma_symmetric_part(const SymMat3& a, const Vec3& w) {
  return SymMat3::symmetrized(0.5 * commutator(a.matrix(), hat(w).matrix()));
}

double orthogonality_defect(const Mat3& r) {
  return max_abs(r.transpose() * r - Mat3::Identity());
}

Mat3 reorthonormalize(const Mat3& r) {
  Vec3 c0 = r.col(0).normalized();
  Vec3 c1 = (r.col(1) - c0.dot(r.col(1)) * c0).normalized();
  Vec3 c2 = c0.cross(c1);
  Mat3 out;
  out.col(0) = c0;
  out.col(1) = c1;
  out.col(2) = c2;
  return out;
}

}  // namespace bearing
