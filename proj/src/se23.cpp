#include "navkit/se23.hpp"

#include <algorithm>
#include <cmath>

#include "navkit/errors.hpp"

namespace navkit {

namespace {
constexpr double kSmall = 1e-8;
}

Mat3 skew(const Vec3& w) {
  Mat3 S;
  S << 0, -w.z(), w.y(),
       w.z(), 0, -w.x(),
      -w.y(), w.x(), 0;
  return S;
}

Vec3 vee(const Mat3& S) { return Vec3(S(2, 1), S(0, 2), S(1, 0)); }

Mat3 so3_expm1(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 A = skew(phi);
  double a, b;
  if (t < kSmall) {
    a = 1.0 - t * t / 6.0;
    b = 0.5 - t * t / 24.0;
  } else {
    const double h = std::sin(0.5 * t) / t;
    a = std::sin(t) / t;
    b = 2.0 * h * h;
  }
  return a * A + b * A * A;
}

Mat3 so3_exp(const Vec3& phi) { return Mat3::Identity() + so3_expm1(phi); }

Vec3 so3_log(const Mat3& R) {
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(R.determinant() - 1.0) > 1e-6)
    throw NotARotation();
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const Vec3 w = vee(R - R.transpose());  // 2 sin(t) axis
  const double t = std::atan2(0.5 * w.norm(), c);
  if (t < kSmall) return 0.5 * (1.0 + t * t / 6.0) * w;
  if (t < M_PI - 1e-3) return 0.5 * t / std::sin(t) * w;

  // Near pi: sin(t) carries no precision, read the axis off the symmetric part.
  const Mat3 B = (0.5 * (R + R.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int k;
  B.diagonal().maxCoeff(&k);
  Vec3 axis = B.col(k) / std::sqrt(std::max(B(k, k), 0.0));
  axis.normalize();
  if (axis.dot(w) < 0) axis = -axis;
  return t * axis;
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 A = skew(phi);
  if (t < kSmall) return Mat3::Identity() + 0.5 * A + A * A / 6.0;
  return Mat3::Identity() + (1.0 - std::cos(t)) / (t * t) * A +
         (t - std::sin(t)) / (t * t * t) * A * A;
}

Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 A = skew(phi);
  if (t < kSmall) return Mat3::Identity() - 0.5 * A + A * A / 12.0;
  const double k = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  return Mat3::Identity() - 0.5 * A + k * A * A;
}

SE23Element se23_compose(const SE23Element& a, const SE23Element& b) {
  return {a.R * b.R, a.R * b.v + a.v, a.R * b.p + a.p};
}

SE23Element se23_inverse(const SE23Element& x) {
  const Mat3 Rt = x.R.transpose();
  return {Rt, -Rt * x.v, -Rt * x.p};
}

SE23Element se23_exp(const TangentVector& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 J = so3_left_jacobian(phi);
  return {so3_exp(phi), J * xi.segment<3>(3), J * xi.tail<3>()};
}

TangentVector se23_log(const SE23Element& x) {
  const Vec3 phi = so3_log(x.R);
  if (std::abs(phi.norm() - M_PI) < 1e-6) throw AngleAtPi();
  const Mat3 Ji = so3_left_jacobian_inv(phi);
  return tangent(phi, Ji * x.v, Ji * x.p);
}

Adjoint9 adjoint(const SE23Element& x) {
  Adjoint9 Ad = Adjoint9::Zero();
  Ad.block<3, 3>(0, 0) = x.R;
  Ad.block<3, 3>(3, 0) = skew(x.v) * x.R;
  Ad.block<3, 3>(3, 3) = x.R;
  Ad.block<3, 3>(6, 0) = skew(x.p) * x.R;
  Ad.block<3, 3>(6, 6) = x.R;
  return Ad;
}

Mat5 embed5(const SE23Element& x) {
  Mat5 M = Mat5::Identity();
  M.block<3, 3>(0, 0) = x.R;
  M.block<3, 1>(0, 3) = x.v;
  M.block<3, 1>(0, 4) = x.p;
  return M;
}

SE23Element from5(const Mat5& M) {
  return {M.block<3, 3>(0, 0), M.block<3, 1>(0, 3), M.block<3, 1>(0, 4)};
}

Mat5 wedge(const TangentVector& xi) {
  Mat5 A = Mat5::Zero();
  A.block<3, 3>(0, 0) = skew(xi.head<3>());
  A.block<3, 1>(0, 3) = xi.segment<3>(3);
  A.block<3, 1>(0, 4) = xi.tail<3>();
  return A;
}

TangentVector vee5(const Mat5& A) {
  return tangent(vee(A.block<3, 3>(0, 0)), A.block<3, 1>(0, 3), A.block<3, 1>(0, 4));
}

}  // namespace navkit
