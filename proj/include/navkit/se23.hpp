#pragma once

#include <Eigen/Dense>

namespace navkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Adjoint9 = Mat9;

// (phi, rho_v, rho_r) stacked in that order.
using TangentVector = Vec9;

struct SE23Element {
  Mat3 R = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();

  static SE23Element Identity() { return {}; }
};

Mat3 skew(const Vec3& w);
Vec3 vee(const Mat3& S);

Mat3 so3_exp(const Vec3& phi);
// exp(phi) - I without forming the identity.
Mat3 so3_expm1(const Vec3& phi);
Vec3 so3_log(const Mat3& R);
Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inv(const Vec3& phi);

SE23Element se23_compose(const SE23Element& a, const SE23Element& b);
SE23Element se23_inverse(const SE23Element& x);
SE23Element se23_exp(const TangentVector& xi);
TangentVector se23_log(const SE23Element& x);
Adjoint9 adjoint(const SE23Element& x);

Mat5 embed5(const SE23Element& x);
SE23Element from5(const Mat5& M);
Mat5 wedge(const TangentVector& xi);
TangentVector vee5(const Mat5& A);

inline TangentVector tangent(const Vec3& phi, const Vec3& rv, const Vec3& rr) {
  TangentVector xi;
  xi << phi, rv, rr;
  return xi;
}

inline SE23Element operator*(const SE23Element& a, const SE23Element& b) {
  return se23_compose(a, b);
}

}  // namespace navkit
