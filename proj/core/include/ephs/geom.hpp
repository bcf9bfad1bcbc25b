#pragma once

#include <Eigen/Dense>

#include "ephs/error.hpp"

namespace ephs::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Group structure on SO(3) x R^3. The semidirect product is SE(3); the
/// direct product keeps translations in the inertial basis.
enum class Convention { DirectProduct, SemidirectProduct };

/// Pose (R, r): rotation matrix plus translation, under a fixed convention.
struct GroupElement {
  Mat3 R = Mat3::Identity();
  Vec3 r = Vec3::Zero();
  Convention convention = Convention::SemidirectProduct;
};

/// Left-trivialized velocity (omega, v) in g ~ R^6.
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  Vec6 vec() const {
    Vec6 u;
    u << angular, linear;
    return u;
  }
  static Twist from(const Vec6& u) { return {u.head<3>(), u.tail<3>()}; }
};

/// Force or momentum in g* ~ R^6; pairing <f|u> = f_w.w + f_v.v.
struct Wrench {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  Vec6 vec() const {
    Vec6 f;
    f << angular, linear;
    return f;
  }
  static Wrench from(const Vec6& f) { return {f.head<3>(), f.tail<3>()}; }
};

/// Material velocity (Rdot, rdot) at a pose q.
struct MaterialTangent {
  Mat3 dR = Mat3::Zero();
  Vec3 dr = Vec3::Zero();
};

/// Material covector at a pose q; pairing <(F_R,F_r)|(dR,dr)> = tr(F_R^T dR) + F_r^T dr.
struct MaterialCotangent {
  Mat3 FR = Mat3::Zero();
  Vec3 Fr = Vec3::Zero();
};

inline double pairing(const Wrench& f, const Twist& u) {
  return f.angular.dot(u.angular) + f.linear.dot(u.linear);
}
inline double pairing(const MaterialCotangent& F, const MaterialTangent& v) {
  return (F.FR.transpose() * v.dR).trace() + F.Fr.dot(v.dr);
}

// --- so(3) <-> R^3 ---

Mat3 hat(const Vec3& v);
/// Inverse of hat; rejects matrices that are not skew within 1e-9 (NotSkew).
Vec3 vee(const Mat3& S);

// --- SO(3) primitives ---

Mat3 exp_so3(const Vec3& omega);
/// Rotation vector of R; rejects angles within 1e-6 of pi (NearPiSingularity).
Vec3 log_so3(const Mat3& R);
Mat3 left_jacobian_so3(const Vec3& omega);
Mat3 left_jacobian_inv_so3(const Vec3& omega);

// --- group operations ---

GroupElement identity(Convention c);
/// Validates the GroupElement invariants (orthonormality, det = 1) at tol 1e-9.
GroupElement make_element(const Mat3& R, const Vec3& r, Convention c);
bool is_valid_element(const GroupElement& q, double tol = 1e-9);

GroupElement compose(const GroupElement& q1, const GroupElement& q2);
GroupElement inverse(const GroupElement& q);

GroupElement exp_map(const Twist& xi, Convention c);
Twist log_map(const GroupElement& q);

// --- trivialization ---

Twist left_trivialize(const GroupElement& q, const MaterialTangent& v);
MaterialTangent untrivialize(const GroupElement& q, const Twist& u);
Wrench cotrivialize(const GroupElement& q, const MaterialCotangent& F);

// --- adjoint / coadjoint actions ---

Twist Ad(const GroupElement& q, const Twist& u);
Wrench Ad_star(const GroupElement& q, const Wrench& f);
Twist ad(const Twist& u1, const Twist& u2, Convention c);
Wrench ad_star(const Twist& u, const Wrench& p, Convention c);

/// Matrix of Ad_q acting on stacked (omega, v) coordinates.
Mat6 Ad_matrix(const GroupElement& q);
/// Matrix of Ad*_q; the transpose of Ad_matrix(q).
Mat6 Ad_star_matrix(const GroupElement& q);
Mat6 ad_matrix(const Twist& u, Convention c);

/// Left Jacobian of the SE(3) exponential (semidirect product only) in
/// (omega, v) coordinates: exp(xi + eps*d) = exp(Jl(xi) d * eps) exp(xi) + O(eps^2).
Mat6 left_jacobian_se3(const Twist& xi);
Mat6 left_jacobian_inv_se3(const Twist& xi);
inline Mat6 right_jacobian_se3(const Twist& xi) {
  return left_jacobian_se3(Twist{-xi.angular, -xi.linear});
}
inline Mat6 right_jacobian_inv_se3(const Twist& xi) {
  return left_jacobian_inv_se3(Twist{-xi.angular, -xi.linear});
}

}  // namespace ephs::geom
