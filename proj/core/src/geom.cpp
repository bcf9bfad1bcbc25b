#include "ephs/geom.hpp"

#include <cmath>

namespace ephs::geom {

namespace {

constexpr double kSmallAngle = 1e-8;   // Taylor fallback threshold
constexpr double kSkewTol = 1e-9;
constexpr double kLogPiMargin = 1e-6;

double sinc(double t) {  // sin(t)/t
  if (std::abs(t) < kSmallAngle) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

double one_minus_cos_over_t2(double t) {  // (1-cos t)/t^2
  if (std::abs(t) < kSmallAngle) return 0.5 - t * t / 24.0;
  return (1.0 - std::cos(t)) / (t * t);
}

double t_minus_sin_over_t3(double t) {  // (t-sin t)/t^3
  if (std::abs(t) < kSmallAngle) return 1.0 / 6.0 - t * t / 120.0;
  return (t - std::sin(t)) / (t * t * t);
}

}  // namespace

Mat3 hat(const Vec3& v) {
  Mat3 S;
  S << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return S;
}

Vec3 vee(const Mat3& S) {
  if ((S + S.transpose()).norm() > kSkewTol)
    fail("NotSkew", "matrix is not skew-symmetric within 1e-9");
  return Vec3(S(2, 1), S(0, 2), S(1, 0));
}

Mat3 exp_so3(const Vec3& omega) {
  const double t = omega.norm();
  const Mat3 W = hat(omega);
  return Mat3::Identity() + sinc(t) * W + one_minus_cos_over_t2(t) * W * W;
}

Vec3 log_so3(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double t = std::acos(c);
  if (t > M_PI - kLogPiMargin)
    fail("NearPiSingularity", "rotation angle within 1e-6 of pi");
  // log(R) = t/(2 sin t) * (R - R^T), with Taylor guard near t = 0.
  double factor;
  if (t < kSmallAngle) {
    factor = 0.5 + t * t / 12.0;
  } else {
    factor = 0.5 * t / std::sin(t);
  }
  const Mat3 S = factor * (R - R.transpose());
  return Vec3(S(2, 1), S(0, 2), S(1, 0));
}

Mat3 left_jacobian_so3(const Vec3& omega) {
  const double t = omega.norm();
  const Mat3 W = hat(omega);
  return Mat3::Identity() + one_minus_cos_over_t2(t) * W +
         t_minus_sin_over_t3(t) * W * W;
}

Mat3 left_jacobian_inv_so3(const Vec3& omega) {
  const double t = omega.norm();
  const Mat3 W = hat(omega);
  double c;  // 1/t^2 - (1+cos t)/(2 t sin t)
  if (t < 1e-4) {
    c = 1.0 / 12.0 + t * t / 720.0;
  } else {
    c = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Mat3::Identity() - 0.5 * W + c * W * W;
}

GroupElement identity(Convention c) { return GroupElement{Mat3::Identity(), Vec3::Zero(), c}; }

bool is_valid_element(const GroupElement& q, double tol) {
  if (!q.R.allFinite() || !q.r.allFinite()) return false;
  if ((q.R.transpose() * q.R - Mat3::Identity()).norm() > tol) return false;
  if (std::abs(q.R.determinant() - 1.0) > tol) return false;
  return true;
}

GroupElement make_element(const Mat3& R, const Vec3& r, Convention c) {
  GroupElement q{R, r, c};
  if (!is_valid_element(q))
    fail("InvalidGroupElement", "rotation fails orthonormality/determinant check");
  return q;
}

GroupElement compose(const GroupElement& q1, const GroupElement& q2) {
  if (q1.convention != q2.convention)
    fail("ConventionMismatch", "cannot compose elements of different group conventions");
  GroupElement out;
  out.convention = q1.convention;
  out.R = q1.R * q2.R;
  if (q1.convention == Convention::DirectProduct) {
    out.r = q1.r + q2.r;
  } else {
    out.r = q1.r + q1.R * q2.r;
  }
  return out;
}

GroupElement inverse(const GroupElement& q) {
  GroupElement out;
  out.convention = q.convention;
  out.R = q.R.transpose();
  if (q.convention == Convention::DirectProduct) {
    out.r = -q.r;
  } else {
    out.r = -(q.R.transpose() * q.r);
  }
  return out;
}

GroupElement exp_map(const Twist& xi, Convention c) {
  GroupElement out;
  out.convention = c;
  out.R = exp_so3(xi.angular);
  if (c == Convention::DirectProduct) {
    out.r = xi.linear;
  } else {
    out.r = left_jacobian_so3(xi.angular) * xi.linear;
  }
  return out;
}

Twist log_map(const GroupElement& q) {
  Twist xi;
  xi.angular = log_so3(q.R);
  if (q.convention == Convention::DirectProduct) {
    xi.linear = q.r;
  } else {
    xi.linear = left_jacobian_inv_so3(xi.angular) * q.r;
  }
  return xi;
}

Twist left_trivialize(const GroupElement& q, const MaterialTangent& v) {
  const Mat3 W = q.R.transpose() * v.dR;
  if ((W + W.transpose()).norm() > kSkewTol)
    fail("NotTangent", "material velocity is not tangent at q (R^T dR not skew)");
  Twist u;
  u.angular = Vec3(W(2, 1), W(0, 2), W(1, 0));
  u.linear = (q.convention == Convention::DirectProduct) ? v.dr
                                                         : Vec3(q.R.transpose() * v.dr);
  return u;
}

MaterialTangent untrivialize(const GroupElement& q, const Twist& u) {
  MaterialTangent v;
  v.dR = q.R * hat(u.angular);
  v.dr = (q.convention == Convention::DirectProduct) ? u.linear : Vec3(q.R * u.linear);
  return v;
}

Wrench cotrivialize(const GroupElement& q, const MaterialCotangent& F) {
  // Rotational part from the trace pairing: tr(F_R^T R hat(w)) = <2 vee(skew(R^T F_R)), w>.
  const Mat3 A = q.R.transpose() * F.FR;
  const Mat3 S = 0.5 * (A - A.transpose());
  Wrench f;
  f.angular = 2.0 * Vec3(S(2, 1), S(0, 2), S(1, 0));
  f.linear = (q.convention == Convention::DirectProduct) ? F.Fr : Vec3(q.R.transpose() * F.Fr);
  return f;
}

Twist Ad(const GroupElement& q, const Twist& u) {
  Twist out;
  out.angular = q.R * u.angular;
  if (q.convention == Convention::DirectProduct) {
    out.linear = u.linear;
  } else {
    out.linear = q.R * u.linear - out.angular.cross(q.r);
  }
  return out;
}

Wrench Ad_star(const GroupElement& q, const Wrench& f) {
  Wrench out;
  if (q.convention == Convention::DirectProduct) {
    out.angular = q.R.transpose() * f.angular;
    out.linear = f.linear;
  } else {
    out.angular = q.R.transpose() * (f.angular - q.r.cross(f.linear));
    out.linear = q.R.transpose() * f.linear;
  }
  return out;
}

Twist ad(const Twist& u1, const Twist& u2, Convention c) {
  Twist out;
  out.angular = u1.angular.cross(u2.angular);
  if (c == Convention::DirectProduct) {
    out.linear = Vec3::Zero();
  } else {
    out.linear = u1.angular.cross(u2.linear) - u2.angular.cross(u1.linear);
  }
  return out;
}

Wrench ad_star(const Twist& u, const Wrench& p, Convention c) {
  Wrench out;
  if (c == Convention::DirectProduct) {
    out.angular = p.angular.cross(u.angular);
    out.linear = Vec3::Zero();
  } else {
    out.angular = p.angular.cross(u.angular) + p.linear.cross(u.linear);
    out.linear = p.linear.cross(u.angular);
  }
  return out;
}

Mat6 Ad_matrix(const GroupElement& q) {
  Mat6 A = Mat6::Zero();
  A.topLeftCorner<3, 3>() = q.R;
  if (q.convention == Convention::DirectProduct) {
    A.bottomRightCorner<3, 3>() = Mat3::Identity();
  } else {
    A.bottomRightCorner<3, 3>() = q.R;
    A.bottomLeftCorner<3, 3>() = hat(q.r) * q.R;
  }
  return A;
}

Mat6 Ad_star_matrix(const GroupElement& q) { return Ad_matrix(q).transpose(); }

Mat6 ad_matrix(const Twist& u, Convention c) {
  Mat6 A = Mat6::Zero();
  const Mat3 W = hat(u.angular);
  A.topLeftCorner<3, 3>() = W;
  if (c == Convention::SemidirectProduct) {
    A.bottomLeftCorner<3, 3>() = hat(u.linear);
    A.bottomRightCorner<3, 3>() = W;
  }
  return A;
}

Mat6 left_jacobian_se3(const Twist& xi) {
  const Vec3& w = xi.angular;
  const Vec3& v = xi.linear;
  const double t = w.norm();
  const Mat3 W = hat(w);
  const Mat3 V = hat(v);
  const Mat3 Jl = left_jacobian_so3(w);

  const double c1 = t_minus_sin_over_t3(t);
  double c2;  // (1 - t^2/2 - cos t)/t^4
  double c3;  // (t - sin t - t^3/6)/t^5
  if (t < 1e-4) {
    c2 = 1.0 / 24.0 - t * t / 720.0;
    c3 = -1.0 / 120.0 + t * t / 5040.0;
  } else {
    const double t2 = t * t;
    c2 = (1.0 - t2 / 2.0 - std::cos(t)) / (t2 * t2);
    c3 = (t - std::sin(t) - t2 * t / 6.0) / (t2 * t2 * t);
  }

  const Mat3 Q = 0.5 * V + c1 * (W * V + V * W + W * V * W) -
                 c2 * (W * W * V + V * W * W - 3.0 * W * V * W) -
                 0.5 * (c2 - 3.0 * c3) * (W * V * W * W + W * W * V * W);

  Mat6 J = Mat6::Zero();
  J.topLeftCorner<3, 3>() = Jl;
  J.bottomRightCorner<3, 3>() = Jl;
  J.bottomLeftCorner<3, 3>() = Q;
  return J;
}

Mat6 left_jacobian_inv_se3(const Twist& xi) {
  const Mat3 Jli = left_jacobian_inv_so3(xi.angular);
  const Mat6 J = left_jacobian_se3(xi);
  const Mat3 Q = J.bottomLeftCorner<3, 3>();
  Mat6 Jinv = Mat6::Zero();
  Jinv.topLeftCorner<3, 3>() = Jli;
  Jinv.bottomRightCorner<3, 3>() = Jli;
  Jinv.bottomLeftCorner<3, 3>() = -Jli * Q * Jli;
  return Jinv;
}

}  // namespace ephs::geom
