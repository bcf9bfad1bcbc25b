#include <doctest.h>

#include "ephs/geom.hpp"
#include "helpers.hpp"

using namespace ephs;
using namespace ephs::geom;
using test_helpers::random_element;
using test_helpers::random_twist;
using test_helpers::random_unit;
using test_helpers::random_vec3;
using test_helpers::random_wrench;
using test_helpers::uniform;

namespace {
const Convention kBoth[] = {Convention::DirectProduct, Convention::SemidirectProduct};

Mat3 rot_z(double a) {
  Mat3 R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}

bool near(const Vec3& a, const Vec3& b, double tol = 1e-12) { return (a - b).norm() <= tol; }
bool near(const Mat3& a, const Mat3& b, double tol = 1e-12) { return (a - b).norm() <= tol; }
}  // namespace

TEST_CASE("hat/vee basics") {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  CHECK(near(hat(Vec3(1, 2, 3)), expected));
  CHECK(near(hat(Vec3::Zero()), Mat3::Zero()));

  // hat(v) w = v x w
  for (int i = 0; i < 100; ++i) {
    Vec3 v = random_vec3(), w = random_vec3();
    CHECK(near(hat(v) * w, v.cross(w)));
    CHECK(near(vee(hat(v)), v));
  }

  CHECK(near(vee(Mat3::Zero()), Vec3::Zero()));
  CHECK(near(vee(hat(Vec3(1, 2, 3))), Vec3(1, 2, 3)));

  Mat3 bad = hat(Vec3(1, 2, 3));
  bad(0, 1) += 1e-6;  // symmetric perturbation above the 1e-9 gate
  CHECK_THROWS_WITH_AS(vee(bad), doctest::Contains("NotSkew"), Error);
}

TEST_CASE("compose and inverse") {
  for (Convention c : kBoth) {
    GroupElement a = make_element(Mat3::Identity(), Vec3(1, 2, 3), c);
    GroupElement b = make_element(Mat3::Identity(), Vec3(4, 5, 6), c);
    CHECK(near(compose(a, b).r, Vec3(5, 7, 9)));
  }

  GroupElement qz_semi = make_element(rot_z(M_PI / 2), Vec3::Zero(), Convention::SemidirectProduct);
  GroupElement tx_semi = make_element(Mat3::Identity(), Vec3(1, 0, 0), Convention::SemidirectProduct);
  CHECK(near(compose(qz_semi, tx_semi).r, Vec3(0, 1, 0)));

  GroupElement qz_dir = make_element(rot_z(M_PI / 2), Vec3::Zero(), Convention::DirectProduct);
  GroupElement tx_dir = make_element(Mat3::Identity(), Vec3(1, 0, 0), Convention::DirectProduct);
  CHECK(near(compose(qz_dir, tx_dir).r, Vec3(1, 0, 0)));

  CHECK_THROWS_WITH_AS(compose(qz_semi, tx_dir), doctest::Contains("ConventionMismatch"), Error);

  // (E, r)^{-1} = (E, -r); semidirect (Rz(pi/2),(1,0,0))^{-1} = (Rz(-pi/2),(0,1,0))
  GroupElement t = make_element(Mat3::Identity(), Vec3(7, -2, 0.5), Convention::SemidirectProduct);
  CHECK(near(inverse(t).r, Vec3(-7, 2, -0.5)));
  GroupElement g = make_element(rot_z(M_PI / 2), Vec3(1, 0, 0), Convention::SemidirectProduct);
  GroupElement gi = inverse(g);
  CHECK(near(gi.R, rot_z(-M_PI / 2)));
  CHECK(near(gi.r, Vec3(0, 1, 0)));

  for (Convention c : kBoth) {
    for (int i = 0; i < 100; ++i) {
      GroupElement q = random_element(c);
      GroupElement qq = inverse(inverse(q));
      CHECK(near(qq.R, q.R));
      CHECK(near(qq.r, q.r));
    }
  }
}

TEST_CASE("group axioms (1000 random elements)") {
  for (Convention c : kBoth) {
    for (int i = 0; i < 1000; ++i) {
      GroupElement a = random_element(c), b = random_element(c), d = random_element(c);
      GroupElement ab_d = compose(compose(a, b), d);
      GroupElement a_bd = compose(a, compose(b, d));
      CHECK((ab_d.R - a_bd.R).norm() <= 1e-12);
      CHECK((ab_d.r - a_bd.r).norm() <= 1e-12);

      GroupElement e = identity(c);
      GroupElement ae = compose(a, e);
      CHECK(near(ae.R, a.R));
      CHECK(near(ae.r, a.r));

      GroupElement a_ai = compose(a, inverse(a));
      CHECK((a_ai.R - Mat3::Identity()).norm() <= 1e-12);
      CHECK(a_ai.r.norm() <= 1e-12);
    }
  }
}

TEST_CASE("exp/log") {
  for (Convention c : kBoth) {
    GroupElement q = exp_map(Twist{}, c);
    CHECK(near(q.R, Mat3::Identity()));
    CHECK(near(q.r, Vec3::Zero()));
    Twist xi = log_map(identity(c));
    CHECK(xi.vec().norm() == 0.0);
  }

  GroupElement q = exp_map(Twist{Vec3(0, 0, M_PI / 2), Vec3::Zero()}, Convention::SemidirectProduct);
  CHECK(near(q.R, rot_z(M_PI / 2)));
  CHECK(near(q.r, Vec3::Zero()));
  Twist back = log_map(make_element(rot_z(M_PI / 2), Vec3::Zero(), Convention::SemidirectProduct));
  CHECK(near(back.angular, Vec3(0, 0, M_PI / 2)));

  // roundtrip for |w| < pi - 0.1, and invariant preservation without re-orthonormalization
  for (Convention c : kBoth) {
    for (int i = 0; i < 200; ++i) {
      Twist xi{random_unit() * uniform(0.0, M_PI - 0.1), random_vec3(2.0)};
      GroupElement g = exp_map(xi, c);
      CHECK(is_valid_element(g, 1e-12));
      Twist eta = log_map(g);
      CHECK((eta.vec() - xi.vec()).norm() <= 1e-10);
      GroupElement g2 = exp_map(eta, c);
      CHECK((g2.R - g.R).norm() <= 1e-10);
      CHECK((g2.r - g.r).norm() <= 1e-10);
    }
    // tiny angles hit the Taylor branch
    for (int i = 0; i < 50; ++i) {
      Twist xi{random_unit() * uniform(0.0, 1e-9), random_vec3(1.0)};
      Twist eta = log_map(exp_map(xi, c));
      CHECK((eta.vec() - xi.vec()).norm() <= 1e-15);
    }
  }

  GroupElement near_pi =
      make_element(exp_so3(Vec3(0, 0, M_PI - 1e-9)), Vec3::Zero(), Convention::SemidirectProduct);
  CHECK_THROWS_WITH_AS(log_map(near_pi), doctest::Contains("NearPiSingularity"), Error);
}

TEST_CASE("trivialization") {
  // q = (E, r), v = (0, rdot) -> (0, rdot)
  for (Convention c : kBoth) {
    GroupElement q = make_element(Mat3::Identity(), Vec3(5, 5, 5), c);
    MaterialTangent v{Mat3::Zero(), Vec3(1, 2, 3)};
    Twist u = left_trivialize(q, v);
    CHECK(near(u.angular, Vec3::Zero()));
    CHECK(near(u.linear, Vec3(1, 2, 3)));
  }

  for (Convention c : kBoth) {
    for (int i = 0; i < 100; ++i) {
      GroupElement q = random_element(c);
      Vec3 w = random_vec3();
      Vec3 rdot = random_vec3();
      MaterialTangent v{q.R * hat(w), rdot};
      Twist u = left_trivialize(q, v);
      CHECK(near(u.angular, w));
      if (c == Convention::SemidirectProduct)
        CHECK(near(u.linear, Vec3(q.R.transpose() * rdot)));
      else
        CHECK(near(u.linear, rdot));

      // untrivialize inverts it
      MaterialTangent v2 = untrivialize(q, u);
      CHECK(near(v2.dR, v.dR));
      CHECK(near(v2.dr, v.dr));
    }
  }

  GroupElement q = random_element(Convention::SemidirectProduct);
  MaterialTangent bad{q.R * (hat(Vec3(1, 0, 0)) + 1e-6 * Mat3::Identity()), Vec3::Zero()};
  CHECK_THROWS_WITH_AS(left_trivialize(q, bad), doctest::Contains("NotTangent"), Error);

  // untrivialize at identity pose: (hat(w), v) direct
  GroupElement e = identity(Convention::DirectProduct);
  Twist u{Vec3(1, 2, 3), Vec3(4, 5, 6)};
  MaterialTangent m = untrivialize(e, u);
  CHECK(near(m.dR, hat(Vec3(1, 2, 3))));
  CHECK(near(m.dr, Vec3(4, 5, 6)));
}

TEST_CASE("cotrivialize") {
  // gravity covector: F = (0, m g) -> (0, R^T m g) under semidirect
  GroupElement q = random_element(Convention::SemidirectProduct);
  Vec3 mg(0, 0, -9.81 * 2.0);
  Wrench f = cotrivialize(q, MaterialCotangent{Mat3::Zero(), mg});
  CHECK(near(f.angular, Vec3::Zero()));
  CHECK(near(f.linear, Vec3(q.R.transpose() * mg)));

  Wrench zero = cotrivialize(q, MaterialCotangent{});
  CHECK(zero.vec().norm() == 0.0);

  // power invariance <cotriv(q,F)|u> = <F|untriv(q,u)> at 1e-12
  for (Convention c : kBoth) {
    for (int i = 0; i < 100; ++i) {
      GroupElement g = random_element(c);
      MaterialCotangent F{Mat3::Random(), random_vec3(2.0)};
      Twist u = random_twist(2.0);
      double lhs = pairing(cotrivialize(g, F), u);
      double rhs = pairing(F, untrivialize(g, u));
      CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
  }
}

TEST_CASE("Ad and Ad*") {
  for (Convention c : kBoth) {
    Twist u = random_twist();
    Twist v = Ad(identity(c), u);
    CHECK(near(v.angular, u.angular));
    CHECK(near(v.linear, u.linear));
    Wrench f = random_wrench();
    Wrench g = Ad_star(identity(c), f);
    CHECK(near(g.angular, f.angular));
    CHECK(near(g.linear, f.linear));
  }

  // semidirect q=(E,d): Ad(q,u) = (w, v + d x w)
  Vec3 d = random_vec3();
  GroupElement qd = make_element(Mat3::Identity(), d, Convention::SemidirectProduct);
  Twist u{Vec3(0.3, -1, 2), Vec3(1, 1, 0)};
  Twist au = Ad(qd, u);
  CHECK(near(au.angular, u.angular));
  CHECK(near(au.linear, Vec3(u.linear + d.cross(u.angular))));

  GroupElement q100 = make_element(Mat3::Identity(), Vec3(1, 0, 0), Convention::SemidirectProduct);
  Twist uz{Vec3(0, 0, 1), Vec3::Zero()};
  Twist r = Ad(q100, uz);
  CHECK(near(r.angular, Vec3(0, 0, 1)));
  CHECK(near(r.linear, Vec3(0, -1, 0)));

  // Ad*: q=(E,(1,0,0)), f=(0,(0,1,0)) -> ((0,0,-1),(0,1,0))
  Wrench fy{Vec3::Zero(), Vec3(0, 1, 0)};
  Wrench rf = Ad_star(q100, fy);
  CHECK(near(rf.angular, Vec3(0, 0, -1)));
  CHECK(near(rf.linear, Vec3(0, 1, 0)));

  for (Convention c : kBoth) {
    for (int i = 0; i < 1000; ++i) {
      GroupElement q1 = random_element(c), q2 = random_element(c);
      Twist w = random_twist();
      // homomorphism
      Vec6 lhs = Ad(compose(q1, q2), w).vec();
      Vec6 rhs = Ad(q1, Ad(q2, w)).vec();
      CHECK((lhs - rhs).norm() <= 1e-12);
      // duality <Ad*_q f | u> = <f | Ad_q u>
      Wrench f = random_wrench();
      CHECK(std::abs(pairing(Ad_star(q1, f), w) - pairing(f, Ad(q1, w))) <= 1e-12);
      // dual chain: Ad*_{q1 q2} = Ad*_{q2} after Ad*_{q1}
      CHECK((Ad_star(compose(q1, q2), f).vec() - Ad_star(q2, Ad_star(q1, f)).vec()).norm() <=
            1e-12);
      // matrix forms agree
      CHECK((Ad_matrix(q1) * w.vec() - Ad(q1, w).vec()).norm() <= 1e-12);
      CHECK((Ad_star_matrix(q1) * f.vec() - Ad_star(q1, f).vec()).norm() <= 1e-12);
    }
  }
}

TEST_CASE("ad and ad*") {
  for (Convention c : kBoth) {
    for (int i = 0; i < 200; ++i) {
      Twist u = random_twist();
      CHECK(ad(u, u, c).vec().norm() == 0.0);
    }
  }

  Twist e1{Vec3(1, 0, 0), Vec3::Zero()};
  Twist e2{Vec3(0, 1, 0), Vec3::Zero()};
  CHECK(near(ad(e1, e2, Convention::SemidirectProduct).angular, Vec3(0, 0, 1)));
  CHECK(near(ad(e1, e2, Convention::SemidirectProduct).linear, Vec3::Zero()));

  // direct convention: translational part is 0 even with linear components
  Twist a = random_twist(), b = random_twist();
  CHECK(ad(a, b, Convention::DirectProduct).linear.norm() == 0.0);

  // ad*(u=0, p) = 0
  CHECK(ad_star(Twist{}, random_wrench(), Convention::SemidirectProduct).vec().norm() == 0.0);

  // w=(0,0,1), p_w=(1,0,0) -> ((0,-1,0), 0)
  Twist uz{Vec3(0, 0, 1), Vec3::Zero()};
  Wrench px{Vec3(1, 0, 0), Vec3::Zero()};
  Wrench res = ad_star(uz, px, Convention::SemidirectProduct);
  CHECK(near(res.angular, Vec3(0, -1, 0)));
  CHECK(near(res.linear, Vec3::Zero()));

  for (Convention c : kBoth) {
    for (int i = 0; i < 1000; ++i) {
      Twist u = random_twist(), w = random_twist();
      Wrench p = random_wrench();
      // duality <ad*_u p | w> = <p | ad_u w>
      CHECK(std::abs(pairing(ad_star(u, p, c), w) - pairing(p, ad(u, w, c))) <= 1e-12);
      // Jacobi identity
      Twist v = random_twist();
      Vec6 j = ad(u, ad(w, v, c), c).vec() + ad(w, ad(v, u, c), c).vec() +
               ad(v, ad(u, w, c), c).vec();
      CHECK(j.norm() <= 1e-12);
      CHECK((ad_matrix(u, c) * w.vec() - ad(u, w, c).vec()).norm() <= 1e-12);
    }
  }
}

TEST_CASE("se3 left jacobian matches finite differences") {
  const double eps = 1e-6;
  for (int i = 0; i < 50; ++i) {
    Twist xi = random_twist(1.2);
    Mat6 J = left_jacobian_se3(xi);
    CHECK((left_jacobian_inv_se3(xi) * J - Mat6::Identity()).norm() <= 1e-9);
    for (int k = 0; k < 6; ++k) {
      Vec6 dv = Vec6::Zero();
      dv[k] = eps;
      Twist xip = Twist::from(xi.vec() + dv);
      Twist xim = Twist::from(xi.vec() - dv);
      GroupElement gp = exp_map(xip, Convention::SemidirectProduct);
      GroupElement gm = exp_map(xim, Convention::SemidirectProduct);
      GroupElement gi = inverse(exp_map(xi, Convention::SemidirectProduct));
      // exp(xi + e_k) exp(xi)^-1 ~ exp(Jl(xi) e_k)
      Vec6 fd = (log_map(compose(gp, gi)).vec() - log_map(compose(gm, gi)).vec()) / (2 * eps);
      CHECK((fd - J.col(k)).norm() <= 1e-6);
    }
  }
}
