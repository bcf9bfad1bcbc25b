#include "ephs/models.hpp"

#include <cmath>
#include <functional>

namespace ephs::models {

namespace comp = ephs::components;

using core::Interface;
using core::PortDecl;
using core::PortKind;
using core::Quantity;
using core::Wire;
using geom::Convention;
using geom::Twist;
using geom::Vec6;
using geom::Wrench;

namespace {

PortDecl power(std::string name, Quantity q) { return {std::move(name), q, PortKind::Power}; }
PortDecl state(std::string name, Quantity q) { return {std::move(name), q, PortKind::State}; }

Eigen::MatrixXd zero_or(const Eigen::MatrixXd& m, int k) {
  return m.size() ? m : Eigen::MatrixXd(Eigen::MatrixXd::Zero(k, k));
}

}  // namespace

BuiltModel build_oscillator(double m, double k) {
  if (!(m > 0) || !(k >= 0)) fail("BadParam", "oscillator requires m > 0, k >= 0");
  Pattern p;
  p.name = "osc";
  p.outer.ports = {power("p", Quantity::momentum())};
  p.junctions.emplace("q", Quantity::displacement());
  p.junctions.emplace("p", Quantity::momentum());
  p.boxes.emplace("pe", Interface{{power("q", Quantity::displacement())}});
  p.boxes.emplace("ke", Interface{{power("p", Quantity::momentum())}});
  p.boxes.emplace("pkc", Interface{{power("q", Quantity::displacement()),
                                    power("p", Quantity::momentum())}});
  p.wires = {{"pe", "q", "q"},  {"pkc", "q", "q"}, {"ke", "p", "p"},
             {"pkc", "p", "p"}, {"", "p", "p"}};
  p.canonicalize();

  Binding b;
  b.items.emplace("pe", Binding::of(comp::make_spring(k)));
  b.items.emplace("ke", Binding::of(comp::make_point_mass(m)));
  b.items.emplace("pkc", Binding::of(comp::make_pkc1d()));
  return {p, b};
}

BuiltModel build_damped_oscillator(double m, double k, double d, double theta0) {
  if (!(theta0 > 0) || d < 0) fail("BadParam", "damped oscillator requires theta0 > 0, d >= 0");
  BuiltModel osc = build_oscillator(m, k);

  Pattern p;
  p.name = "damped_osc";
  p.junctions.emplace("p", Quantity::momentum());
  p.junctions.emplace("s", Quantity::entropy());
  p.boxes.emplace("osc", Interface{{power("p", Quantity::momentum())}});
  p.boxes.emplace("mf", Interface{{power("p", Quantity::momentum()),
                                   power("s", Quantity::entropy())}});
  p.boxes.emplace("env", Interface{{power("s", Quantity::entropy())}});
  p.wires = {{"osc", "p", "p"}, {"mf", "p", "p"}, {"mf", "s", "s"}, {"env", "s", "s"}};
  p.canonicalize();

  Binding b;
  b.items.emplace("osc", Binding::of(osc.pattern, osc.binding));
  b.items.emplace("mf", Binding::of(comp::make_friction1d(d)));
  b.items.emplace("env", Binding::of(comp::make_environment(theta0)));
  return {p, b};
}

BuiltModel build_body(const BodyParams& prm) {
  Pattern p;
  p.name = "body";
  p.outer.ports = {power("p", Quantity::momentum_gstar())};
  p.junctions.emplace("q", Quantity::pose());
  p.junctions.emplace("p", Quantity::momentum_gstar());
  p.boxes.emplace("pe", Interface{{power("q", Quantity::pose())}});
  p.boxes.emplace("ke", Interface{{power("p", Quantity::momentum_gstar())}});
  p.boxes.emplace("pkc", Interface{{power("q", Quantity::pose()),
                                    power("p", Quantity::momentum_gstar())}});
  p.boxes.emplace("lp", Interface{{power("p", Quantity::momentum_gstar())}});
  p.wires = {{"pe", "q", "q"}, {"pkc", "q", "q"}, {"ke", "p", "p"},
             {"pkc", "p", "p"}, {"lp", "p", "p"}, {"", "p", "p"}};
  p.canonicalize();

  Binding b;
  b.items.emplace("pe", Binding::of(comp::make_body_pe(prm.m, prm.g)));
  b.items.emplace("ke", Binding::of(comp::make_body_ke(prm.m, prm.J)));
  b.items.emplace("pkc", Binding::of(comp::make_body_pkc()));
  b.items.emplace("lp", Binding::of(comp::make_body_lp()));
  return {p, b};
}

BuiltModel build_joint(const JointParams& prm, std::optional<double> theta0) {
  const comp::SubgroupBasis basis = comp::make_subgroup(prm.type, prm.axis, prm.pitch);
  const int k = basis.dof();
  const Quantity rp = Quantity::relative_pose(prm.type);

  Pattern p;
  p.name = "joint";
  p.outer.ports = {power("p1", Quantity::momentum_gstar()),
                   power("p2", Quantity::momentum_gstar())};
  for (const char* j : {"p1", "p2", "j1", "j2"})
    p.junctions.emplace(j, Quantity::momentum_gstar());
  p.junctions.emplace("qr", rp);
  p.junctions.emplace("pr", Quantity::momentum());
  p.junctions.emplace("s", Quantity::entropy());

  p.boxes.emplace("o1", Interface{{power("p1", Quantity::momentum_gstar()),
                                   power("pj1", Quantity::momentum_gstar())}});
  p.boxes.emplace("o2", Interface{{power("p2", Quantity::momentum_gstar()),
                                   power("pj2", Quantity::momentum_gstar())}});
  p.boxes.emplace("hc", Interface{{power("pj1", Quantity::momentum_gstar()),
                                   power("pj2", Quantity::momentum_gstar()),
                                   power("pr", Quantity::momentum()), state("qr", rp)}});
  p.boxes.emplace("pe", Interface{{power("qr", rp)}});
  p.boxes.emplace("pkc", Interface{{power("qr", rp), power("pr", Quantity::momentum())}});
  p.boxes.emplace("mf", Interface{{power("pr", Quantity::momentum()),
                                   power("s", Quantity::entropy())}});
  p.boxes.emplace("env", Interface{{power("s", Quantity::entropy())}});

  p.wires = {{"o1", "p1", "p1"},  {"", "p1", "p1"},    {"o1", "pj1", "j1"},
             {"hc", "pj1", "j1"}, {"o2", "p2", "p2"},  {"", "p2", "p2"},
             {"o2", "pj2", "j2"}, {"hc", "pj2", "j2"}, {"hc", "qr", "qr"},
             {"pe", "qr", "qr"},  {"pkc", "qr", "qr"}, {"hc", "pr", "pr"},
             {"pkc", "pr", "pr"}, {"mf", "pr", "pr"},  {"mf", "s", "s"},
             {"env", "s", "s"}};
  p.canonicalize();

  Binding b;
  b.items.emplace("o1", Binding::of(comp::make_offset(prm.o1)));
  b.items.emplace("o2", Binding::of(comp::make_offset(prm.o2)));
  b.items.emplace("hc", Binding::of(comp::make_hc(basis)));
  b.items.emplace("pe", Binding::of(comp::make_joint_pe(basis, prm.stiffness)));
  b.items.emplace("pkc", Binding::of(comp::make_joint_pkc(basis)));
  b.items.emplace("mf", Binding::of(comp::make_joint_mf(basis, zero_or(prm.mu, k))));
  b.items.emplace("env", Binding::of(comp::make_environment(theta0)));
  return {p, b};
}

BuiltModel build_basic_mbs(const BodyParams& b1, const BodyParams& b2, const JointParams& j,
                           std::optional<double> theta0) {
  Pattern p;
  p.name = "mbs";
  p.junctions.emplace("p1", Quantity::momentum_gstar());
  p.junctions.emplace("p2", Quantity::momentum_gstar());
  p.boxes.emplace("b1", Interface{{power("p", Quantity::momentum_gstar())}});
  p.boxes.emplace("b2", Interface{{power("p", Quantity::momentum_gstar())}});
  p.boxes.emplace("j", Interface{{power("p1", Quantity::momentum_gstar()),
                                  power("p2", Quantity::momentum_gstar())}});
  p.wires = {{"b1", "p", "p1"}, {"j", "p1", "p1"}, {"b2", "p", "p2"}, {"j", "p2", "p2"}};
  p.canonicalize();

  BuiltModel body1 = build_body(b1);
  BuiltModel body2 = build_body(b2);
  BuiltModel joint = build_joint(j, theta0);

  Binding b;
  b.items.emplace("b1", Binding::of(body1.pattern, body1.binding));
  b.items.emplace("b2", Binding::of(body2.pattern, body2.binding));
  b.items.emplace("j", Binding::of(joint.pattern, joint.binding));
  return {p, b};
}

MbsDemo default_mbs_demo() {
  MbsDemo demo;
  demo.body.m = 1.0;
  demo.body.J = Vec3(1, 2, 3).asDiagonal();
  demo.body.g = Vec3(0, 0, -9.81);

  demo.joint.type = core::JointType::Revolute;
  demo.joint.axis = Vec3(0, 0, 1);
  demo.joint.o1 = geom::make_element(geom::Mat3::Identity(), Vec3(0, 0, 0.5),
                                     Convention::SemidirectProduct);
  demo.joint.o2 = geom::make_element(geom::Mat3::Identity(), Vec3(0, 0, -0.5),
                                     Convention::SemidirectProduct);
  demo.joint.mu = Eigen::MatrixXd::Constant(1, 1, 0.05);
  demo.joint.stiffness = Eigen::MatrixXd::Constant(1, 1, 2.0);

  demo.model = build_basic_mbs(demo.body, demo.body, demo.joint);

  // spin about the joint axis plus relative rate 1 rad/s; translation stays
  // aligned with gravity so the free fall is exactly resolved
  demo.q1 = geom::identity(Convention::SemidirectProduct);
  demo.qr = geom::identity(Convention::SemidirectProduct);
  demo.q2 = geom::compose(geom::compose(demo.q1, demo.joint.o1), geom::inverse(demo.joint.o2));

  const Twist u1{Vec3(0, 0, 0.2), Vec3::Zero()};
  const double u_r = 1.0;
  const Twist uj1 = geom::Ad(geom::inverse(demo.joint.o1), u1);
  Vec6 uj2 = uj1.vec();
  uj2.head<3>() += u_r * demo.joint.axis;
  const Twist u2 = geom::Ad(demo.joint.o2, Twist::from(uj2));

  auto momentum = [&](const Twist& u) {
    Vec6 p;
    p.head<3>() = demo.body.J * u.angular;
    p.tail<3>() = demo.body.m * u.linear;
    return Eigen::VectorXd(p);
  };
  demo.p1 = momentum(u1);
  demo.p2 = momentum(u2);
  demo.s0 = 0.0;
  return demo;
}

DampedOscSample oracle_damped_oscillator(double t, double m, double k, double d, double q0,
                                         double p0, double theta0) {
  if (!(d * d < 4.0 * m * k)) fail("Overdamped", "closed form requires d^2 < 4 m k");
  const double alpha = d / (2.0 * m);
  const double wbar = std::sqrt(k / m - alpha * alpha);
  const double c1 = q0;
  const double c2 = (p0 / m + alpha * q0) / wbar;
  const double e = std::exp(-alpha * t);
  const double cos_ = std::cos(wbar * t), sin_ = std::sin(wbar * t);
  const double q = e * (c1 * cos_ + c2 * sin_);
  const double qdot = e * (-alpha * (c1 * cos_ + c2 * sin_) + wbar * (c2 * cos_ - c1 * sin_));
  DampedOscSample out;
  out.q = q;
  out.p = m * qdot;
  const double e0 = 0.5 * k * q0 * q0 + p0 * p0 / (2.0 * m);
  const double et = 0.5 * k * q * q + out.p * out.p / (2.0 * m);
  out.s = (e0 - et) / theta0;
  return out;
}

namespace {

// flat ODE state for one rigid body: R (9, row-major), r (3), p (6)
Eigen::VectorXd body_rhs(const BodyParams& prm, const Eigen::VectorXd& y) {
  Eigen::Matrix3d R;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) R(i, j) = y[3 * i + j];
  const Vec3 pw = y.segment<3>(12), pv = y.segment<3>(15);
  const Vec3 w = prm.J.ldlt().solve(pw);
  const Vec3 v = pv / prm.m;

  Eigen::VectorXd dy(18);
  const Eigen::Matrix3d dR = R * geom::hat(w);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) dy[3 * i + j] = dR(i, j);
  dy.segment<3>(9) = R * v;
  dy.segment<3>(12) = pw.cross(w) + pv.cross(v);
  dy.segment<3>(15) = pv.cross(w) - R.transpose() * (prm.m * prm.g);
  return dy;
}

Eigen::VectorXd rk4(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                    Eigen::VectorXd y, double h, double t_end) {
  const long n = std::lround(t_end / h);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

}  // namespace

FreeBodyState oracle_body_rk4(const BodyParams& prm, const GroupElement& q0,
                              const Eigen::VectorXd& p0, double h, double t_end) {
  Eigen::VectorXd y(18);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) y[3 * i + j] = q0.R(i, j);
  y.segment<3>(9) = q0.r;
  y.segment<6>(12) = p0;

  y = rk4([&](const Eigen::VectorXd& s) { return body_rhs(prm, s); }, y, h, t_end);

  FreeBodyState out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.q.R(i, j) = y[3 * i + j];
  out.q.r = y.segment<3>(9);
  out.q.convention = Convention::SemidirectProduct;
  out.p = y.segment<6>(12);
  return out;
}

TwoBodyMinimalState oracle_two_body_minimal(const BodyParams& b1, const BodyParams& b2,
                                            const JointParams& jp, const GroupElement& q1_0,
                                            const Eigen::VectorXd& u1_0,
                                            const Eigen::VectorXd& theta0,
                                            const Eigen::VectorXd& thetadot0, double theta_env,
                                            double h, double t_end) {
  const comp::SubgroupBasis basis = comp::make_subgroup(jp.type, jp.axis, jp.pitch);
  const int k = basis.dof();
  const Eigen::MatrixXd mu = zero_or(jp.mu, k);
  const Eigen::MatrixXd K = zero_or(jp.stiffness, k);

  geom::Mat6 M1 = geom::Mat6::Zero(), M2 = geom::Mat6::Zero();
  M1.topLeftCorner<3, 3>() = b1.J;
  M1.bottomRightCorner<3, 3>() = b1.m * Eigen::Matrix3d::Identity();
  M2.topLeftCorner<3, 3>() = b2.J;
  M2.bottomRightCorner<3, 3>() = b2.m * Eigen::Matrix3d::Identity();

  const geom::Mat6 Ad_o1i = geom::Ad_matrix(geom::inverse(jp.o1));
  const geom::Mat6 Ad_o2 = geom::Ad_matrix(jp.o2);
  const Eigen::MatrixXd W = Ad_o2 * basis.B;  // 6 x k, constant

  // flat state: R1 (9), r1 (3), u1 (6), theta (k), thetadot (k), s (1)
  const int n = 18 + 2 * k + 1;
  auto rhs = [&](const Eigen::VectorXd& y) {
    Eigen::Matrix3d R1;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) R1(i, j) = y[3 * i + j];
    const Vec6 u1 = y.segment<6>(12);
    const Eigen::VectorXd th = y.segment(18, k);
    const Eigen::VectorXd thd = y.segment(18 + k, k);

    const GroupElement qr = basis.exp(th);
    const geom::Mat6 Ad_qri = geom::Ad_matrix(geom::inverse(qr));
    const Eigen::MatrixXd T = Ad_o2 * Ad_qri * Ad_o1i;

    const Vec6 u2 = T * u1 + W * thd;

    // d/dt Ad_{I(qr)^-1} = Ad_{I(qr)^-1} ad_{xi},  xi = -Ad_{I(qr)}(B thd)
    const Vec6 xi = -(geom::Ad_matrix(qr) * (basis.B * thd));
    const geom::Mat6 adxi = geom::ad_matrix(Twist::from(xi), Convention::SemidirectProduct);
    const Eigen::MatrixXd Tdot = Ad_o2 * Ad_qri * adxi * Ad_o1i;

    Eigen::MatrixXd S(12, 6 + k);
    S.setZero();
    S.topLeftCorner<6, 6>() = geom::Mat6::Identity();
    S.block(6, 0, 6, 6) = T;
    S.block(6, 6, 6, k) = W;

    auto bias = [&](const geom::Mat6& M, const Vec6& u, const Eigen::Matrix3d& R,
                    const BodyParams& bp) {
      const Wrench p = Wrench::from(M * u);
      Vec6 b = geom::ad_star(Twist::from(u), p, Convention::SemidirectProduct).vec();
      b.tail<3>() -= R.transpose() * (bp.m * bp.g);
      return b;
    };
    const Eigen::Matrix3d R2 = R1 * jp.o1.R * qr.R * jp.o2.R.transpose();
    Eigen::VectorXd bvec(12);
    bvec.head<6>() = bias(M1, u1, R1, b1);
    bvec.tail<6>() = bias(M2, u2, R2, b2);

    Eigen::MatrixXd Mbig = Eigen::MatrixXd::Zero(12, 12);
    Mbig.topLeftCorner<6, 6>() = M1;
    Mbig.bottomRightCorner<6, 6>() = M2;

    Eigen::VectorXd corr = Eigen::VectorXd::Zero(12);
    corr.tail<6>() = M2 * (Tdot * u1);

    Eigen::VectorXd gen = S.transpose() * (bvec - corr);
    gen.tail(k) -= K * th + mu * thd;  // joint potential + friction (abelian pairs)

    const Eigen::MatrixXd Mass = S.transpose() * Mbig * S;
    const Eigen::VectorXd vdot = Mass.ldlt().solve(gen);

    Eigen::VectorXd dy(n);
    const Eigen::Matrix3d dR1 = R1 * geom::hat(Vec3(u1.head<3>()));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dy[3 * i + j] = dR1(i, j);
    dy.segment<3>(9) = R1 * u1.tail<3>();
    dy.segment<6>(12) = vdot.head<6>();
    dy.segment(18, k) = thd;
    dy.segment(18 + k, k) = vdot.tail(k);
    dy[n - 1] = thd.dot(mu * thd) / theta_env;
    return dy;
  };

  Eigen::VectorXd y(n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) y[3 * i + j] = q1_0.R(i, j);
  y.segment<3>(9) = q1_0.r;
  y.segment<6>(12) = u1_0;
  y.segment(18, k) = theta0;
  y.segment(18 + k, k) = thetadot0;
  y[n - 1] = 0.0;

  y = rk4(rhs, y, h, t_end);

  TwoBodyMinimalState out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.q1.R(i, j) = y[3 * i + j];
  out.q1.r = y.segment<3>(9);
  out.q1.convention = Convention::SemidirectProduct;
  out.u1 = y.segment<6>(12);
  out.theta = y.segment(18, k);
  out.thetadot = y.segment(18 + k, k);
  out.qr = basis.exp(out.theta);
  out.q2 = geom::compose(geom::compose(geom::compose(out.q1, jp.o1), out.qr),
                         geom::inverse(jp.o2));
  out.entropy = y[n - 1];
  return out;
}

}  // namespace ephs::models
