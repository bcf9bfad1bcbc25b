#include "ephs/components.hpp"

#include <Eigen/Eigenvalues>

namespace ephs::components {

using core::PortDecl;
using core::PortKind;
using geom::Mat3;
using geom::Vec6;

std::string catalog_ctor_name(Catalog c) {
  switch (c) {
    case Catalog::Spring1D: return "spring";
    case Catalog::PointMass1D: return "pointmass";
    case Catalog::Pkc1D: return "pkc1d";
    case Catalog::Friction1D: return "friction1d";
    case Catalog::BodyPe: return "bodype";
    case Catalog::BodyKe: return "bodyke";
    case Catalog::BodyPkc: return "bodypkc";
    case Catalog::BodyLp: return "bodylp";
    case Catalog::JointPe: return "jointpe";
    case Catalog::JointPkc: return "jointpkc";
    case Catalog::JointMf: return "jointmf";
    case Catalog::Offset: return "offset";
    case Catalog::Hc: return "hc";
    case Catalog::Environment: return "environment";
  }
  return "?";
}

int joint_dof(JointType t) {
  switch (t) {
    case JointType::Spherical:
    case JointType::Planar: return 3;
    case JointType::Cylindrical: return 2;
    case JointType::Revolute:
    case JointType::Prismatic:
    case JointType::Screw: return 1;
  }
  return 0;
}

namespace {

Vec3 orthogonal_unit(const Vec3& n) {
  // deterministic completion: cross with the least-aligned basis vector
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) < std::abs(n[k])) k = i;
  return n.cross(Vec3::Unit(k)).normalized();
}

void check_symmetric_nonneg(const Eigen::MatrixXd& A, const std::string& what) {
  if (A.rows() != A.cols()) fail("BadParam", what + " must be square");
  if ((A - A.transpose()).norm() > 1e-9 * std::max(1.0, A.norm()))
    fail("BadParam", what + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.eigenvalues().minCoeff() < -1e-12)
    fail("BadParam", what + " must be non-negative definite");
}

}  // namespace

GroupElement SubgroupBasis::exp(const Eigen::VectorXd& xi) const {
  if (xi.size() != dof()) fail("DimensionMismatch", "subgroup coordinate size");
  Vec6 w = B * xi;
  return geom::exp_map(Twist::from(w), geom::Convention::SemidirectProduct);
}

Eigen::VectorXd SubgroupBasis::coords(const GroupElement& q) const {
  return Bpinv * geom::log_map(q).vec();
}

double SubgroupBasis::membership_defect(const GroupElement& q) const {
  const Vec6 xi = geom::log_map(q).vec();
  return (xi - B * (Bpinv * xi)).norm();
}

SubgroupBasis make_subgroup(JointType type, const Vec3& axis, double pitch) {
  if (std::abs(axis.norm() - 1.0) > 1e-9)
    fail("BadAxis", "joint axis must be a unit vector");
  SubgroupBasis s;
  s.type = type;
  s.axis = axis;
  s.pitch = pitch;
  const int k = joint_dof(type);
  s.B.resize(6, k);
  s.B.setZero();
  switch (type) {
    case JointType::Revolute:
      s.B.col(0).head<3>() = axis;
      break;
    case JointType::Prismatic:
      s.B.col(0).tail<3>() = axis;
      break;
    case JointType::Screw:
      s.B.col(0).head<3>() = axis;
      s.B.col(0).tail<3>() = pitch * axis;
      break;
    case JointType::Cylindrical:
      s.B.col(0).head<3>() = axis;
      s.B.col(1).tail<3>() = axis;
      break;
    case JointType::Spherical:
      s.B.block<3, 3>(0, 0) = Mat3::Identity();
      break;
    case JointType::Planar: {
      // rotation about the plane normal plus the two in-plane translations
      const Vec3 t1 = orthogonal_unit(axis);
      const Vec3 t2 = axis.cross(t1);
      s.B.col(0).head<3>() = axis;
      s.B.col(1).tail<3>() = t1;
      s.B.col(2).tail<3>() = t2;
      break;
    }
  }
  s.Bpinv = (s.B.transpose() * s.B).ldlt().solve(s.B.transpose());
  return s;
}

ArgValue ArgValue::num(double v) {
  ArgValue a;
  a.type = Type::Number;
  a.number = v;
  return a;
}
ArgValue ArgValue::vec(const Eigen::VectorXd& v) {
  ArgValue a;
  a.type = Type::Vector;
  a.vector = v;
  return a;
}
ArgValue ArgValue::mat(const Eigen::MatrixXd& m) {
  ArgValue a;
  a.type = Type::Matrix;
  a.matrix = m;
  return a;
}
ArgValue ArgValue::id(std::string s) {
  ArgValue a;
  a.type = Type::Ident;
  a.ident = std::move(s);
  return a;
}

namespace {

Interface iface(std::initializer_list<PortDecl> ports) { return Interface{ports}; }

std::map<std::string, ArgValue> subgroup_args(const SubgroupBasis& b) {
  std::map<std::string, ArgValue> args;
  args.emplace("type", ArgValue::id(core::to_string(b.type)));
  args.emplace("axis", ArgValue::vec(b.axis));
  if (b.type == JointType::Screw) args.emplace("pitch", ArgValue::num(b.pitch));
  return args;
}

}  // namespace

ComponentPtr make_spring(double k) {
  if (!(k >= 0)) fail("BadParam", "spring stiffness must be non-negative");
  return std::make_shared<ComponentInstance>(
      Catalog::Spring1D, ComponentKind::Storage,
      iface({{"q", Quantity::displacement(), PortKind::Power}}), Scalar1DParams{k},
      std::map<std::string, ArgValue>{{"k", ArgValue::num(k)}});
}

ComponentPtr make_point_mass(double m) {
  if (!(m > 0)) fail("BadParam", "mass must be positive");
  return std::make_shared<ComponentInstance>(
      Catalog::PointMass1D, ComponentKind::Storage,
      iface({{"p", Quantity::momentum(), PortKind::Power}}), Scalar1DParams{m},
      std::map<std::string, ArgValue>{{"m", ArgValue::num(m)}});
}

ComponentPtr make_pkc1d() {
  return std::make_shared<ComponentInstance>(
      Catalog::Pkc1D, ComponentKind::Reversible,
      iface({{"q", Quantity::displacement(), PortKind::Power},
             {"p", Quantity::momentum(), PortKind::Power}}),
      std::monostate{}, std::map<std::string, ArgValue>{});
}

ComponentPtr make_friction1d(double d) {
  if (d < 0) fail("BadParam", "friction coefficient must be non-negative");
  return std::make_shared<ComponentInstance>(
      Catalog::Friction1D, ComponentKind::Irreversible,
      iface({{"p", Quantity::momentum(), PortKind::Power},
             {"s", Quantity::entropy(), PortKind::Power}}),
      Scalar1DParams{d}, std::map<std::string, ArgValue>{{"d", ArgValue::num(d)}});
}

ComponentPtr make_body_pe(double m, const Vec3& g) {
  if (!(m > 0)) fail("BadParam", "body mass must be positive");
  return std::make_shared<ComponentInstance>(
      Catalog::BodyPe, ComponentKind::Storage,
      iface({{"q", Quantity::pose(), PortKind::Power}}), BodyPeParams{m, g},
      std::map<std::string, ArgValue>{{"m", ArgValue::num(m)}, {"g", ArgValue::vec(g)}});
}

ComponentPtr make_body_ke(double m, const Mat3& J) {
  if (!(m > 0)) fail("BadParam", "body mass must be positive");
  if ((J - J.transpose()).norm() > 1e-9 * std::max(1.0, J.norm()))
    fail("BadParam", "inertia tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(J);
  if (es.eigenvalues().minCoeff() <= 0)
    fail("BadParam", "inertia tensor must be positive definite");
  BodyKeParams p;
  p.m = m;
  p.J = J;
  p.Jinv = J.inverse();
  return std::make_shared<ComponentInstance>(
      Catalog::BodyKe, ComponentKind::Storage,
      iface({{"p", Quantity::momentum_gstar(), PortKind::Power}}), p,
      std::map<std::string, ArgValue>{{"m", ArgValue::num(m)}, {"J", ArgValue::mat(J)}});
}

ComponentPtr make_body_pkc() {
  return std::make_shared<ComponentInstance>(
      Catalog::BodyPkc, ComponentKind::Reversible,
      iface({{"q", Quantity::pose(), PortKind::Power},
             {"p", Quantity::momentum_gstar(), PortKind::Power}}),
      std::monostate{}, std::map<std::string, ArgValue>{});
}

ComponentPtr make_body_lp() {
  return std::make_shared<ComponentInstance>(
      Catalog::BodyLp, ComponentKind::Reversible,
      iface({{"p", Quantity::momentum_gstar(), PortKind::Power}}), std::monostate{},
      std::map<std::string, ArgValue>{});
}

ComponentPtr make_joint_pe(const SubgroupBasis& basis, const Eigen::MatrixXd& stiffness) {
  JointStorageParams p;
  p.basis = basis;
  if (stiffness.size() > 0) {
    if (stiffness.rows() != basis.dof())
      fail("BadParam", "stiffness dimension does not match joint dof");
    check_symmetric_nonneg(stiffness, "joint stiffness");
    p.stiffness = stiffness;
  }
  auto args = subgroup_args(basis);
  if (stiffness.size() > 0) args.emplace("stiffness", ArgValue::mat(stiffness));
  return std::make_shared<ComponentInstance>(
      Catalog::JointPe, ComponentKind::Storage,
      iface({{"qr", Quantity::relative_pose(basis.type), PortKind::Power}}), p, std::move(args));
}

ComponentPtr make_joint_pkc(const SubgroupBasis& basis) {
  JointStorageParams p;
  p.basis = basis;
  return std::make_shared<ComponentInstance>(
      Catalog::JointPkc, ComponentKind::Reversible,
      iface({{"qr", Quantity::relative_pose(basis.type), PortKind::Power},
             {"pr", Quantity::momentum(), PortKind::Power}}),
      p, subgroup_args(basis));
}

ComponentPtr make_joint_mf(const SubgroupBasis& basis, const Eigen::MatrixXd& mu) {
  if (mu.rows() != basis.dof()) fail("BadParam", "friction tensor dimension mismatch");
  check_symmetric_nonneg(mu, "friction tensor");
  JointFrictionParams p;
  p.basis = basis;
  p.mu = mu;
  auto args = subgroup_args(basis);
  args.emplace("mu", ArgValue::mat(mu));
  return std::make_shared<ComponentInstance>(
      Catalog::JointMf, ComponentKind::Irreversible,
      iface({{"pr", Quantity::momentum(), PortKind::Power},
             {"s", Quantity::entropy(), PortKind::Power}}),
      p, std::move(args));
}

ComponentPtr make_offset(const GroupElement& o) {
  if (!geom::is_valid_element(o)) fail("BadParam", "offset pose is not a valid group element");
  std::map<std::string, ArgValue> args;
  args.emplace("r", ArgValue::vec(o.r));
  if ((o.R - Mat3::Identity()).norm() > 1e-12) {
    const Vec3 aa = geom::log_so3(o.R);
    args.emplace("axis", ArgValue::vec(Vec3(aa.normalized())));
    args.emplace("angle", ArgValue::num(aa.norm()));
  }
  return std::make_shared<ComponentInstance>(
      Catalog::Offset, ComponentKind::Reversible,
      iface({{"p", Quantity::momentum_gstar(), PortKind::Power},
             {"pj", Quantity::momentum_gstar(), PortKind::Power}}),
      OffsetParams{o}, std::move(args));
}

ComponentPtr make_hc(const SubgroupBasis& basis) {
  return std::make_shared<ComponentInstance>(
      Catalog::Hc, ComponentKind::Reversible,
      iface({{"pj1", Quantity::momentum_gstar(), PortKind::Power},
             {"pj2", Quantity::momentum_gstar(), PortKind::Power},
             {"pr", Quantity::momentum(), PortKind::Power},
             {"qr", Quantity::relative_pose(basis.type), PortKind::State}}),
      HcParams{basis}, subgroup_args(basis));
}

ComponentPtr make_environment(std::optional<double> theta0) {
  EnvParams p;
  if (theta0) {
    if (!(*theta0 > 0)) fail("BadParam", "environment temperature must be positive");
    p.theta0 = *theta0;
    p.theta0_explicit = true;
  }
  std::map<std::string, ArgValue> args;
  if (theta0) args.emplace("theta0", ArgValue::num(*theta0));
  return std::make_shared<ComponentInstance>(
      Catalog::Environment, ComponentKind::Environment,
      iface({{"s", Quantity::entropy(), PortKind::Power}}), p, std::move(args));
}

std::map<std::string, ComponentPtr> make_revolute(const Vec3& axis, const GroupElement& o1,
                                                  const GroupElement& o2,
                                                  const Eigen::MatrixXd& mu,
                                                  const Eigen::MatrixXd& stiffness) {
  const SubgroupBasis basis = make_subgroup(JointType::Revolute, axis);
  std::map<std::string, ComponentPtr> set;
  set.emplace("o1", make_offset(o1));
  set.emplace("o2", make_offset(o2));
  set.emplace("hc", make_hc(basis));
  set.emplace("pe", make_joint_pe(basis, stiffness));
  set.emplace("pkc", make_joint_pkc(basis));
  set.emplace("mf", make_joint_mf(basis, mu));
  set.emplace("env", make_environment());
  return set;
}

// --- value helpers ---

const Eigen::VectorXd& as_vec(const Value& v) {
  const auto* p = std::get_if<Eigen::VectorXd>(&v);
  if (!p) fail("BadState", "expected flat coordinates");
  return *p;
}
const GroupElement& as_pose(const Value& v) {
  const auto* p = std::get_if<GroupElement>(&v);
  if (!p) fail("BadState", "expected a pose");
  return *p;
}
const MaterialCotangent& as_cotangent(const Value& v) {
  const auto* p = std::get_if<MaterialCotangent>(&v);
  if (!p) fail("BadState", "expected a material covector");
  return *p;
}

// --- storage laws ---

double storage_energy(const ComponentInstance& c, const Value& state) {
  switch (c.catalog()) {
    case Catalog::Spring1D: {
      const double q = as_vec(state)[0];
      return 0.5 * c.params_as<Scalar1DParams>().value * q * q;
    }
    case Catalog::PointMass1D: {
      const double p = as_vec(state)[0];
      return p * p / (2.0 * c.params_as<Scalar1DParams>().value);
    }
    case Catalog::BodyPe: {
      const auto& prm = c.params_as<BodyPeParams>();
      return prm.m * prm.g.dot(as_pose(state).r);
    }
    case Catalog::BodyKe: {
      const auto& prm = c.params_as<BodyKeParams>();
      const Eigen::VectorXd& p = as_vec(state);
      const Vec3 pw = p.head<3>(), pv = p.tail<3>();
      return 0.5 * pw.dot(prm.Jinv * pw) + pv.squaredNorm() / (2.0 * prm.m);
    }
    case Catalog::JointPe: {
      const auto& prm = c.params_as<JointStorageParams>();
      if (prm.stiffness.size() == 0) return 0.0;
      const Eigen::VectorXd xi = prm.basis.coords(as_pose(state));
      return 0.5 * xi.dot(prm.stiffness * xi);
    }
    case Catalog::Environment:
      return 0.0;  // exergy content of the reference environment
    default:
      fail("BadState", c.type_name() + " is not a storage component");
  }
}

Value storage_effort(const ComponentInstance& c, const Value& state) {
  switch (c.catalog()) {
    case Catalog::Spring1D: {
      Eigen::VectorXd e(1);
      e[0] = c.params_as<Scalar1DParams>().value * as_vec(state)[0];
      return e;
    }
    case Catalog::PointMass1D: {
      Eigen::VectorXd e(1);
      e[0] = as_vec(state)[0] / c.params_as<Scalar1DParams>().value;
      return e;
    }
    case Catalog::BodyPe: {
      const auto& prm = c.params_as<BodyPeParams>();
      MaterialCotangent F;
      F.Fr = prm.m * prm.g;
      return F;
    }
    case Catalog::BodyKe: {
      const auto& prm = c.params_as<BodyKeParams>();
      const Eigen::VectorXd& p = as_vec(state);
      Eigen::VectorXd u(6);
      u.head<3>() = prm.Jinv * p.head<3>();
      u.tail<3>() = p.tail<3>() / prm.m;
      return u;
    }
    case Catalog::JointPe: {
      const auto& prm = c.params_as<JointStorageParams>();
      const int k = prm.basis.dof();
      if (prm.stiffness.size() == 0) return Eigen::VectorXd(Eigen::VectorXd::Zero(k));
      // left-trivialized gradient of V_r(q) = |B^+ log q|^2_K / 2:
      // e = (B^+ Jr(log q)^{-1} B)^T K xi
      const GroupElement& q = as_pose(state);
      const Twist Xi = geom::log_map(q);
      const Eigen::VectorXd xi = prm.basis.Bpinv * Xi.vec();
      const Eigen::MatrixXd M =
          prm.basis.Bpinv * geom::right_jacobian_inv_se3(Xi) * prm.basis.B;
      return Eigen::VectorXd(M.transpose() * (prm.stiffness * xi));
    }
    default:
      fail("BadState", c.type_name() + " is not a storage component");
  }
}

// --- reversible laws ---

namespace {

const Value& need(const std::map<std::string, Value>& m, const std::string& key,
                  const std::string& who) {
  auto it = m.find(key);
  if (it == m.end()) fail("BadSignature", who + " requires input '" + key + "'");
  return it->second;
}

}  // namespace

DiracOutputs dirac_eval(const ComponentInstance& c, const DiracInputs& in) {
  DiracOutputs out;
  const std::string who = c.type_name();
  switch (c.catalog()) {
    case Catalog::Pkc1D: {
      const Eigen::VectorXd& eq = as_vec(need(in.efforts, "q", who));
      const Eigen::VectorXd& ep = as_vec(need(in.efforts, "p", who));
      out.flows["q"] = -ep;
      out.flows["p"] = eq;
      break;
    }
    case Catalog::JointPkc: {
      const Eigen::VectorXd& eq = as_vec(need(in.efforts, "qr", who));
      const Eigen::VectorXd& ep = as_vec(need(in.efforts, "pr", who));
      out.flows["qr"] = -ep;
      out.flows["pr"] = eq;
      break;
    }
    case Catalog::BodyPkc: {
      const GroupElement& q = as_pose(need(in.states, "q", who));
      const MaterialCotangent& eq = as_cotangent(need(in.efforts, "q", who));
      const Eigen::VectorXd& ep = as_vec(need(in.efforts, "p", who));
      out.flows["q"] = -ep;  // left-trivialized material velocity -T_e L_q(p.e)
      out.flows["p"] = geom::cotrivialize(q, eq).vec();
      break;
    }
    case Catalog::BodyLp: {
      const Eigen::VectorXd& p = as_vec(need(in.states, "p", who));
      const Eigen::VectorXd& u = as_vec(need(in.efforts, "p", who));
      out.flows["p"] =
          -geom::ad_star(Twist::from(u), Wrench::from(p), geom::Convention::SemidirectProduct)
               .vec();
      break;
    }
    case Catalog::Offset: {
      const auto& prm = c.params_as<OffsetParams>();
      const GroupElement oi = geom::inverse(prm.o);
      const Eigen::VectorXd& ep = as_vec(need(in.efforts, "p", who));
      if (in.pj_in_flow.size() != 6) fail("BadSignature", "offset requires the inbound pj flow");
      out.pj_effort = geom::Ad(oi, Twist::from(ep)).vec();
      out.flows["p"] = -geom::Ad_star(oi, Wrench::from(Vec6(in.pj_in_flow))).vec();
      break;
    }
    case Catalog::Hc: {
      const auto& prm = c.params_as<HcParams>();
      const GroupElement& qr = as_pose(need(in.states, "qr", who));
      const GroupElement qri = geom::inverse(qr);
      const Eigen::VectorXd& e1 = as_vec(need(in.efforts, "pj1", who));
      const Eigen::VectorXd& e2 = as_vec(need(in.efforts, "pj2", who));
      const Eigen::VectorXd& er = as_vec(need(in.efforts, "pr", who));
      if (in.lambda.size() != 6) fail("BadSignature", "hc requires a 6-dim multiplier");
      const Wrench lam = Wrench::from(Vec6(in.lambda));
      out.flows["pj1"] = geom::Ad_star(qri, lam).vec();
      out.flows["pj2"] = -in.lambda;
      out.flows["pr"] = prm.basis.B.transpose() * in.lambda;
      out.residual = geom::Ad(qri, Twist::from(e1)).vec() - e2 + prm.basis.B * er;
      break;
    }
    default:
      fail("BadSignature", who + " is not a reversible component");
  }
  return out;
}

OnsagerOutputs onsager_eval(const ComponentInstance& c, const Eigen::VectorXd& u_r,
                            double s_effort, double theta0) {
  const double theta = theta0 + s_effort;
  if (!(theta > 0)) fail("NonPositiveTemperature", "absolute temperature must be positive");
  OnsagerOutputs out;
  switch (c.catalog()) {
    case Catalog::Friction1D: {
      const double d = c.params_as<Scalar1DParams>().value;
      out.f_p = d * u_r;
      out.f_s = -d * u_r.squaredNorm() / theta;
      break;
    }
    case Catalog::JointMf: {
      const auto& prm = c.params_as<JointFrictionParams>();
      out.f_p = prm.mu * u_r;
      out.f_s = -u_r.dot(prm.mu * u_r) / theta;
      break;
    }
    default:
      fail("BadSignature", c.type_name() + " is not an irreversible component");
  }
  return out;
}

ComponentPtr make_from_args(const std::string& ctor,
                            const std::map<std::string, ArgValue>& args) {
  auto num = [&](const std::string& key) -> double {
    auto it = args.find(key);
    if (it == args.end() || it->second.type != ArgValue::Type::Number)
      fail("BadParam", ctor + " requires numeric argument '" + key + "'");
    return it->second.number;
  };
  auto num_or = [&](const std::string& key, double dflt) -> double {
    auto it = args.find(key);
    if (it == args.end()) return dflt;
    if (it->second.type != ArgValue::Type::Number)
      fail("BadParam", ctor + " argument '" + key + "' must be a number");
    return it->second.number;
  };
  auto vec3 = [&](const std::string& key) -> Vec3 {
    auto it = args.find(key);
    if (it == args.end() || it->second.type != ArgValue::Type::Vector ||
        it->second.vector.size() != 3)
      fail("BadParam", ctor + " requires 3-vector argument '" + key + "'");
    return Vec3(it->second.vector);
  };
  auto mat = [&](const std::string& key) -> Eigen::MatrixXd {
    auto it = args.find(key);
    if (it == args.end()) return Eigen::MatrixXd();
    if (it->second.type == ArgValue::Type::Matrix) return it->second.matrix;
    if (it->second.type == ArgValue::Type::Number)
      return Eigen::MatrixXd::Constant(1, 1, it->second.number);
    fail("BadParam", ctor + " argument '" + key + "' must be a matrix");
  };
  auto subgroup = [&]() -> SubgroupBasis {
    auto it = args.find("type");
    if (it == args.end() || it->second.type != ArgValue::Type::Ident)
      fail("BadParam", ctor + " requires a joint 'type'");
    auto jt = core::joint_type_from_string(it->second.ident);
    if (!jt) fail("BadParam", "unknown joint type '" + it->second.ident + "'");
    return make_subgroup(*jt, vec3("axis"), num_or("pitch", 0.0));
  };

  if (ctor == "spring") return make_spring(num("k"));
  if (ctor == "pointmass") return make_point_mass(num("m"));
  if (ctor == "pkc1d") return make_pkc1d();
  if (ctor == "friction1d") return make_friction1d(num("d"));
  if (ctor == "bodype") return make_body_pe(num("m"), vec3("g"));
  if (ctor == "bodyke") {
    Eigen::MatrixXd J = mat("J");
    if (J.rows() != 3) fail("BadParam", "bodyke requires a 3x3 inertia 'J'");
    return make_body_ke(num("m"), Mat3(J));
  }
  if (ctor == "bodypkc") return make_body_pkc();
  if (ctor == "bodylp") return make_body_lp();
  if (ctor == "jointpe") return make_joint_pe(subgroup(), mat("stiffness"));
  if (ctor == "jointpkc") return make_joint_pkc(subgroup());
  if (ctor == "jointmf") {
    Eigen::MatrixXd mu = mat("mu");
    if (mu.size() == 0) fail("BadParam", "jointmf requires a friction tensor 'mu'");
    return make_joint_mf(subgroup(), mu);
  }
  if (ctor == "offset") {
    Mat3 R = Mat3::Identity();
    if (args.count("axis") || args.count("angle"))
      R = geom::exp_so3(vec3("axis") * num("angle"));
    return make_offset(
        geom::make_element(R, vec3("r"), geom::Convention::SemidirectProduct));
  }
  if (ctor == "hc") return make_hc(subgroup());
  if (ctor == "environment") {
    std::optional<double> th;
    if (args.count("theta0")) th = num("theta0");
    return make_environment(th);
  }
  fail("BadParam", "unknown component constructor '" + ctor + "'");
}

}  // namespace ephs::components
