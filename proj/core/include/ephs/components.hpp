#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "ephs/geom.hpp"
#include "ephs/pattern.hpp"

namespace ephs::components {

using core::Interface;
using core::JointType;
using core::Quantity;
using geom::GroupElement;
using geom::MaterialCotangent;
using geom::Twist;
using geom::Vec3;
using geom::Wrench;

enum class ComponentKind { Storage, Reversible, Irreversible, Environment };

/// Catalog of primitive laws. Fixed: the assembly relies on the causality
/// signature of each entry.
enum class Catalog {
  Spring1D,      // storage, port q: displacement       E = k q^2 / 2
  PointMass1D,   // storage, port p: momentum           E = p^2 / 2m
  Pkc1D,         // reversible, ports q, p              [[0,-1],[1,0]]
  Friction1D,    // irreversible, ports p, s            Onsager, coefficient d
  BodyPe,        // storage, port q: pose               V(q) = m g(r)
  BodyKe,        // storage, port p: momentum<g*>       E = p_w.J^-1 p_w/2 + |p_v|^2/2m
  BodyPkc,       // reversible, ports q: pose, p: momentum<g*>
  BodyLp,        // reversible, port p: momentum<g*>    Lie-Poisson
  JointPe,       // storage, port qr: relative_pose     V_r = xi.K xi / 2
  JointPkc,      // reversible, ports qr, pr
  JointMf,       // irreversible, ports pr, s           Onsager, tensor mu
  Offset,        // reversible, ports p, pj             Ad_{o^-1} / Ad*_{o^-1}
  Hc,            // reversible, ports pj1, pj2, pr, qr(state)
  Environment,   // port s: entropy, effort identically 0
};

std::string catalog_ctor_name(Catalog c);

/// Basis of the Lie subalgebra of a lower kinematic pair: columns of B span
/// the inclusion i, so twists of the pair are B*xi with xi in R^k.
struct SubgroupBasis {
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3(0, 0, 1);  // rotation/translation axis, or plane normal
  double pitch = 0.0;         // screw only

  Eigen::Matrix<double, 6, Eigen::Dynamic> B;       // 6 x k
  Eigen::Matrix<double, Eigen::Dynamic, 6> Bpinv;   // k x 6

  int dof() const { return static_cast<int>(B.cols()); }

  GroupElement exp(const Eigen::VectorXd& xi) const;
  /// Canonical coordinates xi = B^+ log(q).
  Eigen::VectorXd coords(const GroupElement& q) const;
  /// || (I - B B^+) log(q) ||, the subgroup-membership audit.
  double membership_defect(const GroupElement& q) const;
};

/// Builds the basis for a lower pair; axis must be unit length (BadAxis).
SubgroupBasis make_subgroup(JointType type, const Vec3& axis, double pitch = 0.0);

int joint_dof(JointType t);

// --- parameter records ---

struct BodyPeParams {
  double m = 1.0;
  Vec3 g = Vec3::Zero();  // gravity force covector in the dual basis of I
};

struct BodyKeParams {
  double m = 1.0;
  geom::Mat3 J = geom::Mat3::Identity();
  geom::Mat3 Jinv = geom::Mat3::Identity();
};

struct JointStorageParams {
  SubgroupBasis basis;
  Eigen::MatrixXd stiffness;  // k x k, >= 0; empty means V_r = 0
};

struct JointFrictionParams {
  SubgroupBasis basis;
  Eigen::MatrixXd mu;  // k x k, symmetric >= 0
};

struct OffsetParams {
  GroupElement o;
};

struct HcParams {
  SubgroupBasis basis;
};

struct EnvParams {
  double theta0 = 298.15;  // K
  bool theta0_explicit = false;
};

struct Scalar1DParams {
  double value = 0.0;  // k, m, or d depending on the catalog entry
};

using Params = std::variant<std::monostate, Scalar1DParams, BodyPeParams, BodyKeParams,
                            JointStorageParams, JointFrictionParams, OffsetParams, HcParams,
                            EnvParams>;

/// Serializable constructor argument (for model files and canonical dumps).
struct ArgValue {
  enum class Type { Number, Vector, Matrix, Ident };
  Type type = Type::Number;
  double number = 0.0;
  Eigen::VectorXd vector;
  Eigen::MatrixXd matrix;
  std::string ident;

  static ArgValue num(double v);
  static ArgValue vec(const Eigen::VectorXd& v);
  static ArgValue mat(const Eigen::MatrixXd& m);
  static ArgValue id(std::string s);
};

class ComponentInstance : public core::Component {
public:
  ComponentInstance(Catalog c, ComponentKind k, Interface itf, Params p,
                    std::map<std::string, ArgValue> args)
      : catalog_(c), kind_(k), interface_(std::move(itf)), params_(std::move(p)),
        args_(std::move(args)) {}

  const Interface& interface() const override { return interface_; }
  std::string type_name() const override { return catalog_ctor_name(catalog_); }

  Catalog catalog() const { return catalog_; }
  ComponentKind kind() const { return kind_; }
  const Params& params() const { return params_; }
  const std::map<std::string, ArgValue>& args() const { return args_; }

  template <typename T>
  const T& params_as() const {
    const T* p = std::get_if<T>(&params_);
    if (!p) fail("InternalError", "wrong parameter record for " + type_name());
    return *p;
  }

private:
  Catalog catalog_;
  ComponentKind kind_;
  Interface interface_;
  Params params_;
  std::map<std::string, ArgValue> args_;
};

using ComponentPtr = std::shared_ptr<const ComponentInstance>;

// --- factories (validate parameters; throw BadParam/BadAxis) ---

ComponentPtr make_spring(double k);
ComponentPtr make_point_mass(double m);
ComponentPtr make_pkc1d();
ComponentPtr make_friction1d(double d);
ComponentPtr make_body_pe(double m, const Vec3& g);
ComponentPtr make_body_ke(double m, const geom::Mat3& J);
ComponentPtr make_body_pkc();
ComponentPtr make_body_lp();
ComponentPtr make_joint_pe(const SubgroupBasis& basis, const Eigen::MatrixXd& stiffness);
ComponentPtr make_joint_pkc(const SubgroupBasis& basis);
ComponentPtr make_joint_mf(const SubgroupBasis& basis, const Eigen::MatrixXd& mu);
ComponentPtr make_offset(const GroupElement& o);
ComponentPtr make_hc(const SubgroupBasis& basis);
ComponentPtr make_environment(std::optional<double> theta0 = std::nullopt);

/// Builds a component from its ctor name and argument map (model-file route).
ComponentPtr make_from_args(const std::string& ctor,
                            const std::map<std::string, ArgValue>& args);

/// Full component set of a revolute joint (offsets, constraint, storage,
/// coupling, friction, environment), keyed by the joint-pattern box names.
std::map<std::string, ComponentPtr> make_revolute(const Vec3& axis, const GroupElement& o1,
                                                  const GroupElement& o2,
                                                  const Eigen::MatrixXd& mu,
                                                  const Eigen::MatrixXd& stiffness);

// --- runtime values on junctions ---

/// One junction-slot value: flat coordinates or a pose, plus the material
/// covector flavour used for pose-junction efforts.
using Value = std::variant<Eigen::VectorXd, GroupElement, MaterialCotangent>;

const Eigen::VectorXd& as_vec(const Value& v);
const GroupElement& as_pose(const Value& v);
const MaterialCotangent& as_cotangent(const Value& v);

// --- evaluation laws ---

double storage_energy(const ComponentInstance& c, const Value& state);
/// Differential of the stored energy; MaterialCotangent for BodyPe, flat
/// coordinates otherwise (left-trivialized for JointPe).
Value storage_effort(const ComponentInstance& c, const Value& state);

struct DiracInputs {
  std::map<std::string, Value> efforts;  // by catalog port name
  std::map<std::string, Value> states;   // junction states (pkc/hc need them)
  Eigen::VectorXd lambda;                // Hc only
  Eigen::VectorXd pj_in_flow;            // Offset only: inbound flow at pj
};

struct DiracOutputs {
  /// Produced flows by port name. Pose-junction flows are carried
  /// left-trivialized (Twist coordinates) for the flow balance.
  std::map<std::string, Eigen::VectorXd> flows;
  std::optional<Eigen::VectorXd> pj_effort;  // Offset: effort pushed to the pj junction
  Eigen::VectorXd residual;                  // Hc: velocity-constraint rows C(q_r) e
};

DiracOutputs dirac_eval(const ComponentInstance& c, const DiracInputs& in);

struct OnsagerOutputs {
  Eigen::VectorXd f_p;  // friction force (flow at the momentum port)
  double f_s = 0.0;     // entropy flow (negative: entropy leaves the component)
};

/// theta0 is the exergy-reference temperature; s_effort = theta - theta0.
OnsagerOutputs onsager_eval(const ComponentInstance& c, const Eigen::VectorXd& u_r,
                            double s_effort, double theta0);

/// Environment effort is identically zero.
inline double env_eval(const ComponentInstance&) { return 0.0; }

}  // namespace ephs::components
