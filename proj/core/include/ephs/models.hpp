#pragma once

#include <optional>

#include "ephs/components.hpp"
#include "ephs/pattern.hpp"

namespace ephs::models {

using components::SubgroupBasis;
using core::Binding;
using core::Pattern;
using geom::GroupElement;
using geom::Mat3;
using geom::Vec3;

struct BuiltModel {
  Pattern pattern;
  Binding binding;
};

struct BodyParams {
  double m = 1.0;
  Mat3 J = Mat3::Identity();
  Vec3 g = Vec3::Zero();
};

struct JointParams {
  core::JointType type = core::JointType::Revolute;
  Vec3 axis = Vec3(0, 0, 1);
  double pitch = 0.0;
  GroupElement o1 = geom::identity(geom::Convention::SemidirectProduct);
  GroupElement o2 = geom::identity(geom::Convention::SemidirectProduct);
  Eigen::MatrixXd mu;         // empty -> zero friction tensor
  Eigen::MatrixXd stiffness;  // empty -> V_r = 0
};

// --- pattern builders mirroring the figure corpus ---

BuiltModel build_oscillator(double m, double k);
BuiltModel build_damped_oscillator(double m, double k, double d, double theta0);
BuiltModel build_body(const BodyParams& p);
BuiltModel build_joint(const JointParams& p, std::optional<double> theta0 = std::nullopt);
BuiltModel build_basic_mbs(const BodyParams& b1, const BodyParams& b2, const JointParams& j,
                           std::optional<double> theta0 = std::nullopt);

/// Two bodies with J = diag(1,2,3), m = 1, revolute-z joint with offsets
/// (0,0,+-0.5), gravity (0,0,-9.81), torsional stiffness and friction.
struct MbsDemo {
  BuiltModel model;
  BodyParams body;
  JointParams joint;
  // consistent initial data
  GroupElement q1, q2, qr;
  Eigen::VectorXd p1, p2;  // wrench coordinates
  double s0 = 0.0;
};
MbsDemo default_mbs_demo();

// --- analytic / reference oracles ---

struct DampedOscSample {
  double q = 0, p = 0, s = 0;
};
/// Closed-form underdamped solution; entropy from the first law. Overdamped
/// parameter sets are rejected.
DampedOscSample oracle_damped_oscillator(double t, double m, double k, double d, double q0,
                                         double p0, double theta0);

struct FreeBodyState {
  GroupElement q;
  Eigen::VectorXd p;  // 6
};
/// RK4 reference for a single rigid body (optionally in gravity), integrating
/// the material kinematics R' = R hat(w) directly.
FreeBodyState oracle_body_rk4(const BodyParams& prm, const GroupElement& q0,
                              const Eigen::VectorXd& p0, double h, double t_end);

struct TwoBodyMinimalState {
  GroupElement q1;
  Eigen::VectorXd u1;     // 6, body-1 twist
  Eigen::VectorXd theta;  // k, joint coordinates
  Eigen::VectorXd thetadot;
  GroupElement qr;  // exp(B theta)
  GroupElement q2;  // q1 o1 I(qr) o2^-1, drift-free by construction
  double entropy = 0.0;
};
/// Minimal-coordinate reference for two free bodies joined by a lower pair:
/// unknowns (q1, u1, theta, thetadot); q2 follows from the holonomic
/// constraint, so the reference has no drift by construction. RK4.
TwoBodyMinimalState oracle_two_body_minimal(const BodyParams& b1, const BodyParams& b2,
                                            const JointParams& j, const GroupElement& q1_0,
                                            const Eigen::VectorXd& u1_0,
                                            const Eigen::VectorXd& theta0,
                                            const Eigen::VectorXd& thetadot0, double theta_env,
                                            double h, double t_end);

}  // namespace ephs::models
