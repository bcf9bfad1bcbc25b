#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ephs/assemble.hpp"

namespace ephs::sim {

using assemble::DAESystem;

enum class Method { LieEuler, LieMidpoint };

struct IntegratorConfig {
  Method method = Method::LieMidpoint;
  double h = 1e-3;     // s
  double t_end = 1.0;  // s
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  int record_every = 1;
  double fd_eps = 1e-7;  // finite-difference step for the Newton Jacobian

  bool project_initial_state = true;  // least-squares velocity projection at t = 0
  bool reconcile_qr = false;          // derive q_r from the body poses instead of erroring
};

struct SystemState {
  double t = 0.0;
  Eigen::VectorXd x;      // differential states (layout order)
  Eigen::VectorXd rates;  // last accepted rates (warm start; layout order)
  Eigen::VectorXd z;      // algebraic snapshot: junction efforts + multipliers
};

struct AuditSample {
  double t = 0.0;
  assemble::AuditReport report;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> zs;
  std::vector<AuditSample> audits;
  bool aborted = false;
  std::string abort_reason;
};

/// Zero momenta/entropy, identity poses, zero algebraic guesses.
SystemState make_initial_state(const DAESystem& sys);

/// Velocity-level consistency: solves the algebraic efforts in least squares,
/// then minimally adjusts differential vector states so every holonomic
/// constraint row vanishes (to 1e-12). Position-level mismatches beyond 1e-6
/// raise InfeasibleConstraint unless cfg.reconcile_qr re-derives q_r.
SystemState project_initial(const DAESystem& sys, SystemState state,
                            const IntegratorConfig& cfg);

/// One accepted step. LieEuler freezes states at t_n (the velocity constraint
/// targets the advanced momenta); LieMidpoint solves the full stage system at
/// the half step. Both end with a multiplier projection that re-imposes the
/// velocity constraint at the accepted state.
SystemState step(const DAESystem& sys, const SystemState& state, const IntegratorConfig& cfg);

Trajectory simulate(const DAESystem& sys, const SystemState& state0,
                    const IntegratorConfig& cfg);

/// Fixed column order from the layout; 17 significant digits.
void write_csv(const DAESystem& sys, const Trajectory& traj, std::ostream& os);

struct NewtonResult {
  Eigen::VectorXd y;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Damped-free Newton with a forward-difference Jacobian (recomputed when
/// convergence stalls). Throws NewtonDiverged.
NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                          Eigen::VectorXd y0, double tol, int max_iter, double fd_eps);

}  // namespace ephs::sim
