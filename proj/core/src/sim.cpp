#include "ephs/sim.hpp"

#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ephs::sim {

using assemble::JunctionRole;
using assemble::VariableLayout;

namespace {

constexpr double kInitialConsistencyTol = 1e-8;
constexpr double kPositionFeasibilityTol = 1e-6;

int effort_z_dim(const VariableLayout& L) {
  int n = 0;
  for (const auto& s : L.junctions)
    if (s.role == JunctionRole::Algebraic) n += s.effort_dim;
  return n;
}

}  // namespace

NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                          Eigen::VectorXd y, double tol, int max_iter, double fd_eps) {
  Eigen::VectorXd r = F(y);
  const int n = (int)y.size();
  if (r.size() != n) fail("DimensionMismatch", "newton system is not square");

  Eigen::MatrixXd J(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  bool have_jacobian = false;
  int last_jacobian_iter = -1;

  for (int iter = 0; iter <= max_iter; ++iter) {
    const double rn = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
    if (!std::isfinite(rn)) fail("NewtonDiverged", "residual is not finite");
    if (rn <= tol || n == 0) return {y, iter, rn};

    // modified Newton: refresh the Jacobian at the start and when stalling
    if (!have_jacobian || iter - last_jacobian_iter >= 8) {
      for (int k = 0; k < n; ++k) {
        Eigen::VectorXd yk = y;
        yk[k] += fd_eps;
        J.col(k) = (F(yk) - r) / fd_eps;
      }
      lu.compute(J);
      have_jacobian = true;
      last_jacobian_iter = iter;
    }
    const Eigen::VectorXd dy = lu.solve(-r);
    if (!dy.allFinite()) fail("NewtonDiverged", "singular stage Jacobian");
    y += dy;
    r = F(y);
  }
  fail("NewtonDiverged", "no convergence within " + std::to_string(max_iter) + " iterations");
}

SystemState make_initial_state(const DAESystem& sys) {
  const auto& L = sys.layout();
  SystemState st;
  st.x = Eigen::VectorXd::Zero(L.state_dim);
  st.rates = Eigen::VectorXd::Zero(L.rate_dim);
  st.z = Eigen::VectorXd::Zero(L.z_dim);
  for (size_t ji = 0; ji < L.junctions.size(); ++ji) {
    const auto& slot = L.junctions[ji];
    if (slot.role == JunctionRole::Differential && slot.is_pose)
      sys.set_pose(st.x, (int)ji, geom::identity(geom::Convention::SemidirectProduct));
  }
  return st;
}

namespace {

// finite-difference columns of the constraint rows with respect to a chosen
// set of flat unknowns (the rows are linear in all of them)
Eigen::MatrixXd constraint_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& rows,
    const Eigen::VectorXd& at, int m) {
  const int n = (int)at.size();
  Eigen::MatrixXd A(m, n);
  const Eigen::VectorXd r0 = rows(at);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd p = at;
    p[k] += 1.0;  // rows are linear: unit steps give exact columns
    A.col(k) = rows(p) - r0;
  }
  return A;
}

}  // namespace

SystemState project_initial(const DAESystem& sys, SystemState state,
                            const IntegratorConfig& cfg) {
  const auto& L = sys.layout();
  if (L.multipliers.empty()) return state;

  // position level: q_r must agree with the body poses through the offsets
  bool reconciled = false;
  for (const auto& tr : sys.trace_hc_positions(state.x)) {
    if (tr.defect <= kPositionFeasibilityTol) continue;
    if (!cfg.reconcile_qr)
      fail("InfeasibleConstraint",
           "holonomic constraint '" + tr.box + "' position defect " +
               std::to_string(tr.defect) + " exceeds 1e-6 (set reconcile_qr to re-derive q_r)");
    const auto& slot = L.junctions[tr.qr_slot];
    const Eigen::VectorXd xi = slot.basis->coords(tr.rel);
    sys.set_pose(state.x, tr.qr_slot, slot.basis->exp(xi));
    reconciled = true;
  }
  if (reconciled) {
    // the relative pose may lie outside the subgroup; re-deriving q_r cannot fix that
    for (const auto& tr : sys.trace_hc_positions(state.x))
      if (tr.defect > kPositionFeasibilityTol)
        fail("InfeasibleConstraint", "holonomic constraint '" + tr.box +
                                         "' relative pose lies outside the joint subgroup "
                                         "(defect " +
                                         std::to_string(tr.defect) + ")");
  }

  const int ne = effort_z_dim(L);
  const int m = 6 * (int)L.multipliers.size();

  // flat unknowns: algebraic efforts followed by every differential vector state
  std::vector<std::pair<int, int>> vec_states;  // (state offset, dim)
  int nv = 0;
  for (const auto& s : L.junctions)
    if (s.role == JunctionRole::Differential && !s.is_pose) {
      vec_states.push_back({s.state_offset, s.state_dim});
      nv += s.state_dim;
    }

  auto rows_of = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd z = state.z;
    z.head(ne) = w.head(ne);
    Eigen::VectorXd x = state.x;
    int off = ne;
    for (auto [so, dim] : vec_states) {
      x.segment(so, dim) += w.segment(off, dim);
      off += dim;
    }
    return sys.constraint_rows(x, z);
  };

  const Eigen::VectorXd r0 = rows_of(Eigen::VectorXd::Zero(ne + nv));
  const Eigen::MatrixXd A = constraint_jacobian(rows_of, Eigen::VectorXd::Zero(ne + nv), m);
  const Eigen::MatrixXd Ae = A.leftCols(ne);
  const Eigen::MatrixXd Av = A.rightCols(nv);

  // the algebraic efforts absorb everything they can; only the remaining
  // infeasibility moves the differential states (minimal-norm adjustment)
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_e(Ae);
  const Eigen::MatrixXd Aep = cod_e.pseudoInverse();
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) - Ae * Aep;  // off range(Ae)
  Eigen::VectorXd dv = Eigen::VectorXd::Zero(nv);
  const Eigen::VectorXd out_of_reach = P * r0;
  if (out_of_reach.lpNorm<Eigen::Infinity>() > 1e-14)
    dv = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(P * Av).solve(-out_of_reach);
  const Eigen::VectorXd e = Aep * (-(r0 + Av * dv));

  state.z.head(ne) = e;
  int off = 0;
  for (auto [so, dim] : vec_states) {
    state.x.segment(so, dim) += dv.segment(off, dim);
    off += dim;
  }

  const double res = sys.constraint_rows(state.x, state.z).lpNorm<Eigen::Infinity>();
  if (res > 1e-12)
    fail("InfeasibleConstraint",
         "velocity projection left residual " + std::to_string(res));
  return state;
}

namespace {

// multiplier projection after the stage: re-imposes the velocity constraint at
// the accepted state with a half-step multiplier impulse that does no work on
// the free joint directions
void velocity_projection(const DAESystem& sys, Eigen::VectorXd& x_end, Eigen::VectorXd& z,
                         double h, const IntegratorConfig& cfg) {
  const auto& L = sys.layout();
  if (L.multipliers.empty()) return;
  const int ne = effort_z_dim(L);
  const int nm = 6 * (int)L.multipliers.size();

  // rate response to a pure multiplier vector (flows are affine in z)
  const Eigen::VectorXd base_rates = sys.implied_rates(x_end, Eigen::VectorXd::Zero(L.z_dim));
  auto rate_response = [&](const Eigen::VectorXd& nu) {
    Eigen::VectorXd zz = Eigen::VectorXd::Zero(L.z_dim);
    zz.tail(nm) = nu;
    return Eigen::VectorXd(sys.implied_rates(x_end, zz) - base_rates);
  };

  // algebraic-junction response to the multipliers (the i* rows)
  const Eigen::VectorXd zero_rates = Eigen::VectorXd::Zero(L.rate_dim);
  auto alg_rows = [&](const Eigen::VectorXd& zz) {
    const Eigen::VectorXd r = sys.residual(x_end, zero_rates, zz);
    Eigen::VectorXd out(ne);
    int off = 0;
    for (const auto& s : L.junctions)
      if (s.role == JunctionRole::Algebraic) {
        out.segment(off, s.effort_dim) = r.segment(s.row_offset, s.effort_dim);
        off += s.effort_dim;
      }
    return out;
  };
  const Eigen::VectorXd alg_base = alg_rows(Eigen::VectorXd::Zero(L.z_dim));

  auto G = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd nu = w.head(nm);
    const Eigen::VectorXd ur = w.tail(ne);
    const Eigen::VectorXd xc = sys.advance_states(x_end, rate_response(nu), 0.5 * h);
    Eigen::VectorXd zz = Eigen::VectorXd::Zero(L.z_dim);
    zz.head(ne) = ur;
    Eigen::VectorXd out(nm + ne);
    out.head(nm) = sys.constraint_rows(xc, zz);
    Eigen::VectorXd znu = Eigen::VectorXd::Zero(L.z_dim);
    znu.tail(nm) = nu;
    out.tail(ne) = alg_rows(znu) - alg_base;  // i*(nu) = 0
    return out;
  };

  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(nm + ne);
  w0.tail(ne) = z.head(ne);
  const auto res = newton_solve(G, w0, cfg.newton_tol, cfg.newton_max_iter, cfg.fd_eps);

  x_end = sys.advance_states(x_end, rate_response(res.y.head(nm)), 0.5 * h);
  z.head(ne) = res.y.tail(ne);
}

}  // namespace

SystemState step(const DAESystem& sys, const SystemState& state, const IntegratorConfig& cfg) {
  if (!(cfg.h > 0) || !(cfg.newton_tol > 0))
    fail("BadParam", "integrator requires h > 0 and positive tolerances");
  const auto& L = sys.layout();
  const int nr = L.rate_dim, nz = L.z_dim;

  Eigen::VectorXd y0(nr + nz);
  y0.head(nr) = state.rates;
  y0.tail(nz) = state.z;

  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> F;
  if (cfg.method == Method::LieMidpoint) {
    F = [&](const Eigen::VectorXd& y) {
      const Eigen::VectorXd rates = y.head(nr);
      const Eigen::VectorXd z = y.tail(nz);
      const Eigen::VectorXd xm = sys.advance_states(state.x, rates, 0.5 * cfg.h);
      return sys.residual(xm, rates, z);
    };
  } else {
    // states frozen at t_n; constraint rows target the advanced state so the
    // multipliers are determined
    F = [&](const Eigen::VectorXd& y) {
      const Eigen::VectorXd rates = y.head(nr);
      const Eigen::VectorXd z = y.tail(nz);
      Eigen::VectorXd r = sys.residual(state.x, rates, z);
      if (!L.multipliers.empty()) {
        const Eigen::VectorXd xe = sys.advance_states(state.x, rates, cfg.h);
        const Eigen::VectorXd c = sys.constraint_rows(xe, z);
        for (size_t mi = 0; mi < L.multipliers.size(); ++mi)
          r.segment(L.multipliers[mi].row_offset, 6) = c.segment(6 * mi, 6);
      }
      return r;
    };
  }

  const auto sol = newton_solve(F, y0, cfg.newton_tol, cfg.newton_max_iter, cfg.fd_eps);

  SystemState out;
  out.t = state.t + cfg.h;
  out.rates = sol.y.head(nr);
  out.z = sol.y.tail(nz);
  out.x = sys.advance_states(state.x, out.rates, cfg.h);

  velocity_projection(sys, out.x, out.z, cfg.h, cfg);
  return out;
}

Trajectory simulate(const DAESystem& sys, const SystemState& state0,
                    const IntegratorConfig& cfg) {
  if (!(cfg.h > 0) || !(cfg.t_end >= 0) || cfg.record_every < 1)
    fail("BadParam", "invalid integrator configuration");

  SystemState st = state0;
  if (st.x.size() != sys.layout().state_dim) fail("DimensionMismatch", "initial state size");
  if (st.z.size() == 0) st.z = Eigen::VectorXd::Zero(sys.layout().z_dim);
  if (cfg.project_initial_state) st = project_initial(sys, st, cfg);

  if (!sys.layout().multipliers.empty()) {
    const double c = sys.constraint_rows(st.x, st.z).lpNorm<Eigen::Infinity>();
    if (c > kInitialConsistencyTol)
      fail("InconsistentInitialState",
           "velocity constraint residual " + std::to_string(c) + " at t = 0");
  }
  st.rates = sys.implied_rates(st.x, st.z);

  Trajectory traj;
  auto record = [&](const SystemState& s) {
    traj.times.push_back(s.t);
    traj.states.push_back(s.x);
    traj.zs.push_back(s.z);
    AuditSample a;
    a.t = s.t;
    a.report = sys.audit(s.x, sys.implied_rates(s.x, s.z), s.z);
    traj.audits.push_back(std::move(a));
  };

  const long n_steps = std::lround(cfg.t_end / cfg.h);
  record(st);
  for (long i = 1; i <= n_steps; ++i) {
    try {
      st = step(sys, st, cfg);
    } catch (const Error& e) {
      if (e.code() == "NewtonDiverged") {
        traj.aborted = true;
        traj.abort_reason = e.what();
        break;
      }
      throw;
    }
    st.t = cfg.h * (double)i + state0.t;  // avoid accumulated roundoff in t
    if (i % cfg.record_every == 0 || i == n_steps) record(st);
  }
  return traj;
}

void write_csv(const DAESystem& sys, const Trajectory& traj, std::ostream& os) {
  os << "t";
  for (const auto& l : sys.state_labels()) os << "," << l;
  for (const auto& l : sys.z_labels()) os << "," << l;
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << "," << buf;
  };
  for (size_t i = 0; i < traj.times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[i]);
    os << buf;
    for (int k = 0; k < traj.states[i].size(); ++k) put(traj.states[i][k]);
    for (int k = 0; k < traj.zs[i].size(); ++k) put(traj.zs[i][k]);
    os << "\n";
  }
}

}  // namespace ephs::sim
