#include "ephs/assemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace ephs::assemble {

namespace comp = ephs::components;

using comp::Catalog;
using comp::ComponentInstance;
using comp::ComponentKind;
using core::PortKind;
using core::Wire;
using geom::GroupElement;
using geom::MaterialCotangent;
using geom::Twist;
using geom::Vec6;
using geom::Wrench;

namespace {

const ComponentInstance& as_instance(const core::ComponentPtr& c) {
  const auto* ci = dynamic_cast<const ComponentInstance*>(c.get());
  if (!ci) fail("IncompleteBinding", "box bound to a non-catalog component");
  return *ci;
}

bool is_pose_quantity(const Quantity& q) {
  return q.name == Quantity::Name::Pose || q.name == Quantity::Name::RelativePose;
}

/// Per-port flow/effort coordinate dimension, where fixed by the component.
std::optional<int> port_dim(const ComponentInstance& c, const std::string& port) {
  switch (c.catalog()) {
    case Catalog::Spring1D:
    case Catalog::PointMass1D:
    case Catalog::Pkc1D:
    case Catalog::Friction1D:
    case Catalog::Environment:
      return 1;
    case Catalog::BodyKe:
    case Catalog::BodyLp:
    case Catalog::Offset:
      return 6;
    case Catalog::BodyPe:
    case Catalog::BodyPkc:
      return (port == "p") ? std::optional<int>(6) : std::nullopt;  // pose port: group-valued
    case Catalog::JointPe:
      return c.params_as<comp::JointStorageParams>().basis.dof();
    case Catalog::JointPkc:
      return c.params_as<comp::JointStorageParams>().basis.dof();
    case Catalog::JointMf:
      return (port == "pr")
                 ? std::optional<int>(c.params_as<comp::JointFrictionParams>().basis.dof())
                 : std::optional<int>(1);
    case Catalog::Hc: {
      const auto& basis = c.params_as<comp::HcParams>().basis;
      if (port == "pr") return basis.dof();
      if (port == "qr") return std::nullopt;
      return 6;
    }
  }
  return std::nullopt;
}

const comp::SubgroupBasis* basis_of(const ComponentInstance& c) {
  switch (c.catalog()) {
    case Catalog::JointPe:
    case Catalog::JointPkc:
      return &c.params_as<comp::JointStorageParams>().basis;
    case Catalog::JointMf:
      return &c.params_as<comp::JointFrictionParams>().basis;
    case Catalog::Hc:
      return &c.params_as<comp::HcParams>().basis;
    default:
      return nullptr;
  }
}

// --- symbolic term helpers for the equation dump ---

std::string negate_sym(const std::string& s) {
  if (!s.empty() && s[0] == '-') return s.substr(1);
  return "-" + s;
}

std::string join_terms(const std::vector<std::string>& terms) {
  std::string out;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i == 0) {
      out = terms[i];
    } else if (!terms[i].empty() && terms[i][0] == '-') {
      out += " - " + terms[i].substr(1);
    } else {
      out += " + " + terms[i];
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace

const JunctionSlot& VariableLayout::at(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) fail("InternalError", "unknown junction '" + id + "'");
  return junctions[it->second];
}

// ---------------------------------------------------------------------------
// assemble
// ---------------------------------------------------------------------------

DAESystem assemble(const core::FlatModel& model, const AssembleOptions& opts) {
  const auto diags = core::validate_pattern(model.pattern);
  if (!diags.empty()) {
    std::string msg = "pattern does not validate:";
    for (const auto& d : diags) msg += "\n  [" + d.rule + "] " + d.location + ": " + d.message;
    fail("PatternInvalid", msg);
  }

  DAESystem sys;
  sys.pattern_ = model.pattern;
  const core::Pattern& pat = sys.pattern_;

  // component slots with catalog-port -> junction maps
  for (const auto& [box, cp] : model.components) {
    const ComponentInstance& ci = as_instance(cp);
    auto ren = core::interface_equiv(ci.interface(), pat.boxes.at(box));
    if (!ren)
      fail("InterfaceMismatch", "component '" + ci.type_name() + "' does not fit box '" + box + "'");
    DAESystem::CompSlot slot;
    slot.box = box;
    slot.comp = std::static_pointer_cast<const ComponentInstance>(cp);
    for (const auto& [cport, bport] : *ren) {
      auto j = pat.junction_of(box, bport);
      if (!j) fail("PatternInvalid", "unwired port " + box + "." + bport);
      slot.port_junction.emplace(cport, *j);
    }
    sys.comps_.push_back(std::move(slot));
  }
  std::sort(sys.comps_.begin(), sys.comps_.end(),
            [](const auto& a, const auto& b) { return a.box < b.box; });
  for (size_t i = 0; i < sys.comps_.size(); ++i) sys.comp_index_[sys.comps_[i].box] = (int)i;
  for (const auto& [box, itf] : pat.boxes)
    if (!model.components.count(box)) fail("IncompleteBinding", "box '" + box + "' is unbound");

  // environment temperature
  double theta0 = opts.theta0;
  bool theta0_pinned = false;
  for (const auto& cs : sys.comps_) {
    if (cs.comp->catalog() != Catalog::Environment) continue;
    const auto& prm = cs.comp->params_as<comp::EnvParams>();
    if (!prm.theta0_explicit) continue;
    if (theta0_pinned && std::abs(prm.theta0 - theta0) > 0)
      fail("BadParam", "environment components disagree on theta0");
    theta0 = prm.theta0;
    theta0_pinned = true;
  }
  sys.theta0_ = theta0;

  // classify junctions
  struct JInfo {
    std::vector<std::pair<int, std::string>> ports;  // (comp slot, catalog port)
    std::vector<int> storage;                        // comp slots (storage or env)
    std::vector<int> offset_pj;                      // offsets defining this effort
    bool has_outer = false;
  };
  std::map<std::string, JInfo> info;
  for (const auto& [id, q] : pat.junctions) info[id];
  for (size_t ci = 0; ci < sys.comps_.size(); ++ci) {
    const auto& cs = sys.comps_[ci];
    for (const auto& [cport, jid] : cs.port_junction) {
      info[jid].ports.push_back({(int)ci, cport});
      const ComponentKind kind = cs.comp->kind();
      const auto* decl = cs.comp->interface().find(cport);
      if ((kind == ComponentKind::Storage || kind == ComponentKind::Environment) &&
          decl->kind == PortKind::Power)
        info[jid].storage.push_back((int)ci);
      if (cs.comp->catalog() == Catalog::Offset && cport == "pj")
        info[jid].offset_pj.push_back((int)ci);
    }
  }
  for (const auto& w : pat.wires)
    if (w.outer()) {
      info[w.junction].has_outer = true;
      if (opts.cap_open_ports)
        sys.notes_.push_back({"OPEN_PORT_CAPPED", "outer port " + w.port,
                              "outer power port closed with zero flow"});
      else
        fail("UnderdeterminedJunction", "outer port '" + w.port + "' left open");
    }

  for (const auto& [jid, ji] : info) {
    const Quantity q = pat.junctions.at(jid);
    JunctionSlot slot;
    slot.id = jid;
    slot.quantity = q;
    slot.is_pose = is_pose_quantity(q);
    slot.has_outer = ji.has_outer;

    if (ji.storage.size() + ji.offset_pj.size() > 1)
      fail("CausalityConflict", "junction '" + jid + "' has " +
                                    std::to_string(ji.storage.size() + ji.offset_pj.size()) +
                                    " effort definers");
    if (!ji.storage.empty()) {
      slot.role = JunctionRole::Differential;
      slot.owner_box = sys.comps_[ji.storage.front()].box;
    } else if (!ji.offset_pj.empty()) {
      slot.role = JunctionRole::EffortDefined;
    } else {
      slot.role = JunctionRole::Algebraic;
      if (slot.is_pose)
        fail("UnderdeterminedJunction",
             "pose junction '" + jid + "' has no storage to define its effort");
    }

    // coordinate dimension from the attached components
    std::optional<int> dim;
    for (const auto& [ci, cport] : ji.ports) {
      auto d = port_dim(*sys.comps_[ci].comp, cport);
      if (!d) continue;
      if (dim && *dim != *d)
        fail("DimensionMismatch", "junction '" + jid + "' sees coordinate dims " +
                                      std::to_string(*dim) + " and " + std::to_string(*d));
      dim = d;
    }
    // subgroup basis consistency on relative-pose junctions
    if (q.name == Quantity::Name::RelativePose) {
      for (const auto& [ci, cport] : ji.ports) {
        const auto* b = basis_of(*sys.comps_[ci].comp);
        if (!b) continue;
        if (!slot.basis) {
          slot.basis = *b;
        } else if ((slot.basis->B - b->B).norm() > 1e-12) {
          fail("DimensionMismatch",
               "junction '" + jid + "' sees inconsistent subgroup bases");
        }
      }
    }

    switch (q.name) {
      case Quantity::Name::Pose:
        slot.state_dim = 12;
        slot.rate_dim = 6;
        break;
      case Quantity::Name::RelativePose:
        if (!slot.basis)
          fail("UnderdeterminedJunction",
               "relative-pose junction '" + jid + "' has no subgroup basis");
        slot.state_dim = 12;
        slot.rate_dim = slot.basis->dof();
        break;
      case Quantity::Name::MomentumGStar:
        slot.state_dim = 6;
        slot.rate_dim = 6;
        break;
      case Quantity::Name::Displacement:
      case Quantity::Name::Entropy:
        slot.state_dim = 1;
        slot.rate_dim = 1;
        break;
      case Quantity::Name::Momentum:
        if (!dim)
          fail("UnderdeterminedJunction",
               "momentum junction '" + jid + "' has no component fixing its dimension");
        slot.state_dim = *dim;
        slot.rate_dim = *dim;
        break;
    }
    if (slot.role != JunctionRole::Differential) slot.state_dim = 0;
    if (slot.role == JunctionRole::Algebraic) slot.effort_dim = slot.rate_dim;

    sys.layout_.index[jid] = (int)sys.layout_.junctions.size();
    sys.layout_.junctions.push_back(std::move(slot));
  }

  // state-reading components require differential junctions
  for (const auto& cs : sys.comps_) {
    auto require_state = [&](const std::string& port, const char* why) {
      const auto& slot = sys.layout_.at(cs.port_junction.at(port));
      if (slot.role != JunctionRole::Differential)
        fail("UnderdeterminedJunction", "component '" + cs.box + "' needs the state of '" +
                                            slot.id + "' (" + why + ") but no storage owns it");
    };
    switch (cs.comp->catalog()) {
      case Catalog::BodyPkc: require_state("q", "trivialization base point"); break;
      case Catalog::BodyLp: require_state("p", "Lie-Poisson state"); break;
      case Catalog::Hc: require_state("qr", "constraint configuration"); break;
      default: break;
    }
  }

  // layout offsets
  auto& L = sys.layout_;
  for (auto& s : L.junctions) {
    if (s.role == JunctionRole::Differential) {
      s.state_offset = L.state_dim;
      s.rate_offset = L.rate_dim;
      L.state_dim += s.state_dim;
      L.rate_dim += s.rate_dim;
    }
  }
  for (auto& s : L.junctions) {
    if (s.role == JunctionRole::Algebraic) {
      s.effort_offset = L.z_dim;
      L.z_dim += s.effort_dim;
    }
  }
  for (const auto& cs : sys.comps_) {
    if (cs.comp->catalog() != Catalog::Hc) continue;
    MultiplierSlot m;
    m.box = cs.box;
    m.z_offset = L.z_dim;
    L.z_dim += 6;
    L.multipliers.push_back(m);
  }
  int rows = 0;
  for (auto& s : L.junctions) {
    if (s.role == JunctionRole::Differential) {
      s.row_offset = rows;
      rows += s.rate_dim;
    }
  }
  for (auto& s : L.junctions) {
    if (s.role == JunctionRole::Algebraic) {
      s.row_offset = rows;
      rows += s.effort_dim;
    }
  }
  for (auto& m : L.multipliers) {
    m.row_offset = rows;
    rows += 6;
  }
  L.residual_dim = rows;
  if (L.residual_dim != L.rate_dim + L.z_dim)
    fail("InternalError", "residual dimension mismatch");
  for (auto& m : L.multipliers)
    sys.comps_[sys.comp_index_.at(m.box)].multiplier =
        int(&m - L.multipliers.data());

  // topological order of offsets along the effort-propagation chain
  {
    std::vector<int> offsets;
    for (size_t i = 0; i < sys.comps_.size(); ++i)
      if (sys.comps_[i].comp->catalog() == Catalog::Offset) offsets.push_back((int)i);
    std::map<std::string, int> pj_owner;  // junction -> offset comp index
    for (int ci : offsets) pj_owner[sys.comps_[ci].port_junction.at("pj")] = ci;
    std::map<int, std::vector<int>> deps;  // offset -> prerequisites
    for (int ci : offsets) {
      const std::string& pjunc = sys.comps_[ci].port_junction.at("p");
      auto it = pj_owner.find(pjunc);
      if (it != pj_owner.end()) deps[ci].push_back(it->second);
    }
    std::vector<int> order;
    std::map<int, int> mark;  // 0 new, 1 visiting, 2 done
    std::function<void(int)> visit = [&](int ci) {
      if (mark[ci] == 2) return;
      if (mark[ci] == 1)
        fail("CausalityConflict", "offset components form an effort-propagation cycle");
      mark[ci] = 1;
      for (int d : deps[ci]) visit(d);
      mark[ci] = 2;
      order.push_back(ci);
    };
    for (int ci : offsets) visit(ci);
    sys.offset_order_ = order;
  }

  return sys;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

struct DAESystem::EvalScratch {
  std::vector<Value> state;   // per junction slot
  std::vector<Value> effort;  // per junction slot
  std::vector<Eigen::VectorXd> flow_sum;
  std::vector<Eigen::VectorXd> hc_residual;

  bool want_audit = false;
  std::map<std::string, double> component_power;
  double destruction = 0.0;
};

geom::GroupElement DAESystem::get_pose(const Eigen::VectorXd& x, int slot) const {
  const auto& s = layout_.junctions[slot];
  GroupElement q;
  q.convention = geom::Convention::SemidirectProduct;
  const int o = s.state_offset;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q.R(i, j) = x[o + 3 * i + j];
  q.r = x.segment<3>(o + 9);
  return q;
}

void DAESystem::set_pose(Eigen::VectorXd& x, int slot, const GroupElement& q) const {
  const auto& s = layout_.junctions[slot];
  const int o = s.state_offset;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) x[o + 3 * i + j] = q.R(i, j);
  x.segment<3>(o + 9) = q.r;
}

void DAESystem::evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd* xdot,
                         const Eigen::VectorXd& z, EvalScratch& s) const {
  const auto& L = layout_;
  const size_t nj = L.junctions.size();
  s.state.assign(nj, Value{});
  s.effort.assign(nj, Value{});
  s.flow_sum.assign(nj, Eigen::VectorXd());
  s.hc_residual.assign(L.multipliers.size(), Eigen::VectorXd());
  if (s.want_audit) {
    s.component_power.clear();
    s.destruction = 0.0;
  }

  // states and storage/environment/algebraic efforts
  for (size_t ji = 0; ji < nj; ++ji) {
    const auto& slot = L.junctions[ji];
    s.flow_sum[ji] = Eigen::VectorXd::Zero(slot.rate_dim);
    if (slot.role == JunctionRole::Differential) {
      if (slot.is_pose)
        s.state[ji] = get_pose(x, (int)ji);
      else
        s.state[ji] = Eigen::VectorXd(x.segment(slot.state_offset, slot.state_dim));
      const auto& owner = comps_[comp_index_.at(slot.owner_box)];
      if (owner.comp->kind() == ComponentKind::Environment)
        s.effort[ji] = Eigen::VectorXd(Eigen::VectorXd::Zero(1));
      else
        s.effort[ji] = comp::storage_effort(*owner.comp, s.state[ji]);
    } else if (slot.role == JunctionRole::Algebraic) {
      s.effort[ji] = Eigen::VectorXd(z.segment(slot.effort_offset, slot.effort_dim));
    }
  }

  // offset-propagated efforts
  for (int ci : offset_order_) {
    const auto& cs = comps_[ci];
    const int jp = L.index.at(cs.port_junction.at("p"));
    const int jpj = L.index.at(cs.port_junction.at("pj"));
    const auto& prm = cs.comp->params_as<comp::OffsetParams>();
    const Eigen::VectorXd& ep = comp::as_vec(s.effort[jp]);
    s.effort[jpj] =
        Eigen::VectorXd(geom::Ad(geom::inverse(prm.o), Twist::from(Vec6(ep))).vec());
  }

  // component flows, non-offset first
  for (const auto& cs : comps_) {
    const Catalog cat = cs.comp->catalog();
    if (cat == Catalog::Offset) continue;
    const ComponentKind kind = cs.comp->kind();
    if (kind == ComponentKind::Storage || kind == ComponentKind::Environment) continue;

    if (kind == ComponentKind::Irreversible) {
      const int jp = L.index.at(cs.port_junction.at(cat == Catalog::JointMf ? "pr" : "p"));
      const int js = L.index.at(cs.port_junction.at("s"));
      const Eigen::VectorXd& u = comp::as_vec(s.effort[jp]);
      const double se = comp::as_vec(s.effort[js])[0];
      const auto out = comp::onsager_eval(*cs.comp, u, se, theta0_);
      s.flow_sum[jp] += out.f_p;
      s.flow_sum[js][0] += out.f_s;
      if (s.want_audit) {
        const double power = u.dot(out.f_p) + se * out.f_s;
        s.component_power[cs.box] = power;
        s.destruction += power;  // theta0/theta * mu(u,u) >= 0
      }
      continue;
    }

    comp::DiracInputs in;
    for (const auto& [cport, jid] : cs.port_junction) {
      const int ji = L.index.at(jid);
      in.efforts.emplace(cport, s.effort[ji]);
      if (L.junctions[ji].role == JunctionRole::Differential)
        in.states.emplace(cport, s.state[ji]);
    }
    if (cs.multiplier >= 0)
      in.lambda = z.segment(L.multipliers[cs.multiplier].z_offset, 6);
    const auto out = comp::dirac_eval(*cs.comp, in);
    for (const auto& [cport, f] : out.flows)
      s.flow_sum[L.index.at(cs.port_junction.at(cport))] += f;
    if (cs.multiplier >= 0) s.hc_residual[cs.multiplier] = out.residual;

    if (s.want_audit) {
      double power = 0.0;
      for (const auto& [cport, f] : out.flows) {
        const int ji = L.index.at(cs.port_junction.at(cport));
        const auto& slot = L.junctions[ji];
        if (slot.is_pose) {
          // pose-port flow is carried as a twist; pair with the cotrivialized effort
          const GroupElement& q = comp::as_pose(s.state[ji]);
          if (std::holds_alternative<MaterialCotangent>(s.effort[ji])) {
            const Wrench w = geom::cotrivialize(q, comp::as_cotangent(s.effort[ji]));
            power += w.vec().dot(Vec6(f));
          } else {
            power += comp::as_vec(s.effort[ji]).dot(f);
          }
        } else {
          power += comp::as_vec(s.effort[ji]).dot(f);
        }
      }
      if (cs.multiplier >= 0)
        power -= s.hc_residual[cs.multiplier].dot(z.segment(L.multipliers[cs.multiplier].z_offset, 6));
      s.component_power[cs.box] = power;
    }
  }

  // offsets consume the balance at their pj junction and push it to p
  for (auto it = offset_order_.rbegin(); it != offset_order_.rend(); ++it) {
    const auto& cs = comps_[*it];
    const int jp = L.index.at(cs.port_junction.at("p"));
    const int jpj = L.index.at(cs.port_junction.at("pj"));
    comp::DiracInputs in;
    in.efforts.emplace("p", s.effort[jp]);
    in.pj_in_flow = -s.flow_sum[jpj];
    const auto out = comp::dirac_eval(*cs.comp, in);
    s.flow_sum[jp] += out.flows.at("p");
    if (s.want_audit) {
      const double power = comp::as_vec(s.effort[jp]).dot(out.flows.at("p")) +
                           comp::as_vec(s.effort[jpj]).dot(in.pj_in_flow);
      s.component_power[cs.box] = power;
    }
  }
  (void)xdot;
}

Eigen::VectorXd DAESystem::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& xdot,
                                    const Eigen::VectorXd& z) const {
  if (x.size() != layout_.state_dim || xdot.size() != layout_.rate_dim ||
      z.size() != layout_.z_dim)
    fail("DimensionMismatch", "residual input sizes do not match the layout");
  EvalScratch s;
  evaluate(x, &xdot, z, s);

  Eigen::VectorXd r(layout_.residual_dim);
  for (size_t ji = 0; ji < layout_.junctions.size(); ++ji) {
    const auto& slot = layout_.junctions[ji];
    if (slot.role == JunctionRole::Differential) {
      r.segment(slot.row_offset, slot.rate_dim) =
          xdot.segment(slot.rate_offset, slot.rate_dim) + s.flow_sum[ji];
    } else if (slot.role == JunctionRole::Algebraic) {
      r.segment(slot.row_offset, slot.effort_dim) = s.flow_sum[ji];
    }
  }
  for (size_t mi = 0; mi < layout_.multipliers.size(); ++mi)
    r.segment(layout_.multipliers[mi].row_offset, 6) = s.hc_residual[mi];
  return r;
}

Eigen::VectorXd DAESystem::constraint_rows(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& z) const {
  EvalScratch s;
  evaluate(x, nullptr, z, s);
  Eigen::VectorXd r(6 * (int)layout_.multipliers.size());
  for (size_t mi = 0; mi < layout_.multipliers.size(); ++mi) r.segment(6 * mi, 6) = s.hc_residual[mi];
  return r;
}

Eigen::VectorXd DAESystem::implied_rates(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& z) const {
  EvalScratch s;
  evaluate(x, nullptr, z, s);
  Eigen::VectorXd rates(layout_.rate_dim);
  for (size_t ji = 0; ji < layout_.junctions.size(); ++ji) {
    const auto& slot = layout_.junctions[ji];
    if (slot.role == JunctionRole::Differential)
      rates.segment(slot.rate_offset, slot.rate_dim) = -s.flow_sum[ji];
  }
  return rates;
}

Eigen::VectorXd DAESystem::advance_states(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& rates, double h) const {
  Eigen::VectorXd out = x;
  for (size_t ji = 0; ji < layout_.junctions.size(); ++ji) {
    const auto& slot = layout_.junctions[ji];
    if (slot.role != JunctionRole::Differential) continue;
    if (slot.is_pose) {
      const GroupElement q = get_pose(x, (int)ji);
      Twist xi;
      if (slot.quantity.name == Quantity::Name::RelativePose) {
        xi = Twist::from(Vec6(slot.basis->B * rates.segment(slot.rate_offset, slot.rate_dim)));
      } else {
        xi = Twist::from(Vec6(rates.segment<6>(slot.rate_offset)));
      }
      const GroupElement qn = geom::compose(
          q, geom::exp_map(Twist{h * xi.angular, h * xi.linear}, q.convention));
      set_pose(out, (int)ji, qn);
    } else {
      out.segment(slot.state_offset, slot.state_dim) +=
          h * rates.segment(slot.rate_offset, slot.rate_dim);
    }
  }
  return out;
}

double DAESystem::total_energy(const Eigen::VectorXd& x) const {
  double e = 0.0;
  for (size_t ji = 0; ji < layout_.junctions.size(); ++ji) {
    const auto& slot = layout_.junctions[ji];
    if (slot.role != JunctionRole::Differential) continue;
    const auto& owner = comps_[comp_index_.at(slot.owner_box)];
    if (owner.comp->kind() == ComponentKind::Environment) {
      e += theta0_ * x[slot.state_offset];
    } else {
      Value st = slot.is_pose ? Value(get_pose(x, (int)ji))
                              : Value(Eigen::VectorXd(x.segment(slot.state_offset, slot.state_dim)));
      e += comp::storage_energy(*owner.comp, st);
    }
  }
  return e;
}

AuditReport DAESystem::audit(const Eigen::VectorXd& x, const Eigen::VectorXd& xdot,
                             const Eigen::VectorXd& z) const {
  EvalScratch s;
  s.want_audit = true;
  evaluate(x, &xdot, z, s);

  AuditReport rep;
  rep.component_power = s.component_power;
  for (const auto& cs : comps_) {
    if (cs.comp->kind() != ComponentKind::Reversible) continue;
    auto it = s.component_power.find(cs.box);
    if (it != s.component_power.end())
      rep.max_dirac_power_defect = std::max(rep.max_dirac_power_defect, std::abs(it->second));
  }
  rep.e_total = total_energy(x);

  double dedt = 0.0;
  double destruction = 0.0;
  for (size_t ji = 0; ji < layout_.junctions.size(); ++ji) {
    const auto& slot = layout_.junctions[ji];
    if (slot.role != JunctionRole::Differential) continue;
    const auto& owner = comps_[comp_index_.at(slot.owner_box)];
    const auto rate = xdot.segment(slot.rate_offset, slot.rate_dim);
    if (owner.comp->kind() == ComponentKind::Environment) {
      dedt += theta0_ * rate[0];
      continue;
    }
    if (slot.is_pose && std::holds_alternative<MaterialCotangent>(s.effort[ji])) {
      const GroupElement q = get_pose(x, (int)ji);
      const Wrench w = geom::cotrivialize(q, comp::as_cotangent(s.effort[ji]));
      Vec6 tw;
      if (slot.quantity.name == Quantity::Name::RelativePose)
        tw = slot.basis->B * rate;
      else
        tw = rate;
      dedt += w.vec().dot(tw);
    } else {
      dedt += comp::as_vec(s.effort[ji]).dot(rate);
    }
  }
  rep.de_total_dt = dedt;

  for (const auto& cs : comps_) {
    if (cs.comp->kind() != ComponentKind::Irreversible) continue;
    const Catalog cat = cs.comp->catalog();
    const int jp =
        layout_.index.at(cs.port_junction.at(cat == Catalog::JointMf ? "pr" : "p"));
    const int js = layout_.index.at(cs.port_junction.at("s"));
    const Eigen::VectorXd& u = comp::as_vec(s.effort[jp]);
    const double se = comp::as_vec(s.effort[js])[0];
    const auto out = comp::onsager_eval(*cs.comp, u, se, theta0_);
    destruction += -theta0_ * out.f_s;  // theta0 * mu(u,u)/theta
  }
  rep.exergy_destruction_rate = destruction;

  for (size_t mi = 0; mi < layout_.multipliers.size(); ++mi) {
    if (s.hc_residual[mi].size())
      rep.velocity_constraint_residual = std::max(
          rep.velocity_constraint_residual, s.hc_residual[mi].lpNorm<Eigen::Infinity>());
  }

  // position drift: trace each hc back to the body poses through the offsets
  for (const auto& tr : trace_hc_positions(x))
    rep.position_drift = std::max(rep.position_drift, tr.defect);

  for (const auto& slot : layout_.junctions) {
    if (slot.role == JunctionRole::Differential &&
        slot.quantity.name == Quantity::Name::Entropy)
      rep.entropy += x[slot.state_offset];
  }
  return rep;
}

std::vector<DAESystem::HcTrace> DAESystem::trace_hc_positions(const Eigen::VectorXd& x) const {
  std::vector<HcTrace> out;
  for (const auto& cs : comps_) {
    if (cs.comp->catalog() != Catalog::Hc) continue;
    auto joint_frame = [&](const std::string& hc_port) -> std::optional<GroupElement> {
      const std::string pj_junction = cs.port_junction.at(hc_port);
      for (const auto& oc : comps_) {
        if (oc.comp->catalog() != Catalog::Offset) continue;
        if (oc.port_junction.at("pj") != pj_junction) continue;
        const std::string p_junction = oc.port_junction.at("p");
        for (const auto& pkc : comps_) {
          if (pkc.comp->catalog() != Catalog::BodyPkc) continue;
          if (pkc.port_junction.at("p") != p_junction) continue;
          const int qslot = layout_.index.at(pkc.port_junction.at("q"));
          const GroupElement q = get_pose(x, qslot);
          return geom::compose(q, oc.comp->params_as<comp::OffsetParams>().o);
        }
      }
      return std::nullopt;
    };
    const auto qj1 = joint_frame("pj1");
    const auto qj2 = joint_frame("pj2");
    if (!qj1 || !qj2) continue;
    HcTrace tr;
    tr.box = cs.box;
    tr.qr_slot = layout_.index.at(cs.port_junction.at("qr"));
    tr.rel = geom::compose(geom::inverse(*qj1), *qj2);
    const GroupElement qr = get_pose(x, tr.qr_slot);
    tr.defect = geom::log_map(geom::compose(geom::inverse(qr), tr.rel)).vec().norm();
    out.push_back(std::move(tr));
  }
  return out;
}

void DAESystem::set_vector_state(Eigen::VectorXd& x, const std::string& junction,
                                 const Eigen::VectorXd& v) const {
  const auto& slot = layout_.at(junction);
  if (slot.is_pose || slot.role != JunctionRole::Differential || v.size() != slot.state_dim)
    fail("DimensionMismatch", "cannot set vector state of junction '" + junction + "'");
  x.segment(slot.state_offset, slot.state_dim) = v;
}

void DAESystem::set_pose_state(Eigen::VectorXd& x, const std::string& junction,
                               const GroupElement& q) const {
  const auto& slot = layout_.at(junction);
  if (!slot.is_pose || slot.role != JunctionRole::Differential)
    fail("DimensionMismatch", "junction '" + junction + "' is not a pose state");
  set_pose(x, layout_.index.at(junction), q);
}

Eigen::VectorXd DAESystem::get_vector_state(const Eigen::VectorXd& x,
                                            const std::string& junction) const {
  const auto& slot = layout_.at(junction);
  if (slot.is_pose || slot.role != JunctionRole::Differential)
    fail("DimensionMismatch", "junction '" + junction + "' has no vector state");
  return x.segment(slot.state_offset, slot.state_dim);
}

geom::GroupElement DAESystem::get_pose_state(const Eigen::VectorXd& x,
                                             const std::string& junction) const {
  const auto& slot = layout_.at(junction);
  if (!slot.is_pose || slot.role != JunctionRole::Differential)
    fail("DimensionMismatch", "junction '" + junction + "' is not a pose state");
  return get_pose(x, layout_.index.at(junction));
}

// ---------------------------------------------------------------------------
// symbolic equation dump
// ---------------------------------------------------------------------------

std::string DAESystem::dump_equations() const {
  const auto& L = layout_;

  // effort symbols per junction
  std::vector<std::string> esym(L.junctions.size());
  for (size_t ji = 0; ji < L.junctions.size(); ++ji) {
    const auto& slot = L.junctions[ji];
    if (slot.role == JunctionRole::Differential) {
      const auto& owner = comps_[comp_index_.at(slot.owner_box)];
      esym[ji] = (owner.comp->kind() == ComponentKind::Environment)
                     ? "0"
                     : "dE[" + slot.owner_box + "]";
    } else if (slot.role == JunctionRole::Algebraic) {
      esym[ji] = "e[" + slot.id + "]";
    }
  }
  for (int ci : offset_order_) {
    const auto& cs = comps_[ci];
    const int jp = L.index.at(cs.port_junction.at("p"));
    const int jpj = L.index.at(cs.port_junction.at("pj"));
    esym[jpj] = "Ad(inv(o[" + cs.box + "])) " + esym[jp];
  }

  // flow term symbols per junction
  std::vector<std::vector<std::string>> terms(L.junctions.size());
  std::vector<std::string> hc_rows(L.multipliers.size());
  for (const auto& cs : comps_) {
    const Catalog cat = cs.comp->catalog();
    auto jat = [&](const std::string& port) { return L.index.at(cs.port_junction.at(port)); };
    auto tag = [&](std::string t) { return t + " {" + cs.box + "}"; };
    switch (cat) {
      case Catalog::Pkc1D: {
        terms[jat("q")].push_back(tag(negate_sym(esym[jat("p")])));
        terms[jat("p")].push_back(tag(esym[jat("q")]));
        break;
      }
      case Catalog::JointPkc: {
        terms[jat("qr")].push_back(tag(negate_sym(esym[jat("pr")])));
        terms[jat("pr")].push_back(tag(esym[jat("qr")]));
        break;
      }
      case Catalog::BodyPkc: {
        terms[jat("q")].push_back(tag(negate_sym(esym[jat("p")])));
        terms[jat("p")].push_back(
            tag("T*eL(q[" + cs.port_junction.at("q") + "]) " + esym[jat("q")]));
        break;
      }
      case Catalog::BodyLp: {
        const std::string j = cs.port_junction.at("p");
        terms[jat("p")].push_back(tag("-ad*(" + esym[jat("p")] + ", x[" + j + "])"));
        break;
      }
      case Catalog::Friction1D:
      case Catalog::JointMf: {
        const std::string pport = (cat == Catalog::JointMf) ? "pr" : "p";
        const int jp = jat(pport);
        const int js = jat("s");
        const std::string theta = (esym[js] == "0") ? "theta0" : "theta";
        terms[jp].push_back(tag("mu[" + cs.box + "](" + esym[jp] + ")"));
        terms[js].push_back(tag("-(1/" + theta + ") mu[" + cs.box + "](" + esym[jp] + ", " +
                                esym[jp] + ")"));
        break;
      }
      case Catalog::Hc: {
        const std::string qrj = cs.port_junction.at("qr");
        const std::string lam = "lam[" + cs.box + "]";
        terms[jat("pj1")].push_back(tag("Ad*(inv(I(x[" + qrj + "]))) " + lam));
        terms[jat("pj2")].push_back(tag("-" + lam));
        terms[jat("pr")].push_back(tag("i*(" + lam + ")"));
        hc_rows[cs.multiplier] = "0 = Ad(inv(I(x[" + qrj + "]))) " + esym[jat("pj1")] +
                                 " - " + esym[jat("pj2")] + " + i(" + esym[jat("pr")] + ")" +
                                 " {" + cs.box + "}";
        break;
      }
      default:
        break;
    }
  }
  // offsets push the (negated) balance of their pj junction to the p side
  for (auto it = offset_order_.rbegin(); it != offset_order_.rend(); ++it) {
    const auto& cs = comps_[*it];
    const int jp = L.index.at(cs.port_junction.at("p"));
    const int jpj = L.index.at(cs.port_junction.at("pj"));
    std::string inner = join_terms(terms[jpj]);
    if (terms[jpj].size() > 1) inner = "(" + inner + ")";
    std::string t = "Ad*(inv(o[" + cs.box + "])) " + inner;
    if (!inner.empty() && inner[0] == '-')
      t = "-Ad*(inv(o[" + cs.box + "])) " + inner.substr(1);
    terms[jp].push_back(t + " {" + cs.box + "}");
  }

  std::ostringstream os;
  os << "system " << pattern_.name << "\n";
  os << "differential:\n";
  for (const auto& slot : L.junctions)
    if (slot.role == JunctionRole::Differential)
      os << "  " << slot.id << " : " << slot.quantity.to_string() << " state[" << slot.state_dim
         << "] rate[" << slot.rate_dim << "]\n";
  os << "algebraic:\n";
  for (const auto& slot : L.junctions)
    if (slot.role == JunctionRole::Algebraic)
      os << "  " << slot.id << " : effort[" << slot.effort_dim << "]\n";
  for (const auto& m : L.multipliers) os << "  " << m.box << " : multiplier[6]\n";
  os << "equations:\n";
  for (const auto& slot : L.junctions) {
    if (slot.role == JunctionRole::Differential) {
      std::vector<std::string> neg;
      for (const auto& t : terms[L.index.at(slot.id)]) neg.push_back(negate_sym(t));
      if (slot.has_outer) {
        for (const auto& w : pattern_.wires)
          if (w.outer() && w.junction == slot.id) neg.push_back("f[" + w.port + "]");
      }
      std::string rhs = join_terms(neg);
      if (slot.is_pose) {
        if (neg.size() > 1) rhs = "(" + rhs + ")";
        os << "  dot(q[" << slot.id << "]) = TeL(q[" << slot.id << "]) " << rhs << "\n";
      } else {
        os << "  dot(x[" << slot.id << "]) = " << rhs << "\n";
      }
    } else if (slot.role == JunctionRole::Algebraic) {
      os << "  0 = " << join_terms(terms[L.index.at(slot.id)]) << "\n";
    }
  }
  for (const auto& row : hc_rows) os << "  " << row << "\n";
  return os.str();
}

std::vector<std::string> DAESystem::state_labels() const {
  std::vector<std::string> out;
  for (const auto& slot : layout_.junctions) {
    if (slot.role != JunctionRole::Differential) continue;
    if (slot.is_pose) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          out.push_back(slot.id + ".R" + std::to_string(i) + std::to_string(j));
      out.push_back(slot.id + ".rx");
      out.push_back(slot.id + ".ry");
      out.push_back(slot.id + ".rz");
    } else if (slot.quantity.name == Quantity::Name::MomentumGStar) {
      for (const char* n : {"pwx", "pwy", "pwz", "pvx", "pvy", "pvz"})
        out.push_back(slot.id + "." + n);
    } else if (slot.state_dim == 1) {
      out.push_back(slot.id);
    } else {
      for (int i = 0; i < slot.state_dim; ++i) out.push_back(slot.id + "." + std::to_string(i));
    }
  }
  return out;
}

std::vector<std::string> DAESystem::z_labels() const {
  std::vector<std::string> out;
  for (const auto& slot : layout_.junctions) {
    if (slot.role != JunctionRole::Algebraic) continue;
    if (slot.effort_dim == 1)
      out.push_back(slot.id + ".e");
    else
      for (int i = 0; i < slot.effort_dim; ++i)
        out.push_back(slot.id + ".e" + std::to_string(i));
  }
  for (const auto& m : layout_.multipliers)
    for (int i = 0; i < 6; ++i) out.push_back(m.box + ".lam" + std::to_string(i));
  return out;
}

}  // namespace ephs::assemble
