#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ephs/components.hpp"
#include "ephs/pattern.hpp"

namespace ephs::assemble {

using components::ComponentPtr;
using components::SubgroupBasis;
using components::Value;
using core::Quantity;

enum class JunctionRole {
  Differential,   // has a storage/environment port: carries state + rate rows
  Algebraic,      // effort is an unknown, flow balance closes it
  EffortDefined,  // effort produced by a Dirac output (offset), no rows
};

struct JunctionSlot {
  std::string id;
  Quantity quantity;
  JunctionRole role = JunctionRole::Differential;
  bool is_pose = false;  // pose / relative_pose: state is a GroupElement

  int state_dim = 0;   // 12 for poses, n otherwise (0 unless differential)
  int rate_dim = 0;    // 6 for pose, k for relative pose, n otherwise
  int effort_dim = 0;  // algebraic effort unknowns (0 otherwise)

  int state_offset = -1;
  int rate_offset = -1;
  int effort_offset = -1;  // into z
  int row_offset = -1;     // into the residual

  std::string owner_box;  // storage/environment box for differential junctions
  std::optional<SubgroupBasis> basis;  // relative-pose junctions
  bool has_outer = false;              // an outer port is wired here (capped)
};

struct MultiplierSlot {
  std::string box;      // hc component box
  int z_offset = -1;    // into z (6 entries)
  int row_offset = -1;  // into the residual (6 rows)
};

/// Variable layout: differential states/rates per junction, algebraic effort
/// unknowns, and one multiplier block per holonomic constraint. Ordering is
/// lexicographic in junction id / component box, so it is deterministic.
struct VariableLayout {
  std::vector<JunctionSlot> junctions;
  std::map<std::string, int> index;  // junction id -> position
  std::vector<MultiplierSlot> multipliers;

  int state_dim = 0;
  int rate_dim = 0;
  int z_dim = 0;  // algebraic efforts + multipliers
  int residual_dim = 0;

  const JunctionSlot& at(const std::string& id) const;
};

struct AssembleOptions {
  double theta0 = 298.15;      // used when no environment pins it explicitly
  bool cap_open_ports = true;  // close outer power ports with zero flow
};

struct AuditReport {
  double max_dirac_power_defect = 0.0;  // max |sum <e|f>| over reversible components
  std::map<std::string, double> component_power;
  double e_total = 0.0;
  double de_total_dt = 0.0;
  double exergy_destruction_rate = 0.0;
  double velocity_constraint_residual = 0.0;
  double position_drift = 0.0;
  double entropy = 0.0;
};

class DAESystem {
public:
  const VariableLayout& layout() const { return layout_; }
  double theta0() const { return theta0_; }
  const std::vector<core::Diagnostic>& notes() const { return notes_; }
  const core::Pattern& pattern() const { return pattern_; }

  /// Residual of the assembled equations at (x, xdot, z); zero iff the
  /// junction balances, algebraic balances, and constraint rows hold.
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& xdot,
                           const Eigen::VectorXd& z) const;

  /// The holonomic-constraint rows alone (stacked per multiplier slot),
  /// evaluated from states and algebraic efforts.
  Eigen::VectorXd constraint_rows(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

  /// Rates implied by the flow balances at the differential junctions:
  /// the value of -sum(flows) row by row (independent of claimed rates).
  Eigen::VectorXd implied_rates(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

  AuditReport audit(const Eigen::VectorXd& x, const Eigen::VectorXd& xdot,
                    const Eigen::VectorXd& z) const;

  /// Human-readable equation listing, one line per residual block.
  std::string dump_equations() const;

  // --- state helpers ---
  geom::GroupElement get_pose(const Eigen::VectorXd& x, int slot) const;
  void set_pose(Eigen::VectorXd& x, int slot, const geom::GroupElement& q) const;
  /// Advances differential states by rates over step h (poses via exp).
  Eigen::VectorXd advance_states(const Eigen::VectorXd& x, const Eigen::VectorXd& rates,
                                 double h) const;

  /// Total energy including theta0 * s of the environment domains.
  double total_energy(const Eigen::VectorXd& x) const;

  /// Position-level view of one holonomic constraint: the relative pose of
  /// the joint frames recovered from the body poses, next to the stored q_r.
  struct HcTrace {
    std::string box;
    int qr_slot = -1;
    geom::GroupElement rel;  // q_j1^-1 q_j2 from the body poses and offsets
    double defect = 0.0;     // || log(q_r^-1 rel) ||
  };
  std::vector<HcTrace> trace_hc_positions(const Eigen::VectorXd& x) const;

  // convenience state access by junction id
  void set_vector_state(Eigen::VectorXd& x, const std::string& junction,
                        const Eigen::VectorXd& v) const;
  void set_pose_state(Eigen::VectorXd& x, const std::string& junction,
                      const geom::GroupElement& q) const;
  Eigen::VectorXd get_vector_state(const Eigen::VectorXd& x, const std::string& junction) const;
  geom::GroupElement get_pose_state(const Eigen::VectorXd& x, const std::string& junction) const;

  /// Column labels for trajectory export, in layout order.
  std::vector<std::string> state_labels() const;
  std::vector<std::string> z_labels() const;

private:
  friend DAESystem assemble(const core::FlatModel&, const AssembleOptions&);

  struct CompSlot {
    std::string box;
    ComponentPtr comp;
    std::map<std::string, std::string> port_junction;  // catalog port -> junction id
    int multiplier = -1;                               // hc only
  };

  struct EvalScratch;
  void evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd* xdot,
                const Eigen::VectorXd& z, EvalScratch& s) const;

  core::Pattern pattern_;
  VariableLayout layout_;
  std::vector<CompSlot> comps_;                  // sorted by box
  std::map<std::string, int> comp_index_;
  std::vector<int> offset_order_;                // comp indices, effort/flow topo order
  double theta0_ = 298.15;
  std::vector<core::Diagnostic> notes_;
};

/// Lowers a flattened model to an executable DAE. Throws Error with codes
/// PatternInvalid, IncompleteBinding, InterfaceMismatch, CausalityConflict,
/// UnderdeterminedJunction, DimensionMismatch.
DAESystem assemble(const core::FlatModel& model, const AssembleOptions& opts = {});

}  // namespace ephs::assemble
