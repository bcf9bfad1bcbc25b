#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ephs/error.hpp"

namespace ephs::core {

/// Lower kinematic pairs: the joint types whose relative poses form a Lie subgroup.
enum class JointType { Spherical, Planar, Cylindrical, Revolute, Prismatic, Screw };

std::string to_string(JointType t);
std::optional<JointType> joint_type_from_string(const std::string& s);

/// Physical quantity carried by a port / junction, with its state-space family.
/// Momentum comes in a plain flavour (dimension fixed by the bound components)
/// and a g* flavour (left-trivialized momentum of a rigid body, R^6).
struct Quantity {
  enum class Name { Displacement, Momentum, MomentumGStar, Pose, RelativePose, Entropy };

  Name name = Name::Displacement;
  JointType joint = JointType::Revolute;  // meaningful only for RelativePose

  friend bool operator==(const Quantity& a, const Quantity& b) {
    return a.name == b.name && (a.name != Name::RelativePose || a.joint == b.joint);
  }
  friend bool operator!=(const Quantity& a, const Quantity& b) { return !(a == b); }
  friend bool operator<(const Quantity& a, const Quantity& b) {
    if (a.name != b.name) return a.name < b.name;
    if (a.name == Name::RelativePose) return a.joint < b.joint;
    return false;
  }

  std::string to_string() const;
  static std::optional<Quantity> from_string(const std::string& s);

  static Quantity displacement() { return {Name::Displacement}; }
  static Quantity momentum() { return {Name::Momentum}; }
  static Quantity momentum_gstar() { return {Name::MomentumGStar}; }
  static Quantity pose() { return {Name::Pose}; }
  static Quantity relative_pose(JointType t) { return {Name::RelativePose, t}; }
  static Quantity entropy() { return {Name::Entropy}; }
};

enum class PortKind { Power, State };

struct PortDecl {
  std::string name;
  Quantity quantity;
  PortKind kind = PortKind::Power;

  friend bool operator==(const PortDecl& a, const PortDecl& b) {
    return a.name == b.name && a.quantity == b.quantity && a.kind == b.kind;
  }
};

struct Interface {
  std::vector<PortDecl> ports;

  const PortDecl* find(const std::string& name) const;
  friend bool operator==(const Interface& a, const Interface& b) { return a.ports == b.ports; }
};

/// A single port-to-junction connection. `box` empty means an outer port.
struct Wire {
  std::string box;
  std::string port;
  std::string junction;

  bool outer() const { return box.empty(); }
  friend bool operator==(const Wire& a, const Wire& b) {
    return a.box == b.box && a.port == b.port && a.junction == b.junction;
  }
  friend bool operator<(const Wire& a, const Wire& b) {
    if (a.box != b.box) return a.box < b.box;
    if (a.port != b.port) return a.port < b.port;
    return a.junction < b.junction;
  }
};

struct Diagnostic {
  std::string rule;      // e.g. "DOUBLE_WIRE"
  std::string location;  // "pattern damped_osc, box mf, port p"
  std::string message;
};

/// Interconnection pattern: boxes with typed interfaces, junctions carrying
/// quantities, and port-to-junction wiring.
struct Pattern {
  std::string name;
  Interface outer;
  std::map<std::string, Interface> boxes;
  std::map<std::string, Quantity> junctions;
  std::vector<Wire> wires;

  std::optional<std::string> junction_of(const std::string& box, const std::string& port) const;
  std::optional<std::string> junction_of_outer(const std::string& port) const;
  std::vector<Wire> wires_at(const std::string& junction) const;

  /// Sorts wires; boxes/junctions are already key-sorted maps.
  void canonicalize();

  friend bool operator==(const Pattern& a, const Pattern& b);
};

std::vector<Diagnostic> validate_pattern(const Pattern& p);

using Renaming = std::map<std::string, std::string>;

/// Bijection between port sets preserving (quantity, kind); lexicographic
/// tie-break inside each signature class. Empty optional if the multisets differ.
std::optional<Renaming> interface_equiv(const Interface& a, const Interface& b);

/// Replaces `box` in `outer` by the boxes of `inner`; inner names are
/// path-prefixed with "box." and junctions reached through inner outer ports
/// are merged (representative: lexicographically smallest id).
Pattern substitute(const Pattern& outer, const std::string& box, const Pattern& inner,
                   const Renaming& renaming);

/// Anything that can fill a box: implemented by components::ComponentInstance.
class Component {
public:
  virtual ~Component() = default;
  virtual const Interface& interface() const = 0;
  virtual std::string type_name() const = 0;
};

using ComponentPtr = std::shared_ptr<const Component>;

/// Assignment of boxes to components or nested patterns (with their own bindings).
struct Binding {
  struct Item {
    ComponentPtr component;                    // exclusive with `pattern`
    std::shared_ptr<const Pattern> pattern;
    std::shared_ptr<const Binding> binding;    // bindings of the nested pattern
  };
  std::map<std::string, Item> items;

  static Binding::Item of(ComponentPtr c) { return {std::move(c), nullptr, nullptr}; }
  static Binding::Item of(Pattern p, Binding b);
};

struct FlatModel {
  Pattern pattern;
  std::map<std::string, ComponentPtr> components;  // box path -> component
};

/// Substitutes every nested pattern until only components remain; canonical
/// junction ids are path names, independent of substitution order.
FlatModel flatten(const Pattern& p, const Binding& b);

}  // namespace ephs::core
