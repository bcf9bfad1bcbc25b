#include "ephs/pattern.hpp"

#include <algorithm>
#include <set>

namespace ephs::core {

std::string to_string(JointType t) {
  switch (t) {
    case JointType::Spherical: return "spherical";
    case JointType::Planar: return "planar";
    case JointType::Cylindrical: return "cylindrical";
    case JointType::Revolute: return "revolute";
    case JointType::Prismatic: return "prismatic";
    case JointType::Screw: return "screw";
  }
  return "?";
}

std::optional<JointType> joint_type_from_string(const std::string& s) {
  if (s == "spherical") return JointType::Spherical;
  if (s == "planar") return JointType::Planar;
  if (s == "cylindrical") return JointType::Cylindrical;
  if (s == "revolute") return JointType::Revolute;
  if (s == "prismatic") return JointType::Prismatic;
  if (s == "screw") return JointType::Screw;
  return std::nullopt;
}

std::string Quantity::to_string() const {
  switch (name) {
    case Name::Displacement: return "displacement";
    case Name::Momentum: return "momentum";
    case Name::MomentumGStar: return "momentum<g*>";
    case Name::Pose: return "pose";
    case Name::RelativePose: return "relative_pose<" + core::to_string(joint) + ">";
    case Name::Entropy: return "entropy";
  }
  return "?";
}

std::optional<Quantity> Quantity::from_string(const std::string& s) {
  if (s == "displacement") return displacement();
  if (s == "momentum") return momentum();
  if (s == "momentum<g*>") return momentum_gstar();
  if (s == "pose") return pose();
  if (s == "entropy") return entropy();
  const std::string prefix = "relative_pose<";
  if (s.rfind(prefix, 0) == 0 && s.back() == '>') {
    auto jt = joint_type_from_string(s.substr(prefix.size(), s.size() - prefix.size() - 1));
    if (jt) return relative_pose(*jt);
  }
  return std::nullopt;
}

const PortDecl* Interface::find(const std::string& name) const {
  for (const auto& p : ports)
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<std::string> Pattern::junction_of(const std::string& box,
                                                const std::string& port) const {
  for (const auto& w : wires)
    if (w.box == box && w.port == port) return w.junction;
  return std::nullopt;
}

std::optional<std::string> Pattern::junction_of_outer(const std::string& port) const {
  return junction_of("", port);
}

std::vector<Wire> Pattern::wires_at(const std::string& junction) const {
  std::vector<Wire> out;
  for (const auto& w : wires)
    if (w.junction == junction) out.push_back(w);
  return out;
}

void Pattern::canonicalize() { std::sort(wires.begin(), wires.end()); }

bool operator==(const Pattern& a, const Pattern& b) {
  return a.name == b.name && a.outer == b.outer && a.boxes == b.boxes &&
         a.junctions == b.junctions && a.wires == b.wires;
}

std::vector<Diagnostic> validate_pattern(const Pattern& p) {
  std::vector<Diagnostic> diags;
  auto add = [&](std::string rule, std::string loc, std::string msg) {
    diags.push_back({std::move(rule), "pattern " + p.name + ", " + loc, std::move(msg)});
  };

  // port names unique within interfaces
  auto check_ports = [&](const Interface& itf, const std::string& where) {
    std::set<std::string> seen;
    for (const auto& port : itf.ports) {
      if (port.name.empty()) add("EMPTY_PORT_NAME", where, "port with empty name");
      if (!seen.insert(port.name).second)
        add("DUP_PORT", where, "duplicate port name '" + port.name + "'");
    }
  };
  check_ports(p.outer, "outer interface");
  for (const auto& [bname, itf] : p.boxes) check_ports(itf, "box " + bname);

  std::map<std::pair<std::string, std::string>, int> wire_count;
  for (const auto& w : p.wires) {
    const std::string where =
        w.outer() ? "outer port " + w.port : "box " + w.box + ", port " + w.port;
    const Interface* itf = nullptr;
    if (w.outer()) {
      itf = &p.outer;
    } else {
      auto it = p.boxes.find(w.box);
      if (it == p.boxes.end()) {
        add("UNKNOWN_BOX", where, "wire references undeclared box '" + w.box + "'");
        continue;
      }
      itf = &it->second;
    }
    const PortDecl* port = itf->find(w.port);
    if (!port) {
      add("UNKNOWN_PORT", where, "wire references undeclared port '" + w.port + "'");
      continue;
    }
    auto jit = p.junctions.find(w.junction);
    if (jit == p.junctions.end()) {
      add("UNKNOWN_JUNCTION", where, "wire references undeclared junction '" + w.junction + "'");
      continue;
    }
    if (!(port->quantity == jit->second))
      add("QUANTITY_MISMATCH", where,
          "port quantity " + port->quantity.to_string() + " differs from junction '" +
              w.junction + "' quantity " + jit->second.to_string());
    ++wire_count[{w.box, w.port}];
  }

  for (const auto& [key, n] : wire_count)
    if (n > 1) {
      const auto& [box, port] = key;
      add("DOUBLE_WIRE", box.empty() ? "outer port " + port : "box " + box + ", port " + port,
          "port wired " + std::to_string(n) + " times");
    }

  auto require_wired = [&](const std::string& box, const Interface& itf, const std::string& where) {
    for (const auto& port : itf.ports) {
      if (!wire_count.count({box, port.name}))
        add("UNWIRED_PORT", where + ", port " + port.name, "port is not wired to any junction");
    }
  };
  require_wired("", p.outer, "outer interface");
  for (const auto& [bname, itf] : p.boxes) require_wired(bname, itf, "box " + bname);

  // an outer port must reach at least one inner port through its junction
  for (const auto& w : p.wires) {
    if (!w.outer()) continue;
    bool has_inner = false;
    for (const auto& w2 : p.wires)
      if (!w2.outer() && w2.junction == w.junction) has_inner = true;
    if (!has_inner)
      add("DANGLING_OUTER", "outer port " + w.port,
          "outer port connects to junction '" + w.junction + "' with no inner ports");
  }

  return diags;
}

std::optional<Renaming> interface_equiv(const Interface& a, const Interface& b) {
  using Sig = std::pair<Quantity, PortKind>;
  std::map<Sig, std::vector<std::string>> ga, gb;
  for (const auto& p : a.ports) ga[{p.quantity, p.kind}].push_back(p.name);
  for (const auto& p : b.ports) gb[{p.quantity, p.kind}].push_back(p.name);
  if (ga.size() != gb.size()) return std::nullopt;
  Renaming ren;
  for (auto& [sig, names_a] : ga) {
    auto it = gb.find(sig);
    if (it == gb.end() || it->second.size() != names_a.size()) return std::nullopt;
    std::sort(names_a.begin(), names_a.end());
    std::sort(it->second.begin(), it->second.end());
    for (size_t i = 0; i < names_a.size(); ++i) ren[names_a[i]] = it->second[i];
  }
  return ren;
}

namespace {

// union-find over junction ids; representative = lexicographically smallest.
class JunctionUnion {
public:
  void insert(const std::string& id) { parent_.emplace(id, id); }
  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
  }
  std::string find(const std::string& id) {
    auto it = parent_.find(id);
    if (it == parent_.end()) fail("InternalError", "unknown junction id " + id);
    if (it->second == id) return id;
    std::string root = find(it->second);
    it->second = root;
    return root;
  }

private:
  std::map<std::string, std::string> parent_;
};

}  // namespace

Pattern substitute(const Pattern& outer, const std::string& box, const Pattern& inner,
                   const Renaming& renaming) {
  auto bit = outer.boxes.find(box);
  if (bit == outer.boxes.end())
    fail("InterfaceMismatch", "pattern " + outer.name + " has no box '" + box + "'");

  // check the renaming against the actual interfaces
  auto expected = interface_equiv(inner.outer, bit->second);
  if (!expected)
    fail("InterfaceMismatch", "inner pattern '" + inner.name +
                                  "' outer interface is not equivalent to box '" + box + "'");
  for (const auto& [from, to] : renaming) {
    const PortDecl* pa = inner.outer.find(from);
    const PortDecl* pb = bit->second.find(to);
    if (!pa || !pb || !(pa->quantity == pb->quantity) || pa->kind != pb->kind)
      fail("InterfaceMismatch", "renaming " + from + " -> " + to +
                                    " does not preserve (quantity, kind) for box '" + box + "'");
  }
  if (renaming.size() != inner.outer.ports.size())
    fail("InterfaceMismatch", "renaming does not cover the outer interface of '" + inner.name + "'");

  const auto prefix = box + ".";

  JunctionUnion uf;
  Pattern result;
  result.name = outer.name;
  result.outer = outer.outer;

  for (const auto& [id, q] : outer.junctions) uf.insert(id);
  std::map<std::string, Quantity> all_junctions = outer.junctions;
  for (const auto& [id, q] : inner.junctions) {
    uf.insert(prefix + id);
    all_junctions.emplace(prefix + id, q);
  }

  // merge junctions reached through the substituted box's ports
  for (const auto& [inner_port, box_port] : renaming) {
    auto ji = inner.junction_of_outer(inner_port);
    auto jo = outer.junction_of(box, box_port);
    if (!ji || !jo)
      fail("InterfaceMismatch", "unwired port during substitution of box '" + box + "'");
    uf.unite(prefix + *ji, *jo);
  }

  for (const auto& [bname, itf] : outer.boxes)
    if (bname != box) result.boxes.emplace(bname, itf);
  for (const auto& [bname, itf] : inner.boxes) result.boxes.emplace(prefix + bname, itf);

  for (const auto& w : outer.wires) {
    if (w.box == box) continue;
    result.wires.push_back({w.box, w.port, uf.find(w.junction)});
  }
  for (const auto& w : inner.wires) {
    if (w.outer()) continue;  // became junction merges
    result.wires.push_back({prefix + w.box, w.port, uf.find(prefix + w.junction)});
  }

  for (const auto& [id, q] : all_junctions) {
    const std::string rep = uf.find(id);
    auto [it, inserted] = result.junctions.emplace(rep, q);
    if (!inserted && it->second != q)
      fail("QuantityMismatch", "merged junctions '" + id + "' and '" + rep +
                                   "' carry different quantities");
  }

  result.canonicalize();
  return result;
}

Binding::Item Binding::of(Pattern p, Binding b) {
  return {nullptr, std::make_shared<const Pattern>(std::move(p)),
          std::make_shared<const Binding>(std::move(b))};
}

FlatModel flatten(const Pattern& p, const Binding& b) {
  FlatModel out;
  out.pattern = p;

  // pending: box path in the evolving pattern -> item
  std::map<std::string, Binding::Item> pending;
  for (const auto& [box, item] : b.items) pending.emplace(box, item);

  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const std::string box = it->first;
      const Binding::Item item = it->second;
      if (!out.pattern.boxes.count(box)) {
        fail("IncompleteBinding", "binding references unknown box '" + box + "'");
      }
      if (item.component) {
        out.components.emplace(box, item.component);
        it = pending.erase(it);
        progressed = true;
        continue;
      }
      if (!item.pattern) fail("IncompleteBinding", "box '" + box + "' bound to nothing");
      auto ren = interface_equiv(item.pattern->outer, out.pattern.boxes.at(box));
      if (!ren)
        fail("InterfaceMismatch", "nested pattern '" + item.pattern->name +
                                      "' does not fit box '" + box + "'");
      out.pattern = substitute(out.pattern, box, *item.pattern, *ren);
      it = pending.erase(it);
      if (item.binding) {
        for (const auto& [sub, subitem] : item.binding->items)
          pending.emplace(box + "." + sub, subitem);
      }
      progressed = true;
    }
  }

  for (const auto& [box, itf] : out.pattern.boxes)
    if (!out.components.count(box))
      fail("IncompleteBinding", "box '" + box + "' has no component bound");

  // bound components must fit their boxes
  for (const auto& [box, comp] : out.components) {
    if (!interface_equiv(comp->interface(), out.pattern.boxes.at(box)))
      fail("InterfaceMismatch",
           "component '" + comp->type_name() + "' does not fit box '" + box + "'");
  }

  out.pattern.canonicalize();
  return out;
}

}  // namespace ephs::core
