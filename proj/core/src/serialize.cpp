#include "ephs/serialize.hpp"

namespace ephs::core {

using components::ArgValue;
using nlohmann::json;

namespace {

json port_to_json(const PortDecl& p) {
  json j;
  j["name"] = p.name;
  j["quantity"] = p.quantity.to_string();
  j["kind"] = (p.kind == PortKind::Power) ? "power" : "state";
  return j;
}

PortDecl port_from_json(const json& j) {
  PortDecl p;
  p.name = j.at("name").get<std::string>();
  auto q = Quantity::from_string(j.at("quantity").get<std::string>());
  if (!q) fail("BadModelFile", "unknown quantity " + j.at("quantity").dump());
  p.quantity = *q;
  p.kind = (j.at("kind").get<std::string>() == "state") ? PortKind::State : PortKind::Power;
  return p;
}

json interface_to_json(const Interface& itf) {
  json j = json::array();
  for (const auto& p : itf.ports) j.push_back(port_to_json(p));
  return j;
}

Interface interface_from_json(const json& j) {
  Interface itf;
  for (const auto& p : j) itf.ports.push_back(port_from_json(p));
  return itf;
}

}  // namespace

json pattern_to_json(const Pattern& p) {
  Pattern q = p;
  q.canonicalize();
  json j;
  j["name"] = q.name;
  j["outer"] = interface_to_json(q.outer);
  j["junctions"] = json::object();
  for (const auto& [id, quantity] : q.junctions) j["junctions"][id] = quantity.to_string();
  j["boxes"] = json::object();
  for (const auto& [name, itf] : q.boxes) j["boxes"][name] = interface_to_json(itf);
  j["wires"] = json::array();
  for (const auto& w : q.wires) {
    json wj;
    if (!w.outer()) wj["box"] = w.box;
    wj["port"] = w.port;
    wj["junction"] = w.junction;
    j["wires"].push_back(wj);
  }
  return j;
}

Pattern pattern_from_json(const json& j) {
  Pattern p;
  p.name = j.at("name").get<std::string>();
  p.outer = interface_from_json(j.at("outer"));
  for (const auto& [id, qs] : j.at("junctions").items()) {
    auto q = Quantity::from_string(qs.get<std::string>());
    if (!q) fail("BadModelFile", "unknown quantity " + qs.dump());
    p.junctions.emplace(id, *q);
  }
  for (const auto& [name, itf] : j.at("boxes").items())
    p.boxes.emplace(name, interface_from_json(itf));
  for (const auto& wj : j.at("wires")) {
    Wire w;
    if (wj.contains("box")) w.box = wj.at("box").get<std::string>();
    w.port = wj.at("port").get<std::string>();
    w.junction = wj.at("junction").get<std::string>();
    p.wires.push_back(w);
  }
  p.canonicalize();
  return p;
}

std::string canonical_pattern_string(const Pattern& p) {
  return pattern_to_json(p).dump(2) + "\n";
}

json args_to_json(const std::map<std::string, ArgValue>& args) {
  json j = json::object();
  for (const auto& [name, a] : args) {
    switch (a.type) {
      case ArgValue::Type::Number:
        j[name] = a.number;
        break;
      case ArgValue::Type::Vector: {
        json v = json::array();
        for (int i = 0; i < a.vector.size(); ++i) v.push_back(a.vector[i]);
        j[name] = v;
        break;
      }
      case ArgValue::Type::Matrix: {
        json rows = json::array();
        for (int r = 0; r < a.matrix.rows(); ++r) {
          json row = json::array();
          for (int c = 0; c < a.matrix.cols(); ++c) row.push_back(a.matrix(r, c));
          rows.push_back(row);
        }
        j[name] = rows;
        break;
      }
      case ArgValue::Type::Ident:
        j[name] = a.ident;
        break;
    }
  }
  return j;
}

std::map<std::string, ArgValue> args_from_json(const json& j) {
  std::map<std::string, ArgValue> args;
  for (const auto& [name, v] : j.items()) {
    if (v.is_number()) {
      args.emplace(name, ArgValue::num(v.get<double>()));
    } else if (v.is_string()) {
      args.emplace(name, ArgValue::id(v.get<std::string>()));
    } else if (v.is_array() && !v.empty() && v.front().is_array()) {
      Eigen::MatrixXd m(v.size(), v.front().size());
      for (size_t r = 0; r < v.size(); ++r)
        for (size_t c = 0; c < v[r].size(); ++c) m(r, c) = v[r][c].get<double>();
      args.emplace(name, ArgValue::mat(m));
    } else if (v.is_array()) {
      Eigen::VectorXd vec(v.size());
      for (size_t i = 0; i < v.size(); ++i) vec[i] = v[i].get<double>();
      args.emplace(name, ArgValue::vec(vec));
    } else {
      fail("BadModelFile", "unsupported argument value for '" + name + "'");
    }
  }
  return args;
}

json flat_model_to_json(const FlatModel& m) {
  json j;
  j["pattern"] = pattern_to_json(m.pattern);
  j["components"] = json::object();
  for (const auto& [box, comp] : m.components) {
    const auto* ci = dynamic_cast<const components::ComponentInstance*>(comp.get());
    json cj;
    cj["ctor"] = comp->type_name();
    cj["args"] = ci ? args_to_json(ci->args()) : json::object();
    j["components"][box] = cj;
  }
  return j;
}

}  // namespace ephs::core
