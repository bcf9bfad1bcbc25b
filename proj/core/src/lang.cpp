#include "ephs/lang.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ephs/serialize.hpp"

namespace ephs::lang {

using components::ArgValue;
using core::Interface;
using core::Pattern;
using core::PortDecl;
using core::PortKind;
using core::Quantity;
using core::Wire;

std::string LangDiagnostic::to_string() const {
  std::string s = std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + message;
  if (!expected.empty()) s += " (expected: " + expected + ")";
  return s;
}

const core::Pattern* ParsedModel::find_pattern(const std::string& name) const {
  for (const auto& p : patterns)
    if (p.name == name) return &p;
  return nullptr;
}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  SourcePos pos;
};

class Lexer {
public:
  explicit Lexer(const std::string& text) : s_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.pos = pos_;
    if (i_ >= s_.size()) {
      t.kind = Tok::End;
      return t;
    }
    const char c = s_[i_];
    if (std::isalpha((unsigned char)c) || c == '_') {
      size_t start = i_;
      while (i_ < s_.size() &&
             (std::isalnum((unsigned char)s_[i_]) || s_[i_] == '_' || s_[i_] == '.')) {
        // a path ident may contain dots between name segments
        if (s_[i_] == '.' &&
            !(i_ + 1 < s_.size() &&
              (std::isalpha((unsigned char)s_[i_ + 1]) || s_[i_ + 1] == '_')))
          break;
        advance();
      }
      t.kind = Tok::Ident;
      t.text = s_.substr(start, i_ - start);
      return t;
    }
    if (c == '-' && i_ + 1 < s_.size() && s_[i_ + 1] == '>') {
      advance();
      advance();
      t.kind = Tok::Punct;
      t.text = "->";
      return t;
    }
    if (std::isdigit((unsigned char)c) || c == '-' || c == '+' ||
        (c == '.' && i_ + 1 < s_.size() && std::isdigit((unsigned char)s_[i_ + 1]))) {
      size_t start = i_;
      if (c == '-' || c == '+') advance();
      bool any = false;
      while (i_ < s_.size() && (std::isdigit((unsigned char)s_[i_]) || s_[i_] == '.')) {
        any = any || std::isdigit((unsigned char)s_[i_]);
        advance();
      }
      if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
        advance();
        if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) advance();
        while (i_ < s_.size() && std::isdigit((unsigned char)s_[i_])) advance();
      }
      t.text = s_.substr(start, i_ - start);
      if (!any) {  // a lone '-' or '+': treat as punctuation
        t.kind = Tok::Punct;
        return t;
      }
      t.kind = Tok::Number;
      t.number = std::strtod(t.text.c_str(), nullptr);
      return t;
    }
    if (c == '"') {
      advance();
      size_t start = i_;
      while (i_ < s_.size() && s_[i_] != '"' && s_[i_] != '\n') advance();
      t.kind = Tok::String;
      t.text = s_.substr(start, i_ - start);
      if (i_ < s_.size() && s_[i_] == '"') advance();
      return t;
    }
    advance();
    t.kind = Tok::Punct;
    t.text = std::string(1, c);
    return t;
  }

private:
  void skip_ws() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '/') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else if (std::isspace((unsigned char)c)) {
        advance();
      } else {
        break;
      }
    }
  }
  void advance() {
    if (i_ < s_.size()) {
      if (s_[i_] == '\n') {
        ++pos_.line;
        pos_.col = 1;
      } else {
        ++pos_.col;
      }
      ++i_;
    }
  }

  const std::string& s_;
  size_t i_ = 0;
  SourcePos pos_;
};

// ---------------------------------------------------------------------------
// recursive-descent parser
// ---------------------------------------------------------------------------

struct ParseError {};  // unwinds to parse(); details already recorded

class Parser {
public:
  Parser(const std::string& text, std::vector<LangDiagnostic>& diags)
      : lex_(text), diags_(diags) {
    cur_ = lex_.next();
  }

  ParsedModel model() {
    ParsedModel m;
    while (cur_.kind != Tok::End) {
      if (is_ident("pattern")) {
        m.patterns.push_back(pattern());
      } else if (is_ident("bind")) {
        m.binds.push_back(bind());
      } else if (is_ident("include")) {
        bump();
        Token t = expect(Tok::String, "\"file\"");
        includes_.push_back(t.text);
      } else {
        error("top-level declaration", "pattern, bind, include");
      }
    }
    if (!m.patterns.empty()) m.root = m.patterns.back().name;
    return m;
  }

  const std::vector<std::string>& includes() const { return includes_; }

private:
  bool is_ident(const char* kw) const { return cur_.kind == Tok::Ident && cur_.text == kw; }
  bool is_punct(const char* p) const { return cur_.kind == Tok::Punct && cur_.text == p; }
  void bump() { cur_ = lex_.next(); }

  [[noreturn]] void error(const std::string& what, const std::string& expected) {
    LangDiagnostic d;
    d.pos = cur_.pos;
    d.message = "unexpected " +
                (cur_.kind == Tok::End ? std::string("end of input")
                                       : "'" + cur_.text + "'") +
                " while parsing " + what;
    d.expected = expected;
    diags_.push_back(std::move(d));
    throw ParseError{};
  }

  [[noreturn]] void error_at(SourcePos pos, const std::string& message,
                             const std::string& expected) {
    diags_.push_back({pos, message, expected});
    throw ParseError{};
  }

  Token expect(Tok kind, const std::string& expected) {
    if (cur_.kind != kind) error("token", expected);
    Token t = cur_;
    bump();
    return t;
  }
  void expect_punct(const char* p) {
    if (!is_punct(p)) error("token", std::string("'") + p + "'");
    bump();
  }
  void expect_keyword(const char* kw) {
    if (!is_ident(kw)) error("keyword", kw);
    bump();
  }

  Quantity quantity() {
    Token t = expect(Tok::Ident, "displacement, momentum, pose, relative_pose, entropy");
    if (t.text == "displacement") return Quantity::displacement();
    if (t.text == "pose") return Quantity::pose();
    if (t.text == "entropy") return Quantity::entropy();
    if (t.text == "momentum") {
      if (is_punct("<")) {
        bump();
        Token g = expect(Tok::Ident, "g");
        if (g.text != "g") error("momentum space", "g*");
        expect_punct("*");
        expect_punct(">");
        return Quantity::momentum_gstar();
      }
      return Quantity::momentum();
    }
    if (t.text == "relative_pose") {
      expect_punct("<");
      Token jt = expect(Tok::Ident, "spherical, planar, cylindrical, revolute, prismatic, screw");
      auto j = core::joint_type_from_string(jt.text);
      if (!j) error("joint type", "spherical, planar, cylindrical, revolute, prismatic, screw");
      expect_punct(">");
      return Quantity::relative_pose(*j);
    }
    error("quantity", "displacement, momentum, momentum<g*>, pose, relative_pose<...>, entropy");
  }

  Interface portlist() {
    Interface itf;
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        PortDecl pd;
        pd.name = expect(Tok::Ident, "port name").text;
        expect_punct(":");
        pd.quantity = quantity();
        pd.kind = PortKind::Power;
        if (is_punct(":")) {
          bump();
          expect_keyword("state");
          pd.kind = PortKind::State;
        }
        itf.ports.push_back(std::move(pd));
        if (is_punct(",")) {
          bump();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    return itf;
  }

  Pattern pattern() {
    expect_keyword("pattern");
    Pattern p;
    p.name = expect(Tok::Ident, "pattern name").text;
    expect_punct("{");
    if (is_ident("outer")) {
      bump();
      p.outer = portlist();
    }
    while (is_ident("junction")) {
      bump();
      const std::string id = expect(Tok::Ident, "junction name").text;
      expect_punct(":");
      if (!p.junctions.emplace(id, quantity()).second)
        error("junction '" + id + "' (already declared)", "unique junction name");
    }
    while (is_ident("box")) {
      bump();
      const std::string name = expect(Tok::Ident, "box name").text;
      Interface itf = portlist();
      if (!p.boxes.emplace(name, std::move(itf)).second)
        error("box '" + name + "' (already declared)", "unique box name");
    }
    while (is_ident("wire")) {
      bump();
      const Token ref_tok = cur_;
      const std::string ref = expect(Tok::Ident, "port reference").text;
      expect_punct("->");
      const Token junc_tok = cur_;
      const std::string junction = expect(Tok::Ident, "junction name").text;
      Wire w;
      const auto dot = ref.rfind('.');
      if (dot == std::string::npos) {
        w.port = ref;  // outer port
        if (!p.outer.find(w.port))
          error_at(ref_tok.pos, "UNKNOWN_PORT: '" + ref + "' is not an outer port of '" +
                                    p.name + "'",
                   "a declared outer port or box.port");
      } else {
        w.box = ref.substr(0, dot);
        w.port = ref.substr(dot + 1);
        auto bit = p.boxes.find(w.box);
        if (bit == p.boxes.end())
          error_at(ref_tok.pos, "UNKNOWN_BOX: '" + w.box + "' is not a box of '" + p.name + "'",
                   "a declared box name");
        if (!bit->second.find(w.port))
          error_at(ref_tok.pos,
                   "UNKNOWN_PORT: box '" + w.box + "' has no port '" + w.port + "'",
                   "a declared port of the box");
      }
      if (!p.junctions.count(junction))
        error_at(junc_tok.pos,
                 "UNKNOWN_JUNCTION: '" + junction + "' is not declared in '" + p.name + "'",
                 "a declared junction name");
      w.junction = junction;
      p.wires.push_back(std::move(w));
    }
    expect_punct("}");
    p.canonicalize();
    return p;
  }

  ArgValue arg_value() {
    if (cur_.kind == Tok::Number) {
      const double v = cur_.number;
      bump();
      return ArgValue::num(v);
    }
    if (is_punct("(")) {
      bump();
      std::vector<double> vals;
      while (true) {
        vals.push_back(expect(Tok::Number, "number").number);
        if (is_punct(",")) {
          bump();
          continue;
        }
        break;
      }
      expect_punct(")");
      Eigen::VectorXd v(vals.size());
      for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
      return ArgValue::vec(v);
    }
    if (cur_.kind == Tok::Ident) {
      const std::string name = cur_.text;
      bump();
      if (!is_punct("(")) return ArgValue::id(name);
      bump();
      std::vector<double> vals;
      if (!is_punct(")")) {
        while (true) {
          vals.push_back(expect(Tok::Number, "number").number);
          if (is_punct(",")) {
            bump();
            continue;
          }
          break;
        }
      }
      expect_punct(")");
      if (name == "diag") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(vals.size(), vals.size());
        for (size_t i = 0; i < vals.size(); ++i) m((int)i, (int)i) = vals[i];
        return ArgValue::mat(m);
      }
      if (name == "sym") {
        // upper triangle, row-wise: n(n+1)/2 entries
        int n = 0;
        while (n * (n + 1) / 2 < (int)vals.size()) ++n;
        if (n * (n + 1) / 2 != (int)vals.size())
          error("sym(...) entry count", "n(n+1)/2 numbers");
        Eigen::MatrixXd m(n, n);
        int k = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            m(i, j) = vals[k];
            m(j, i) = vals[k];
            ++k;
          }
        return ArgValue::mat(m);
      }
      error("argument value '" + name + "'", "diag(...), sym(...), or an identifier");
    }
    error("argument value", "number, (vector), diag(...), sym(...), identifier");
  }

  ParsedModel::Bind bind() {
    expect_keyword("bind");
    ParsedModel::Bind b;
    b.path = expect(Tok::Ident, "box path").text;
    expect_punct("=");
    if (is_ident("pattern")) {
      bump();
      b.is_pattern = true;
      b.target = expect(Tok::Ident, "pattern name").text;
      return b;
    }
    b.target = expect(Tok::Ident, "component constructor").text;
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        const std::string key = expect(Tok::Ident, "argument name").text;
        expect_punct("=");
        b.args.emplace(key, arg_value());
        if (is_punct(",")) {
          bump();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    return b;
  }

  Lexer lex_;
  Token cur_;
  std::vector<LangDiagnostic>& diags_;
  std::vector<std::string> includes_;
};

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_arg(const ArgValue& a) {
  switch (a.type) {
    case ArgValue::Type::Number:
      return format_number(a.number);
    case ArgValue::Type::Ident:
      return a.ident;
    case ArgValue::Type::Vector: {
      std::string s = "(";
      for (int i = 0; i < a.vector.size(); ++i)
        s += (i ? ", " : "") + format_number(a.vector[i]);
      return s + ")";
    }
    case ArgValue::Type::Matrix: {
      const auto& m = a.matrix;
      bool diagonal = true;
      for (int i = 0; i < m.rows() && diagonal; ++i)
        for (int j = 0; j < m.cols(); ++j)
          if (i != j && m(i, j) != 0.0) {
            diagonal = false;
            break;
          }
      std::string s;
      if (diagonal) {
        s = "diag(";
        for (int i = 0; i < m.rows(); ++i) s += (i ? ", " : "") + format_number(m(i, i));
      } else {
        s = "sym(";
        bool first = true;
        for (int i = 0; i < m.rows(); ++i)
          for (int j = i; j < m.cols(); ++j) {
            s += (first ? "" : ", ") + format_number(m(i, j));
            first = false;
          }
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace

ParseResult parse(const std::string& text) {
  ParseResult out;
  Parser p(text, out.diagnostics);
  try {
    ParsedModel m = p.model();
    if (!p.includes().empty()) {
      LangDiagnostic d;
      d.message = "include is only available through parse_file";
      out.diagnostics.push_back(std::move(d));
      return out;
    }
    if (out.diagnostics.empty()) out.model = std::move(m);
  } catch (const ParseError&) {
    // diagnostics already recorded
  }
  return out;
}

namespace {

ParseResult parse_file_impl(const std::string& path, std::set<std::string>& seen);

ParseResult parse_text_with_includes(const std::string& text, const std::string& dir,
                                     std::set<std::string>& seen) {
  ParseResult out;
  Parser p(text, out.diagnostics);
  try {
    ParsedModel m = p.model();
    // includes pull pattern declarations of the referenced files
    std::vector<core::Pattern> included;
    for (const auto& inc : p.includes()) {
      const std::string full =
          (std::filesystem::path(dir) / inc).lexically_normal().string();
      if (!seen.insert(full).second) continue;  // already included
      ParseResult sub = parse_file_impl(full, seen);
      if (!sub.model) {
        for (auto& d : sub.diagnostics) {
          d.message = inc + ": " + d.message;
          out.diagnostics.push_back(std::move(d));
        }
        return out;
      }
      for (auto& pat : sub.model->patterns) included.push_back(std::move(pat));
    }
    m.patterns.insert(m.patterns.begin(), included.begin(), included.end());
    if (!m.patterns.empty() && m.root.empty()) m.root = m.patterns.back().name;
    if (out.diagnostics.empty()) out.model = std::move(m);
  } catch (const ParseError&) {
  }
  return out;
}

ParseResult parse_file_impl(const std::string& path, std::set<std::string>& seen) {
  std::ifstream in(path);
  if (!in) {
    ParseResult out;
    LangDiagnostic d;
    d.message = "cannot open file '" + path + "'";
    out.diagnostics.push_back(std::move(d));
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  if (std::filesystem::path(path).extension() == ".json") return parse_json(ss.str());
  return parse_text_with_includes(ss.str(), dir, seen);
}

}  // namespace

ParseResult parse_file(const std::string& path) {
  std::set<std::string> seen{std::filesystem::path(path).lexically_normal().string()};
  return parse_file_impl(path, seen);
}

std::string serialize(const ParsedModel& m) {
  std::ostringstream os;
  bool first = true;
  for (const auto& pat : m.patterns) {
    Pattern p = pat;
    p.canonicalize();
    if (!first) os << "\n";
    first = false;
    os << "pattern " << p.name << " {\n";
    auto ports = [&](const Interface& itf) {
      std::string s = "(";
      for (size_t i = 0; i < itf.ports.size(); ++i) {
        const auto& pd = itf.ports[i];
        s += (i ? ", " : "") + pd.name + ": " + pd.quantity.to_string();
        if (pd.kind == PortKind::State) s += ":state";
      }
      return s + ")";
    };
    if (!p.outer.ports.empty()) os << "  outer " << ports(p.outer) << "\n";
    for (const auto& [id, q] : p.junctions)
      os << "  junction " << id << ": " << q.to_string() << "\n";
    for (const auto& [name, itf] : p.boxes) os << "  box " << name << " " << ports(itf) << "\n";
    for (const auto& w : p.wires) {
      os << "  wire ";
      if (w.outer())
        os << w.port;
      else
        os << w.box << "." << w.port;
      os << " -> " << w.junction << "\n";
    }
    os << "}\n";
  }
  std::vector<ParsedModel::Bind> binds = m.binds;
  std::sort(binds.begin(), binds.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  if (!binds.empty() && !m.patterns.empty()) os << "\n";
  for (const auto& b : binds) {
    os << "bind " << b.path << " = ";
    if (b.is_pattern) {
      os << "pattern " << b.target << "\n";
      continue;
    }
    os << b.target << "(";
    bool f = true;
    for (const auto& [k, v] : b.args) {
      os << (f ? "" : ", ") << k << "=" << format_arg(v);
      f = false;
    }
    os << ")\n";
  }
  return os.str();
}

std::string model_to_json_string(const ParsedModel& m) {
  nlohmann::json j;
  j["patterns"] = nlohmann::json::array();
  for (const auto& p : m.patterns) j["patterns"].push_back(core::pattern_to_json(p));
  j["root"] = m.root;
  j["bindings"] = nlohmann::json::object();
  for (const auto& b : m.binds) {
    nlohmann::json bj;
    if (b.is_pattern) {
      bj["pattern"] = b.target;
    } else {
      bj["ctor"] = b.target;
      bj["args"] = core::args_to_json(b.args);
    }
    j["bindings"][b.path] = bj;
  }
  return j.dump(2) + "\n";
}

ParseResult parse_json(const std::string& text) {
  ParseResult out;
  try {
    const auto j = nlohmann::json::parse(text);
    ParsedModel m;
    for (const auto& pj : j.at("patterns")) m.patterns.push_back(core::pattern_from_json(pj));
    m.root = j.value("root", m.patterns.empty() ? "" : m.patterns.back().name);
    if (j.contains("bindings")) {
      for (const auto& [path, bj] : j.at("bindings").items()) {
        ParsedModel::Bind b;
        b.path = path;
        if (bj.contains("pattern")) {
          b.is_pattern = true;
          b.target = bj.at("pattern").get<std::string>();
        } else {
          b.target = bj.at("ctor").get<std::string>();
          if (bj.contains("args")) b.args = core::args_from_json(bj.at("args"));
        }
        m.binds.push_back(std::move(b));
      }
    }
    out.model = std::move(m);
  } catch (const std::exception& e) {
    LangDiagnostic d;
    d.message = std::string("JSON model error: ") + e.what();
    out.diagnostics.push_back(std::move(d));
  }
  return out;
}

namespace {

// Binding paths resolve against the pattern's actual boxes first (flattened
// patterns have dotted box names); anything longer is a nested path rooted at
// the first segment that names a box bound to a sub-pattern.
core::Binding build_binding(const ParsedModel& m, const core::Pattern& pattern,
                            const std::string& prefix,
                            const std::vector<const ParsedModel::Bind*>& binds) {
  core::Binding out;
  std::map<std::string, std::vector<const ParsedModel::Bind*>> deeper;
  std::map<std::string, const ParsedModel::Bind*> direct;
  for (const auto* b : binds) {
    if (pattern.boxes.count(b->path)) {
      direct[b->path] = b;
      continue;
    }
    const auto dot = b->path.find('.');
    if (dot == std::string::npos) {
      fail("BadModelFile",
           "bind " + prefix + b->path + ": pattern '" + pattern.name + "' has no such box");
    }
    deeper[b->path.substr(0, dot)].push_back(b);
  }
  for (const auto& [box, b] : direct) {
    if (b->is_pattern) {
      const core::Pattern* pat = m.find_pattern(b->target);
      if (!pat)
        fail("BadModelFile", "bind " + prefix + box + ": unknown pattern '" + b->target + "'");
      std::vector<ParsedModel::Bind> stripped;
      auto it = deeper.find(box);
      if (it != deeper.end()) {
        for (const auto* d : it->second) {
          ParsedModel::Bind s = *d;
          s.path = d->path.substr(box.size() + 1);
          stripped.push_back(std::move(s));
        }
      }
      std::vector<const ParsedModel::Bind*> subp;
      for (const auto& s : stripped) subp.push_back(&s);
      out.items[box] =
          core::Binding::of(*pat, build_binding(m, *pat, prefix + box + ".", subp));
      deeper.erase(box);
    } else {
      try {
        out.items[box] = core::Binding::of(components::make_from_args(b->target, b->args));
      } catch (const Error& e) {
        fail(e.code(), std::string(e.what()) + " (bind " + prefix + box + ")");
      }
    }
  }
  for (const auto& [box, list] : deeper) {
    if (!direct.count(box))
      fail("BadModelFile", "bindings under '" + prefix + box +
                               ".' have no pattern bind for '" + prefix + box + "'");
  }
  return out;
}

}  // namespace

BuildResult to_model(const ParsedModel& m) {
  if (m.patterns.empty()) fail("BadModelFile", "model declares no pattern");
  const core::Pattern* root = m.find_pattern(m.root);
  if (!root) fail("BadModelFile", "root pattern '" + m.root + "' not found");
  std::vector<const ParsedModel::Bind*> binds;
  for (const auto& b : m.binds) binds.push_back(&b);
  return {*root, build_binding(m, *root, "", binds)};
}

namespace {

void collect(ParsedModel& out, const std::string& prefix, const core::Binding& binding) {
  for (const auto& [box, item] : binding.items) {
    ParsedModel::Bind b;
    b.path = prefix + box;
    if (item.pattern) {
      b.is_pattern = true;
      b.target = item.pattern->name;
      out.binds.push_back(std::move(b));
      if (!out.find_pattern(item.pattern->name)) {
        // nested patterns go in front of the pattern that uses them
        out.patterns.insert(out.patterns.begin(), *item.pattern);
      }
      if (item.binding) collect(out, prefix + box + ".", *item.binding);
    } else if (item.component) {
      const auto* ci = dynamic_cast<const components::ComponentInstance*>(item.component.get());
      if (!ci) fail("BadModelFile", "box '" + b.path + "' holds a non-catalog component");
      b.target = ci->type_name();
      b.args = ci->args();
      out.binds.push_back(std::move(b));
    }
  }
}

}  // namespace

ParsedModel to_parsed(const core::Pattern& root, const core::Binding& binding) {
  ParsedModel out;
  out.patterns.push_back(root);
  out.root = root.name;
  collect(out, "", binding);
  return out;
}

}  // namespace ephs::lang
