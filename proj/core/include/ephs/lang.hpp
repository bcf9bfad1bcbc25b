#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ephs/components.hpp"
#include "ephs/pattern.hpp"

namespace ephs::lang {

struct SourcePos {
  int line = 1;
  int col = 1;
};

struct LangDiagnostic {
  SourcePos pos;
  std::string message;
  std::string expected;  // comma-separated expected-token set, may be empty

  std::string to_string() const;
};

/// Parsed textual model: pattern declarations plus bindings with parameter
/// literals. The root pattern is the last one declared (or the "root" field
/// of a JSON model file).
struct ParsedModel {
  std::vector<core::Pattern> patterns;
  std::string root;

  struct Bind {
    std::string path;
    bool is_pattern = false;
    std::string target;  // ctor name or pattern name
    std::map<std::string, components::ArgValue> args;
  };
  std::vector<Bind> binds;

  const core::Pattern* find_pattern(const std::string& name) const;
};

struct ParseResult {
  std::optional<ParsedModel> model;
  std::vector<LangDiagnostic> diagnostics;
  bool ok() const { return model.has_value() && diagnostics.empty(); }
};

/// Parses `.ephs` text. Never throws on malformed input: returns diagnostics.
ParseResult parse(const std::string& text);

/// Reads a model file; `.json` selects the JSON form of the same AST,
/// anything else the textual grammar. `include "file"` pulls the pattern
/// declarations (not the bindings) of the referenced file.
ParseResult parse_file(const std::string& path);

/// Deterministic rendering: junctions/boxes/wires sorted, binds sorted by
/// path, 17-significant-digit numbers. parse(serialize(m)) == canonical m.
std::string serialize(const ParsedModel& m);

std::string model_to_json_string(const ParsedModel& m);
ParseResult parse_json(const std::string& text);

/// Resolves the parsed bindings into core structures for the root pattern.
struct BuildResult {
  core::Pattern root;
  core::Binding binding;
};
BuildResult to_model(const ParsedModel& m);

/// Inverse direction: renders a pattern/binding pair (possibly nested) as a
/// parsed model, for serialization.
ParsedModel to_parsed(const core::Pattern& root, const core::Binding& binding);

}  // namespace ephs::lang
