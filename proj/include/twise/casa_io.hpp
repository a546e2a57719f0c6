#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twise/cnf.hpp"
#include "twise/error.hpp"

namespace twise {

/// The three-line array-properties file: strength, feature count, levels.
struct ModelFileInfo {
  int strength = 0;
  int num_features = 0;
  std::vector<int> levels;
};

namespace detail {

inline std::vector<std::string> nonblank_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline int parse_int(const std::string& tok, int lineno, const char* what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("expected ") + what + ", got '" + tok + "'", lineno);
  }
}

} // namespace detail

inline ModelFileInfo parse_model_file(const std::string& text) {
  auto lines = detail::nonblank_lines(text);
  if (lines.size() != 3)
    throw ParseError("model file must have exactly 3 lines (strength, features, levels), got " +
                         std::to_string(lines.size()),
                     1);
  ModelFileInfo info;
  info.strength = detail::parse_int(lines[0], 1, "strength");
  info.num_features = detail::parse_int(lines[1], 2, "feature count");
  if (info.strength < 1) throw ParseError("strength must be >= 1", 1);
  if (info.num_features < 1) throw ParseError("feature count must be >= 1", 2);
  std::istringstream ls(lines[2]);
  std::string tok;
  while (ls >> tok) info.levels.push_back(detail::parse_int(tok, 3, "level count"));
  if (static_cast<int>(info.levels.size()) != info.num_features)
    throw ParseError("expected " + std::to_string(info.num_features) + " level counts, got " +
                         std::to_string(info.levels.size()),
                     3);
  for (int lv : info.levels)
    if (lv != 2)
      throw ParseError("level " + std::to_string(lv) +
                           " is not supported: features are binary, the only valid "
                           "number of possible values is 2",
                       3);
  return info;
}

inline std::string write_model_file(int strength, int num_features) {
  std::ostringstream out;
  out << strength << "\n" << num_features << "\n";
  for (int i = 0; i < num_features; ++i) out << (i ? " " : "") << 2;
  out << "\n";
  return out.str();
}

// Constraints file: line 1 = clause count, then one clause per line as
// sign-mandatory terms ("+0", "-14 -16"). A sign may be separated from its
// value ("- 14 - 16" parses the same).
inline CnfFormula parse_constraints_file(const std::string& text, int num_features) {
  auto lines = detail::nonblank_lines(text);
  if (lines.empty()) throw ParseError("constraints file is empty", 1);
  int count = detail::parse_int(lines[0], 1, "clause count");
  if (count < 0) throw ParseError("negative clause count", 1);
  if (static_cast<int>(lines.size()) != count + 1)
    throw ParseError("clause count " + std::to_string(count) + " does not match " +
                         std::to_string(lines.size() - 1) + " clause lines",
                     1);
  CnfFormula cnf(num_features);
  for (int i = 0; i < count; ++i) {
    const std::string& line = lines[i + 1];
    int lineno = i + 2;
    std::istringstream ls(line);
    std::string tok;
    std::vector<Literal> lits;
    while (ls >> tok) {
      bool negated;
      std::string digits;
      if (tok == "+" || tok == "-") {
        negated = tok == "-";
        if (!(ls >> digits)) throw ParseError("dangling sign", lineno);
      } else if (tok[0] == '+' || tok[0] == '-') {
        negated = tok[0] == '-';
        digits = tok.substr(1);
      } else {
        throw ParseError("term '" + tok + "' is missing its sign", lineno);
      }
      Value v = detail::parse_int(digits, lineno, "value");
      if (v < 0 || v >= 2 * num_features)
        throw ParseError("value " + std::to_string(v) + " out of range 0.." +
                             std::to_string(2 * num_features - 1),
                         lineno);
      lits.push_back(Literal{v, negated});
    }
    if (lits.empty()) throw ParseError("clause without terms", lineno);
    cnf.add_clause(Clause(lits));
  }
  return cnf;
}

inline std::string write_constraints_file(const CnfFormula& cnf) {
  auto payload = cnf.payload_clauses();
  std::ostringstream out;
  out << payload.size() << "\n";
  for (const Clause& c : payload) {
    for (std::size_t i = 0; i < c.lits.size(); ++i)
      out << (i ? " " : "") << (c.lits[i].negated ? '-' : '+') << c.lits[i].value;
    out << "\n";
  }
  return out.str();
}

// Array file: line 1 = row count, then one row per line as space-separated
// ascending values.
inline std::vector<std::vector<Value>> parse_array_file(const std::string& text) {
  auto lines = detail::nonblank_lines(text);
  if (lines.empty()) throw ParseError("array file is empty", 1);
  int count = detail::parse_int(lines[0], 1, "row count");
  if (count < 0) throw ParseError("negative row count", 1);
  if (static_cast<int>(lines.size()) != count + 1)
    throw ParseError("row count " + std::to_string(count) + " does not match " +
                         std::to_string(lines.size() - 1) + " row lines",
                     1);
  std::vector<std::vector<Value>> rows;
  for (int i = 0; i < count; ++i) {
    std::istringstream ls(lines[i + 1]);
    std::vector<Value> row;
    std::string tok;
    while (ls >> tok) row.push_back(detail::parse_int(tok, i + 2, "value"));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string write_array_file(const std::vector<std::vector<Value>>& rows) {
  std::ostringstream out;
  out << rows.size() << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << "\n";
  }
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

} // namespace twise
