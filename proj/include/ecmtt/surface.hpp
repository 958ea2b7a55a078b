#pragma once

// Concrete syntax: lexer, recursive-descent parser, desugaring and the
// canonical pretty-printer.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ecmtt/syntax.hpp"

namespace ecmtt {

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string message;
  Span span;

  /// "LINE:COL: error: message"
  std::string render() const;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Right-hand side of `def NAME = ... ;;`.
using Definition = std::variant<Term, Handler, Theory>;

struct NamedDef {
  std::string name;
  Definition value;
  Span span;
};

/// Definitions visible to the parser, spliced at reference sites.
class Definitions {
 public:
  void add(const NamedDef& def);
  const Definition* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const std::vector<NamedDef>& all() const { return defs_; }

 private:
  std::vector<NamedDef> defs_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct SourceFile {
  std::vector<NamedDef> defs;
  Term main;
};

/// Parses a whole source file: zero or more definitions followed by exactly
/// one main term. Throws ParseError.
SourceFile parse(std::string_view text, const Definitions& outer = {});

/// Single-category entry points; the whole input must be consumed.
Term parse_term(std::string_view text, const Definitions& defs = {});
Expr parse_expr(std::string_view text, const Definitions& defs = {});
Comp parse_comp(std::string_view text, const Definitions& defs = {});
Type parse_type(std::string_view text, const Definitions& defs = {});
Theory parse_theory(std::string_view text, const Definitions& defs = {});
Handler parse_handler(std::string_view text, const Definitions& defs = {});

/// One REPL line: a definition, `:t TERM`, `:q`, or a term.
struct ReplInput {
  enum class Kind { Define, TypeOf, Run, Quit, Empty };
  Kind kind = Kind::Empty;
  NamedDef def;
  Term term;
};
ReplInput parse_repl_line(std::string_view text, const Definitions& defs);

/// Removes the surface sugar: bare statements in computation position and
/// `x <- ret e; c`.
Expr desugar(const Expr& e);
Comp desugar(const Comp& c);
Term desugar(const Term& t);
Handler desugar(const Handler& h);

std::string pretty(const Type& t);
std::string pretty(const Theory& t);
std::string pretty(const Expr& e);
std::string pretty(const Comp& c);
std::string pretty(const Stmt& s);
std::string pretty(const Handler& h);
std::string pretty(const HandlingSequence& seq);
std::string pretty(const Term& t);

}  // namespace ecmtt
