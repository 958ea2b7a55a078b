#pragma once

// Synthesis-mode checker for the six judgment forms: expressions,
// computations, statements, handlers, handling sequences and whole programs.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ecmtt/syntax.hpp"

namespace ecmtt {

enum class ErrorKind {
  UnboundVariable,
  OpNotInContext,
  TheoryMismatch,
  NotAFunction,
  NotABox,
  ClauseCoverage,
  StateTypeMismatch,
  BottomIntroduction,
  ArgumentMismatch,
};

/// "unbound-variable", "op-not-in-context", ...
std::string_view kind_name(ErrorKind kind);

class TypeError : public std::runtime_error {
 public:
  TypeError(ErrorKind kind, std::string expected, std::string found, std::string message,
            Span span, std::string judgment);

  ErrorKind kind() const { return kind_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  const std::string& message() const { return message_; }
  const Span& span() const { return span_; }
  /// Which judgment form was being derived: "expression", "computation", ...
  const std::string& judgment() const { return judgment_; }

  /// "LINE:COL: KIND: expected TYPE, found TYPE" (or ": message" when the
  /// error is not a type comparison).
  std::string render() const;

 private:
  ErrorKind kind_;
  std::string expected_;
  std::string found_;
  std::string message_;
  Span span_;
  std::string judgment_;
};

/// A ⇒ Ψ | S ⇛ C
struct HandlerSig {
  Type in;
  Theory theory;
  Type state;
  Type out;
};

/// bot is below every type; products, lists and box bodies are covariant,
/// arrows are contravariant in the domain. Box theories must be equal.
bool is_subtype(const Type& a, const Type& b);

/// Least upper bound under is_subtype; nullopt when the shapes clash.
std::optional<Type> join(const Type& a, const Type& b);

Type infer_expr(const ModalContext& delta, const Expr& e);
Type infer_comp(const ModalContext& delta, const EffectContext& gamma, const Comp& c);
Type infer_stmt(const ModalContext& delta, const EffectContext& gamma, const Stmt& s);
HandlerSig check_handler(const ModalContext& delta, const EffectContext& gamma, const Handler& h,
                         const Type& in, const Type& state);
Type infer_hseq(const ModalContext& delta, const Theory& ambient, const HandlingSequence& theta,
                const Type& in, const Theory& source);

/// Closed program: empty modal context, empty effect context.
Type infer_term(const Term& t);

}  // namespace ecmtt
