#pragma once

// Subsidiary operations: expression substitution, monadic substitution,
// continuation substitution, handling, handling sequencing, modal
// substitution, the eval meta-operation and the identity handler.
//
// All operations are capture-avoiding: a binder is renamed (stem plus the
// smallest free integer suffix) when it would capture a free name of the
// substituted payload. Sugar nodes (bare statements, `x <- ret e`) must be
// removed with desugar() first.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "ecmtt/syntax.hpp"

namespace ecmtt {

/// Raised on conditions that well-typed input never reaches: a missing
/// handler clause, an operation in eval position.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A single substitution visited more nodes than SubstOptions::fuel allows.
/// Multi-shot handlers copy their continuation once per resumption, so this
/// is a resource limit rather than a defect in the term.
class SubstFuelExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recorded when modal substitution meets a Handle statement on its target
/// variable. Together these fields describe the contractum
/// <<handle(handleseq(payload, seq), handler, init) / x>> cont.
struct ModalHandleEvent {
  Theory theory;
  Comp payload;
  HandlingSequence seq;
  Handler handler;
  Expr init;
  std::string x;
  Comp cont;
};

/// Recorded at every step of the handle(c, h, state) recursion.
struct HandleCall {
  Comp comp;
  Handler handler;
  Expr state;
};

struct SubstOptions {
  std::uint64_t fuel = 1'000'000;
  /// Eagerly contract pure built-in redexes at rebuilt nodes.
  bool normalize = true;
  std::function<void(const ModalHandleEvent&)> observer;
  std::function<void(const HandleCall&)> handle_observer;
};

class SubstEngine {
 public:
  explicit SubstEngine(SubstOptions options = {});

  /// [e/x]target
  Expr subst_expr(const Expr& target, const Expr& e, const std::string& x);
  Comp subst_expr(const Comp& target, const Expr& e, const std::string& x);
  Stmt subst_expr(const Stmt& target, const Expr& e, const std::string& x);
  Handler subst_expr(const Handler& target, const Expr& e, const std::string& x);

  /// <<c/x>>cont
  Comp subst_monadic(const Comp& c, const std::string& x, const Comp& cont);

  /// <<(bx,by).body/k>>target
  Comp subst_cont(const Comp& target, const std::string& bx, const std::string& by,
                  const Comp& body, const std::string& k);
  Handler subst_cont(const Handler& target, const std::string& bx, const std::string& by,
                     const Comp& body, const std::string& k);

  /// handle(c, h, state)
  Comp handle_with(const Comp& c, const Handler& h, const Expr& state);

  /// handleseq(c, theta)
  Comp handle_seq(const Comp& c, const HandlingSequence& theta);

  /// [[theory.c/u]]target
  Expr modal_subst(const Expr& target, const Theory& theory, const Comp& c, const std::string& u);
  Comp modal_subst(const Comp& target, const Theory& theory, const Comp& c, const std::string& u);
  Handler modal_subst(const Handler& target, const Theory& theory, const Comp& c,
                      const std::string& u);
  HandlingSequence modal_subst(const HandlingSequence& target, const Theory& theory, const Comp& c,
                               const std::string& u);

  /// (| c |)
  Expr eval_meta(const Comp& c);

  /// Contracts a pure built-in redex at the root of `e`, if there is one.
  Expr normalize_root(const Expr& e) const;
  Comp normalize_root(const Comp& c) const;

  /// Fuel consumed by the most recent operation; each public call starts
  /// with a full budget.
  std::uint64_t fuel_used() const { return used_; }

 private:
  SubstOptions options_;
  std::uint64_t used_ = 0;
};

/// handler for theory { op(x;k;z) -> y <- op(x); k(y;z), ..., return(x;z) -> ret x }
Handler id_handler(const Theory& theory);

/// let box u = e in box theory. handle u with id_handler(theory) init ()
Expr eta_expand(const Expr& e, const Theory& theory);

/// Two's-complement integer arithmetic shared with the evaluator; nullopt on
/// division by zero.
std::optional<std::int64_t> arith(ArithOp op, std::int64_t a, std::int64_t b);

}  // namespace ecmtt
