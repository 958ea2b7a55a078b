#pragma once

// Kernel abstract syntax: types, effect and modal contexts, and the five
// term categories (expressions, computations, statements, handlers and
// handling sequences). Terms are immutable and shared through
// shared_ptr<const ...>, so they are safe to pass between threads.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ecmtt {

struct Span {
  int line = 0;
  int column = 0;
  int length = 0;

  bool known() const { return line > 0; }
};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct TypeNode;
using Type = std::shared_ptr<const TypeNode>;

struct OpDecl {
  std::string name;
  Type in;
  Type out;
};

/// An algebraic theory: an effect context holding only operation
/// declarations. Order is kept for printing; equality is name-keyed.
struct Theory {
  std::vector<OpDecl> ops;

  const OpDecl* find(std::string_view name) const;
  bool empty() const { return ops.empty(); }
  std::size_t size() const { return ops.size(); }
  /// First operation name that occurs twice, if any.
  std::optional<std::string> duplicate() const;
};

/// Concatenation of theories, as in `box St, Exn. c`.
Theory concat(const Theory& a, const Theory& b);

namespace types {
struct Base { std::string name; };
struct Unit {};
struct Int {};
struct Bool {};
struct Bottom {};
struct Prod { Type left; Type right; };
struct List { Type elem; };
struct Arrow { Type dom; Type cod; };
struct Box { Theory theory; Type body; };
}  // namespace types

using TypeVariant = std::variant<types::Base, types::Unit, types::Int, types::Bool, types::Bottom,
                                 types::Prod, types::List, types::Arrow, types::Box>;

struct TypeNode {
  TypeVariant node;
};

Type base_type(std::string name);
Type unit_type();
Type int_type();
Type bool_type();
Type bottom_type();
Type prod_type(Type left, Type right);
Type list_type(Type elem);
Type arrow_type(Type dom, Type cod);
Type box_type(Theory theory, Type body);

template <typename T>
const T* as(const Type& t) {
  return std::get_if<T>(&t->node);
}

/// Structural equality; Box theories compare as name-keyed sets.
bool type_equal(const Type& a, const Type& b);

/// Every OpDecl of `small` occurs in `big` with identical in/out types.
bool theory_subset(const Theory& small, const Theory& big);

/// Name-keyed set equality of theories.
bool theory_equal(const Theory& a, const Theory& b);

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct ExprNode;
struct CompNode;
struct StmtNode;
using Expr = std::shared_ptr<const ExprNode>;
using Comp = std::shared_ptr<const CompNode>;
using Stmt = std::shared_ptr<const StmtNode>;

struct OpClause {
  std::string op;
  std::string x;
  std::string k;
  std::string z;
  Comp body;
};

struct ReturnClause {
  std::string x;
  std::string z;
  Comp body;
};

struct Handler {
  Theory theory;  // ascription of the handled operations
  std::vector<OpClause> clauses;
  ReturnClause ret;
  Span span;

  const OpClause* find(std::string_view op) const;
};

struct SeqClause {
  Handler handler;
  Expr init;
  std::string x;
  Comp cont;
};

using HandlingSequence = std::vector<SeqClause>;

/// Shared part of the expression and computation forms of let-fix:
/// `let fix f(x:A):[theory]ret = body in ...`.
struct FixDef {
  std::string f;
  std::string x;
  Type annot;
  Theory theory;
  Type ret;
  Comp body;
};

enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Eq, Lt };

namespace expr {
struct Var { std::string name; };
struct Lam { std::string x; Type annot; Expr body; };
struct App { Expr fun; Expr arg; };
struct Box { Theory theory; Comp body; };
struct LetBox { std::string u; Expr bound; Expr body; };
struct Eval { HandlingSequence seq; std::string u; };
struct Fix { FixDef def; Expr scope; };
struct IntLit { std::int64_t value; };
struct BoolLit { bool value; };
struct UnitLit {};
struct Pair { Expr left; Expr right; };
struct Proj { int index; Expr pair; };  // index is 1 or 2
/// List literal. The element annotation is present exactly when the list
/// is empty (`[]:T`); non-empty literals take their type from the items.
struct List { std::optional<Type> elem; std::vector<Expr> items; };
struct Append { Expr left; Expr right; };
struct Arith { ArithOp op; Expr lhs; Expr rhs; };
struct Cmp { CmpOp op; Expr lhs; Expr rhs; };
struct If { Expr cond; Expr then_branch; Expr else_branch; };
}  // namespace expr

using ExprVariant =
    std::variant<expr::Var, expr::Lam, expr::App, expr::Box, expr::LetBox, expr::Eval, expr::Fix,
                 expr::IntLit, expr::BoolLit, expr::UnitLit, expr::Pair, expr::Proj, expr::List,
                 expr::Append, expr::Arith, expr::Cmp, expr::If>;

namespace comp {
struct Ret { Expr value; };
struct Bind { Stmt stmt; std::string x; Comp rest; };
struct LetBox { std::string u; Expr bound; Comp body; };
struct Fix { FixDef def; Comp scope; };
struct If { Expr cond; Comp then_branch; Comp else_branch; };
// Surface sugar; eliminated by desugar() before checking or evaluation.
struct Perform { Stmt stmt; };                              // bare `s`
struct BindRet { Expr value; std::string x; Comp rest; };  // `x <- ret e; c`
}  // namespace comp

using CompVariant = std::variant<comp::Ret, comp::Bind, comp::LetBox, comp::Fix, comp::If,
                                 comp::Perform, comp::BindRet>;

namespace stmt {
struct OpCall { std::string op; Expr arg; };
struct ContCall { std::string k; Expr arg; Expr state; };
struct Handle { std::string u; HandlingSequence seq; Handler handler; Expr init; };
}  // namespace stmt

using StmtVariant = std::variant<stmt::OpCall, stmt::ContCall, stmt::Handle>;

struct ExprNode {
  ExprVariant node;
  Span span;
};

struct CompNode {
  CompVariant node;
  Span span;
};

struct StmtNode {
  StmtVariant node;
  Span span;
};

template <typename T>
Expr make_expr(T node, Span span = {}) {
  return std::make_shared<const ExprNode>(ExprNode{ExprVariant(std::move(node)), span});
}

template <typename T>
Comp make_comp(T node, Span span = {}) {
  return std::make_shared<const CompNode>(CompNode{CompVariant(std::move(node)), span});
}

template <typename T>
Stmt make_stmt(T node, Span span = {}) {
  return std::make_shared<const StmtNode>(StmtNode{StmtVariant(std::move(node)), span});
}

template <typename T>
const T* as(const Expr& e) {
  return std::get_if<T>(&e->node);
}
template <typename T>
const T* as(const Comp& c) {
  return std::get_if<T>(&c->node);
}
template <typename T>
const T* as(const Stmt& s) {
  return std::get_if<T>(&s->node);
}

// Small constructors used all over the engine and the tests.
Expr var(std::string name);
Expr int_lit(std::int64_t v);
Expr bool_lit(bool v);
Expr unit_lit();
Expr pair(Expr a, Expr b);
Comp ret(Expr e);
Comp bind(Stmt s, std::string x, Comp rest);
Stmt op_call(std::string op, Expr arg);
Stmt cont_call(std::string k, Expr arg, Expr state);

/// A top-level program or REPL input is either an expression or a computation.
using Term = std::variant<Expr, Comp>;

// ---------------------------------------------------------------------------
// Contexts
// ---------------------------------------------------------------------------

struct ContDecl {
  std::string name;
  Type in;
  Type state;
  Type out;
};

/// Γ: operations and continuations. Lookups resolve innermost-first.
class EffectContext {
 public:
  using Entry = std::variant<OpDecl, ContDecl>;

  EffectContext() = default;
  explicit EffectContext(const Theory& theory);

  EffectContext with_op(OpDecl op) const;
  EffectContext with_cont(ContDecl k) const;

  const OpDecl* find_op(std::string_view name) const;
  const ContDecl* find_cont(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  /// True when only operations are present.
  bool is_theory() const;
  Theory as_theory() const;

 private:
  std::vector<Entry> entries_;
};

struct ValBind {
  std::string name;
  Type type;
};

struct ModalBind {
  std::string name;
  Type type;
  Theory theory;
};

/// Δ: value bindings x:A and modal bindings u::A[Ψ], innermost last.
class ModalContext {
 public:
  using Entry = std::variant<ValBind, ModalBind>;

  ModalContext with_value(std::string name, Type type) const;
  ModalContext with_modal(std::string name, Type type, Theory theory) const;

  const ValBind* find_value(std::string_view name) const;
  const ModalBind* find_modal(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

using NameSet = std::set<std::string>;

/// Free names of a term, one set per namespace.
struct FreeNames {
  NameSet values;
  NameSet modals;
  NameSet ops;
  NameSet conts;

  bool operator==(const FreeNames&) const = default;
};

FreeNames free_vars(const Expr& e);
FreeNames free_vars(const Comp& c);
FreeNames free_vars(const Stmt& s);
FreeNames free_vars(const Handler& h);
FreeNames free_vars(const HandlingSequence& seq);
FreeNames free_vars(const Term& t);

/// `base` when it is not in `avoid`, otherwise `base` followed by the
/// smallest positive integer suffix that is not in `avoid`.
std::string fresh_name(std::string_view base, const NameSet& avoid);

/// `name` with trailing digits removed (never empty).
std::string name_stem(std::string_view name);

bool alpha_equal(const Expr& a, const Expr& b);
bool alpha_equal(const Comp& a, const Comp& b);
bool alpha_equal(const Stmt& a, const Stmt& b);
bool alpha_equal(const Handler& a, const Handler& b);
bool alpha_equal(const HandlingSequence& a, const HandlingSequence& b);
bool alpha_equal(const Term& a, const Term& b);

/// Syntactic values of the evaluator: abstractions, boxes, literals, and
/// pairs and lists of values.
bool is_value(const Expr& e);
/// `ret v` with v a value.
bool is_value(const Comp& c);

}  // namespace ecmtt
