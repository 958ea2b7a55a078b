#include "ecmtt/typecheck.hpp"

#include <algorithm>
#include <map>

#include "ecmtt/surface.hpp"

#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnboundVariable: return "unbound-variable";
    case ErrorKind::OpNotInContext: return "op-not-in-context";
    case ErrorKind::TheoryMismatch: return "theory-mismatch";
    case ErrorKind::NotAFunction: return "not-a-function";
    case ErrorKind::NotABox: return "not-a-box";
    case ErrorKind::ClauseCoverage: return "clause-coverage";
    case ErrorKind::StateTypeMismatch: return "state-type-mismatch";
    case ErrorKind::BottomIntroduction: return "bottom-introduction";
    case ErrorKind::ArgumentMismatch: return "argument-mismatch";
  }
  return "unknown";
}

namespace {
std::string render_error(ErrorKind kind, const std::string& expected, const std::string& found,
                         const std::string& message, const Span& span) {
  std::string out = std::to_string(span.line) + ":" + std::to_string(span.column) + ": " +
                    std::string(kind_name(kind)) + ": ";
  if (!expected.empty() || !found.empty()) return out + "expected " + expected + ", found " + found;
  return out + message;
}
}  // namespace

TypeError::TypeError(ErrorKind kind, std::string expected, std::string found, std::string message,
                     Span span, std::string judgment)
    : std::runtime_error(render_error(kind, expected, found, message, span)),
      kind_(kind),
      expected_(std::move(expected)),
      found_(std::move(found)),
      message_(std::move(message)),
      span_(span),
      judgment_(std::move(judgment)) {}

std::string TypeError::render() const { return what(); }

// ---------------------------------------------------------------------------

bool is_subtype(const Type& a, const Type& b) {
  if (as<types::Bottom>(a)) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const types::Prod& x) {
            auto* y = as<types::Prod>(b);
            return is_subtype(x.left, y->left) && is_subtype(x.right, y->right);
          },
          [&](const types::List& x) { return is_subtype(x.elem, as<types::List>(b)->elem); },
          [&](const types::Arrow& x) {
            auto* y = as<types::Arrow>(b);
            return is_subtype(y->dom, x.dom) && is_subtype(x.cod, y->cod);
          },
          [&](const types::Box& x) {
            auto* y = as<types::Box>(b);
            return theory_equal(x.theory, y->theory) && is_subtype(x.body, y->body);
          },
          [&](const auto&) { return type_equal(a, b); },
      },
      a->node);
}

namespace {

std::optional<Type> join_impl(const Type& a, const Type& b);

// Greatest lower bound. Always exists since bot is below everything.
Type meet(const Type& a, const Type& b) {
  if (is_subtype(a, b)) return a;
  if (is_subtype(b, a)) return b;
  if (a->node.index() != b->node.index()) return bottom_type();
  return std::visit(
      overloaded{
          [&](const types::Prod& x) {
            auto* y = as<types::Prod>(b);
            return prod_type(meet(x.left, y->left), meet(x.right, y->right));
          },
          [&](const types::List& x) { return list_type(meet(x.elem, as<types::List>(b)->elem)); },
          [&](const types::Arrow& x) -> Type {
            auto* y = as<types::Arrow>(b);
            auto dom = join_impl(x.dom, y->dom);
            if (!dom) return bottom_type();
            return arrow_type(*dom, meet(x.cod, y->cod));
          },
          [&](const types::Box& x) -> Type {
            auto* y = as<types::Box>(b);
            if (!theory_equal(x.theory, y->theory)) return bottom_type();
            return box_type(x.theory, meet(x.body, y->body));
          },
          [&](const auto&) { return bottom_type(); },
      },
      a->node);
}

std::optional<Type> join_impl(const Type& a, const Type& b) {
  if (is_subtype(a, b)) return b;
  if (is_subtype(b, a)) return a;
  if (a->node.index() != b->node.index()) return std::nullopt;
  return std::visit(
      overloaded{
          [&](const types::Prod& x) -> std::optional<Type> {
            auto* y = as<types::Prod>(b);
            auto l = join_impl(x.left, y->left);
            auto r = join_impl(x.right, y->right);
            if (!l || !r) return std::nullopt;
            return prod_type(*l, *r);
          },
          [&](const types::List& x) -> std::optional<Type> {
            auto e = join_impl(x.elem, as<types::List>(b)->elem);
            if (!e) return std::nullopt;
            return list_type(*e);
          },
          [&](const types::Arrow& x) -> std::optional<Type> {
            auto* y = as<types::Arrow>(b);
            auto cod = join_impl(x.cod, y->cod);
            if (!cod) return std::nullopt;
            return arrow_type(meet(x.dom, y->dom), *cod);
          },
          [&](const types::Box& x) -> std::optional<Type> {
            auto* y = as<types::Box>(b);
            if (!theory_equal(x.theory, y->theory)) return std::nullopt;
            auto body = join_impl(x.body, y->body);
            if (!body) return std::nullopt;
            return box_type(x.theory, *body);
          },
          [&](const auto&) -> std::optional<Type> { return std::nullopt; },
      },
      a->node);
}

}  // namespace

std::optional<Type> join(const Type& a, const Type& b) { return join_impl(a, b); }

namespace {

bool is_bottom(const Type& t) { return as<types::Bottom>(t) != nullptr; }

class Checker {
 public:
  Type expr(const ModalContext& d, const Expr& e);
  Type comp(const ModalContext& d, const EffectContext& g, const Comp& c);
  Type stmt(const ModalContext& d, const EffectContext& g, const Stmt& s);
  HandlerSig handler(const ModalContext& d, const EffectContext& g, const Handler& h,
                     const Type& in, const Type& state);
  Type hseq(const ModalContext& d, const Theory& ambient, const HandlingSequence& theta,
            const Type& in, const Theory& source);

 private:
  std::vector<Span> spans_;
  std::vector<const char*> judgments_;
  // State types handed to the k of a handler clause under check, keyed by
  // the marker in that k's declaration.
  std::map<const TypeNode*, Type> widened_;

  struct At {
    Checker& c;
    At(Checker& checker, Span span, const char* judgment) : c(checker) {
      if (!span.known() && !c.spans_.empty()) span = c.spans_.back();
      c.spans_.push_back(span);
      c.judgments_.push_back(judgment);
    }
    ~At() {
      c.spans_.pop_back();
      c.judgments_.pop_back();
    }
  };

  [[noreturn]] void fail(ErrorKind kind, std::string expected, std::string found,
                         std::string message = {}) const {
    Span span = spans_.empty() ? Span{} : spans_.back();
    std::string judgment = judgments_.empty() ? "expression" : judgments_.back();
    throw TypeError(kind, std::move(expected), std::move(found), std::move(message), span,
                    std::move(judgment));
  }
  [[noreturn]] void fail_msg(ErrorKind kind, std::string message) const {
    fail(kind, {}, {}, std::move(message));
  }

  void require_sub(const Type& found, const Type& expected, ErrorKind kind = ErrorKind::ArgumentMismatch) {
    if (!is_subtype(found, expected)) fail(kind, pretty(expected), pretty(found));
  }

  Type require_join(const Type& a, const Type& b) {
    auto j = join(a, b);
    if (!j) fail(ErrorKind::ArgumentMismatch, pretty(a), pretty(b));
    return *j;
  }

  void wf_theory(const Theory& t) {
    if (auto dup = t.duplicate())
      fail_msg(ErrorKind::TheoryMismatch, "duplicate operation '" + *dup + "' in theory");
    for (const auto& op : t.ops) {
      wf_type(op.in);
      wf_type(op.out);
    }
  }

  void wf_type(const Type& t) {
    std::visit(overloaded{
                   [&](const types::Prod& p) {
                     wf_type(p.left);
                     wf_type(p.right);
                   },
                   [&](const types::List& l) { wf_type(l.elem); },
                   [&](const types::Arrow& a) {
                     wf_type(a.dom);
                     wf_type(a.cod);
                   },
                   [&](const types::Box& b) {
                     wf_theory(b.theory);
                     wf_type(b.body);
                   },
                   [](const auto&) {},
               },
               t->node);
  }

  // Shared by both let-box rules: the modal binding introduced for `bound`.
  ModalContext unbox(const ModalContext& d, const std::string& u, const Expr& bound) {
    Type t = expr(d, bound);
    if (is_bottom(t)) return d.with_modal(u, bottom_type(), Theory{});
    auto* b = as<types::Box>(t);
    if (!b) fail(ErrorKind::NotABox, "a box type", pretty(t));
    return d.with_modal(u, b->body, b->theory);
  }

  Type fix_def(const ModalContext& d, const FixDef& def) {
    wf_type(def.annot);
    wf_theory(def.theory);
    wf_type(def.ret);
    Type ftype = arrow_type(def.annot, box_type(def.theory, def.ret));
    ModalContext inner = d.with_value(def.f, ftype).with_value(def.x, def.annot);
    Type body = comp(inner, EffectContext(def.theory), def.body);
    require_sub(body, def.ret);
    return ftype;
  }

  Type int_operand(const ModalContext& d, const Expr& e) {
    Type t = expr(d, e);
    require_sub(t, int_type());
    return t;
  }
};

Type Checker::expr(const ModalContext& d, const Expr& e) {
  At at(*this, e->span, "expression");
  return std::visit(
      overloaded{
          [&](const expr::Var& v) -> Type {
            const ValBind* b = d.find_value(v.name);
            if (!b) fail_msg(ErrorKind::UnboundVariable, "unbound variable '" + v.name + "'");
            return b->type;
          },
          [&](const expr::Lam& l) -> Type {
            wf_type(l.annot);
            return arrow_type(l.annot, expr(d.with_value(l.x, l.annot), l.body));
          },
          [&](const expr::App& a) -> Type {
            Type f = expr(d, a.fun);
            Type arg = expr(d, a.arg);
            if (is_bottom(f)) return bottom_type();
            auto* arrow = as<types::Arrow>(f);
            if (!arrow) fail(ErrorKind::NotAFunction, "a function type", pretty(f));
            require_sub(arg, arrow->dom);
            return arrow->cod;
          },
          [&](const expr::Box& b) -> Type {
            wf_theory(b.theory);
            return box_type(b.theory, comp(d, EffectContext(b.theory), b.body));
          },
          [&](const expr::LetBox& l) -> Type { return expr(unbox(d, l.u, l.bound), l.body); },
          [&](const expr::Eval& ev) -> Type {
            const ModalBind* m = d.find_modal(ev.u);
            if (!m) fail_msg(ErrorKind::UnboundVariable, "unbound modal variable '" + ev.u + "'");
            return hseq(d, Theory{}, ev.seq, m->type, m->theory);
          },
          [&](const expr::Fix& f) -> Type {
            Type ftype = fix_def(d, f.def);
            return expr(d.with_value(f.def.f, ftype), f.scope);
          },
          [&](const expr::IntLit&) -> Type { return int_type(); },
          [&](const expr::BoolLit&) -> Type { return bool_type(); },
          [&](const expr::UnitLit&) -> Type { return unit_type(); },
          [&](const expr::Pair& p) -> Type { return prod_type(expr(d, p.left), expr(d, p.right)); },
          [&](const expr::Proj& p) -> Type {
            Type t = expr(d, p.pair);
            if (is_bottom(t)) return bottom_type();
            auto* prod = as<types::Prod>(t);
            if (!prod) fail(ErrorKind::ArgumentMismatch, "a product type", pretty(t));
            return p.index == 1 ? prod->left : prod->right;
          },
          [&](const expr::List& l) -> Type {
            if (l.items.empty()) {
              if (!l.elem) fail_msg(ErrorKind::ArgumentMismatch, "empty list without element type");
              wf_type(*l.elem);
              return list_type(*l.elem);
            }
            Type elem = expr(d, l.items.front());
            for (std::size_t i = 1; i < l.items.size(); ++i)
              elem = require_join(elem, expr(d, l.items[i]));
            return list_type(elem);
          },
          [&](const expr::Append& a) -> Type {
            Type left = expr(d, a.left);
            Type right = expr(d, a.right);
            for (const Type* t : {&left, &right})
              if (!is_bottom(*t) && !as<types::List>(*t))
                fail(ErrorKind::ArgumentMismatch, "a list type", pretty(*t));
            return require_join(left, right);
          },
          [&](const expr::Arith& a) -> Type {
            int_operand(d, a.lhs);
            int_operand(d, a.rhs);
            return int_type();
          },
          [&](const expr::Cmp& c) -> Type {
            Type left = expr(d, c.lhs);
            Type right = expr(d, c.rhs);
            if (c.op == CmpOp::Lt) {
              require_sub(left, int_type());
              require_sub(right, int_type());
              return bool_type();
            }
            Type j = require_join(left, right);
            if (!is_bottom(j) && !as<types::Int>(j) && !as<types::Bool>(j))
              fail(ErrorKind::ArgumentMismatch, "int or bool", pretty(j));
            return bool_type();
          },
          [&](const expr::If& i) -> Type {
            require_sub(expr(d, i.cond), bool_type());
            return require_join(expr(d, i.then_branch), expr(d, i.else_branch));
          },
      },
      e->node);
}

Type Checker::comp(const ModalContext& d, const EffectContext& g, const Comp& c) {
  At at(*this, c->span, "computation");
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> Type { return expr(d, r.value); },
          [&](const comp::Bind& b) -> Type {
            Type s = stmt(d, g, b.stmt);
            return comp(d.with_value(b.x, s), g, b.rest);
          },
          [&](const comp::LetBox& l) -> Type { return comp(unbox(d, l.u, l.bound), g, l.body); },
          [&](const comp::Fix& f) -> Type {
            Type ftype = fix_def(d, f.def);
            return comp(d.with_value(f.def.f, ftype), g, f.scope);
          },
          [&](const comp::If& i) -> Type {
            require_sub(expr(d, i.cond), bool_type());
            return require_join(comp(d, g, i.then_branch), comp(d, g, i.else_branch));
          },
          [&](const comp::Perform& p) -> Type { return stmt(d, g, p.stmt); },
          [&](const comp::BindRet& b) -> Type {
            Type v = expr(d, b.value);
            return comp(d.with_value(b.x, v), g, b.rest);
          },
      },
      c->node);
}

Type Checker::stmt(const ModalContext& d, const EffectContext& g, const Stmt& s) {
  At at(*this, s->span, "statement");
  return std::visit(
      overloaded{
          [&](const stmt::OpCall& o) -> Type {
            const OpDecl* op = g.find_op(o.op);
            if (!op) fail_msg(ErrorKind::OpNotInContext, "operation '" + o.op + "' is not in the effect context");
            require_sub(expr(d, o.arg), op->in);
            return op->out;
          },
          [&](const stmt::ContCall& k) -> Type {
            const ContDecl* cont = g.find_cont(k.k);
            if (!cont) fail_msg(ErrorKind::UnboundVariable, "unbound continuation '" + k.k + "'");
            Type arg = expr(d, k.arg);
            if (!is_subtype(arg, cont->in)) {
              if (is_bottom(cont->in))
                fail(ErrorKind::BottomIntroduction, pretty(cont->in), pretty(arg));
              fail(ErrorKind::ArgumentMismatch, pretty(cont->in), pretty(arg));
            }
            Type st = expr(d, k.state);
            if (auto it = widened_.find(cont->state.get()); it != widened_.end()) {
              auto j = join(it->second, st);
              if (!j) fail(ErrorKind::StateTypeMismatch, pretty(it->second), pretty(st));
              it->second = *j;
            } else {
              require_sub(st, cont->state, ErrorKind::StateTypeMismatch);
            }
            return cont->out;
          },
          [&](const stmt::Handle& h) -> Type {
            const ModalBind* m = d.find_modal(h.u);
            if (!m) fail_msg(ErrorKind::UnboundVariable, "unbound modal variable '" + h.u + "'");
            Type b = hseq(d, h.handler.theory, h.seq, m->type, m->theory);
            Type state = expr(d, h.init);
            return handler(d, g, h.handler, b, state).out;
          },
      },
      s->node);
}

HandlerSig Checker::handler(const ModalContext& d, const EffectContext& g, const Handler& h,
                            const Type& in, const Type& state) {
  At at(*this, h.span, "handler");
  wf_theory(h.theory);
  NameSet declared;
  NameSet covered;
  for (const auto& op : h.theory.ops) declared.insert(op.name);
  for (const auto& c : h.clauses) covered.insert(c.op);
  if (declared != covered || covered.size() != h.clauses.size()) {
    auto list = [](const NameSet& s) {
      std::string out = "{";
      for (const auto& n : s) out += (out.size() > 1 ? ", " : "") + n;
      return out + "}";
    };
    fail(ErrorKind::ClauseCoverage, "clauses for " + list(declared), "clauses for " + list(covered));
  }
  // The signature is the least (state, out) pair that covers the init
  // type, the return clause, every clause body and every state handed to
  // a clause's own k. Synthesizing it this way keeps it monotone when a
  // substitution lowers the type of a subterm.
  constexpr int kMaxRounds = 16;
  Type st = state;
  Type out = comp(d.with_value(h.ret.x, in).with_value(h.ret.z, st), g, h.ret.body);
  for (int round = 0; round < kMaxRounds; ++round) {
    Type next_st = st;
    Type next_out = out;
    for (const auto& c : h.clauses) {
      const OpDecl* op = h.theory.find(c.op);
      // A private copy of the state type marks calls to this clause's k.
      Type marker = std::make_shared<const TypeNode>(*st);
      widened_[marker.get()] = st;
      ModalContext inner = d.with_value(c.x, op->in).with_value(c.z, st);
      EffectContext inner_g = g.with_cont(ContDecl{c.k, op->out, marker, out});
      Type body = comp(inner, inner_g, c.body);
      auto passed = widened_[marker.get()];
      widened_.erase(marker.get());
      auto s2 = join(next_st, passed);
      if (!s2) fail(ErrorKind::StateTypeMismatch, pretty(next_st), pretty(passed));
      next_st = *s2;
      auto o2 = join(next_out, body);
      if (!o2) fail(ErrorKind::ArgumentMismatch, pretty(next_out), pretty(body));
      next_out = *o2;
    }
    if (!type_equal(next_st, st)) {
      st = next_st;
      auto o2 = join(next_out, comp(d.with_value(h.ret.x, in).with_value(h.ret.z, st), g, h.ret.body));
      if (!o2) fail(ErrorKind::ArgumentMismatch, pretty(next_out), "return clause");
      next_out = *o2;
    } else if (type_equal(next_out, out)) {
      return HandlerSig{in, h.theory, st, out};
    }
    out = next_out;
  }
  fail_msg(ErrorKind::ArgumentMismatch, "handler signature does not stabilize");
}

Type Checker::hseq(const ModalContext& d, const Theory& ambient, const HandlingSequence& theta,
                   const Type& in, const Theory& source) {
  At at(*this, Span{}, "handling sequence");
  if (theta.empty()) {
    if (!theory_subset(source, ambient))
      fail(ErrorKind::TheoryMismatch, "a subset of " + pretty(ambient), pretty(source));
    return in;
  }
  const SeqClause& last = theta.back();
  HandlingSequence prefix(theta.begin(), theta.end() - 1);
  Type b = hseq(d, last.handler.theory, prefix, in, source);
  Type state = expr(d, last.init);
  HandlerSig sig = handler(d, EffectContext(ambient), last.handler, b, state);
  return comp(d.with_value(last.x, sig.out), EffectContext(ambient), last.cont);
}

}  // namespace

Type infer_expr(const ModalContext& delta, const Expr& e) { return Checker{}.expr(delta, e); }

Type infer_comp(const ModalContext& delta, const EffectContext& gamma, const Comp& c) {
  return Checker{}.comp(delta, gamma, c);
}

Type infer_stmt(const ModalContext& delta, const EffectContext& gamma, const Stmt& s) {
  return Checker{}.stmt(delta, gamma, s);
}

HandlerSig check_handler(const ModalContext& delta, const EffectContext& gamma, const Handler& h,
                         const Type& in, const Type& state) {
  return Checker{}.handler(delta, gamma, h, in, state);
}

Type infer_hseq(const ModalContext& delta, const Theory& ambient, const HandlingSequence& theta,
                const Type& in, const Theory& source) {
  return Checker{}.hseq(delta, ambient, theta, in, source);
}

Type infer_term(const Term& t) {
  if (auto* e = std::get_if<Expr>(&t)) return infer_expr({}, *e);
  return infer_comp({}, {}, std::get<Comp>(t));
}

}  // namespace ecmtt
