#include "ecmtt/eval.hpp"

#include <cstdlib>

#include "ecmtt/surface.hpp"
#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

std::string_view stuck_name(StuckReason reason) {
  return reason == StuckReason::DivisionByZero ? "division-by-zero" : "internal";
}

namespace {

enum class Kind { Stepped, Value, Stuck };

template <typename T>
struct Outcome {
  Kind kind = Kind::Value;
  T next;
  std::string rule;
  StuckReason reason = StuckReason::Internal;
  std::string message;

  static Outcome value(T t) { return {Kind::Value, std::move(t), {}, {}, {}}; }
  static Outcome stepped(T t, std::string rule) { return {Kind::Stepped, std::move(t), std::move(rule), {}, {}}; }
  static Outcome stuck(StuckReason r, std::string msg) { return {Kind::Stuck, nullptr, {}, r, std::move(msg)}; }
  template <typename U>
  static Outcome stuck_from(const Outcome<U>& o) { return {Kind::Stuck, nullptr, {}, o.reason, o.message}; }
};

using ExprOut = Outcome<Expr>;
using CompOut = Outcome<Comp>;

class Stepper {
 public:
  explicit Stepper(const StepOptions& options) : options_(options) {
    SubstOptions so = options.subst;
    if (options.observe) {
      auto user = so.observer;
      so.observer = [this, user](const ModalHandleEvent& ev) {
        events.push_back(ev);
        if (user) user(ev);
      };
      auto user_handle = so.handle_observer;
      so.handle_observer = [this, user_handle](const HandleCall& call) {
        handles.push_back(call);
        if (user_handle) user_handle(call);
      };
    }
    engine_.emplace(std::move(so));
  }

  ExprOut expr(const Expr& e);
  CompOut comp(const Comp& c);

  std::vector<ModalHandleEvent> events;
  std::vector<HandleCall> handles;
  std::optional<Term> redex;

 private:
  const StepOptions& options_;
  std::optional<SubstEngine> engine_;

  // Steps the first non-value among `parts`, rebuilding with `rebuild`.
  template <typename F>
  std::optional<ExprOut> first_nonvalue(std::vector<Expr> parts, F rebuild) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (is_value(parts[i])) continue;
      ExprOut inner = expr(parts[i]);
      if (inner.kind != Kind::Stepped) return ExprOut::stuck_from(inner);
      parts[i] = inner.next;
      return ExprOut::stepped(rebuild(parts), "cong-prim");
    }
    return std::nullopt;
  }

  template <typename T, typename Body>
  Outcome<T> beta_letbox(const std::string& u, const Expr& bound, const Body& body, const T& whole) {
    auto* box = as<expr::Box>(bound);
    if (!box) return Outcome<T>::stuck(StuckReason::Internal, "let box on a non-box value");
    redex = Term(whole);
    return Outcome<T>::stepped(engine_->modal_subst(body, box->theory, box->body, u), "beta-letbox");
  }

  template <typename T>
  T unroll(const FixDef& def, const T& scope) {
    Comp inner = make_comp(comp::Fix{def, def.body});
    Expr fn = make_expr(expr::Lam{def.x, def.annot, make_expr(expr::Box{def.theory, inner})});
    return engine_->subst_expr(scope, fn, def.f);
  }
};

ExprOut Stepper::expr(const Expr& e) {
  if (is_value(e)) return ExprOut::value(e);
  Span sp = e->span;
  return std::visit(
      overloaded{
          [&](const expr::App& a) -> ExprOut {
            if (!is_value(a.fun)) {
              ExprOut f = expr(a.fun);
              if (f.kind != Kind::Stepped) return ExprOut::stuck_from(f);
              return ExprOut::stepped(make_expr(expr::App{f.next, a.arg}, sp), "cong-app-l");
            }
            if (!is_value(a.arg)) {
              ExprOut x = expr(a.arg);
              if (x.kind != Kind::Stepped) return ExprOut::stuck_from(x);
              return ExprOut::stepped(make_expr(expr::App{a.fun, x.next}, sp), "cong-app-r");
            }
            auto* lam = as<expr::Lam>(a.fun);
            if (!lam) return ExprOut::stuck(StuckReason::Internal, "application of a non-function");
            return ExprOut::stepped(engine_->subst_expr(lam->body, a.arg, lam->x), "beta-app");
          },
          [&](const expr::LetBox& l) -> ExprOut {
            if (!is_value(l.bound)) {
              ExprOut b = expr(l.bound);
              if (b.kind != Kind::Stepped) return ExprOut::stuck_from(b);
              return ExprOut::stepped(make_expr(expr::LetBox{l.u, b.next, l.body}, sp), "cong-letbox");
            }
            return beta_letbox(l.u, l.bound, l.body, e);
          },
          [&](const expr::Fix& f) -> ExprOut { return ExprOut::stepped(unroll(f.def, f.scope), "unroll-fix"); },
          [&](const expr::Pair& p) -> ExprOut {
            auto out = first_nonvalue({p.left, p.right}, [&](const std::vector<Expr>& v) {
              return make_expr(expr::Pair{v[0], v[1]}, sp);
            });
            return out ? *out : ExprOut::stuck(StuckReason::Internal, "pair");
          },
          [&](const expr::List& l) -> ExprOut {
            auto out = first_nonvalue(l.items, [&](const std::vector<Expr>& v) {
              return make_expr(expr::List{l.elem, v}, sp);
            });
            return out ? *out : ExprOut::stuck(StuckReason::Internal, "list");
          },
          [&](const expr::Proj& p) -> ExprOut {
            if (auto out = first_nonvalue({p.pair}, [&](const std::vector<Expr>& v) {
                  return make_expr(expr::Proj{p.index, v[0]}, sp);
                }))
              return *out;
            auto* pr = as<expr::Pair>(p.pair);
            if (!pr) return ExprOut::stuck(StuckReason::Internal, "projection of a non-pair");
            return ExprOut::stepped(p.index == 1 ? pr->left : pr->right, "prim");
          },
          [&](const expr::Append& a) -> ExprOut {
            if (auto out = first_nonvalue({a.left, a.right}, [&](const std::vector<Expr>& v) {
                  return make_expr(expr::Append{v[0], v[1]}, sp);
                }))
              return *out;
            auto* l = as<expr::List>(a.left);
            auto* r = as<expr::List>(a.right);
            if (!l || !r) return ExprOut::stuck(StuckReason::Internal, "append of a non-list");
            expr::List joined{std::nullopt, l->items};
            joined.items.insert(joined.items.end(), r->items.begin(), r->items.end());
            if (joined.items.empty()) joined.elem = l->elem;
            return ExprOut::stepped(make_expr(std::move(joined), sp), "prim");
          },
          [&](const expr::Arith& a) -> ExprOut {
            if (auto out = first_nonvalue({a.lhs, a.rhs}, [&](const std::vector<Expr>& v) {
                  return make_expr(expr::Arith{a.op, v[0], v[1]}, sp);
                }))
              return *out;
            auto* l = as<expr::IntLit>(a.lhs);
            auto* r = as<expr::IntLit>(a.rhs);
            if (!l || !r) return ExprOut::stuck(StuckReason::Internal, "arithmetic on a non-integer");
            auto v = arith(a.op, l->value, r->value);
            if (!v) return ExprOut::stuck(StuckReason::DivisionByZero, "division by zero");
            return ExprOut::stepped(int_lit(*v), "prim");
          },
          [&](const expr::Cmp& c) -> ExprOut {
            if (auto out = first_nonvalue({c.lhs, c.rhs}, [&](const std::vector<Expr>& v) {
                  return make_expr(expr::Cmp{c.op, v[0], v[1]}, sp);
                }))
              return *out;
            if (auto* l = as<expr::IntLit>(c.lhs)) {
              auto* r = as<expr::IntLit>(c.rhs);
              if (!r) return ExprOut::stuck(StuckReason::Internal, "comparison of mixed values");
              bool v = c.op == CmpOp::Eq ? l->value == r->value : l->value < r->value;
              return ExprOut::stepped(bool_lit(v), "prim");
            }
            auto* l = as<expr::BoolLit>(c.lhs);
            auto* r = as<expr::BoolLit>(c.rhs);
            if (!l || !r || c.op != CmpOp::Eq)
              return ExprOut::stuck(StuckReason::Internal, "comparison of non-comparable values");
            return ExprOut::stepped(bool_lit(l->value == r->value), "prim");
          },
          [&](const expr::If& i) -> ExprOut {
            if (!is_value(i.cond)) {
              ExprOut c = expr(i.cond);
              if (c.kind != Kind::Stepped) return ExprOut::stuck_from(c);
              return ExprOut::stepped(make_expr(expr::If{c.next, i.then_branch, i.else_branch}, sp), "cong-if");
            }
            auto* b = as<expr::BoolLit>(i.cond);
            if (!b) return ExprOut::stuck(StuckReason::Internal, "if on a non-boolean");
            return ExprOut::stepped(b->value ? i.then_branch : i.else_branch, "beta-if");
          },
          [&](const expr::Var& v) -> ExprOut {
            return ExprOut::stuck(StuckReason::Internal, "free variable '" + v.name + "'");
          },
          [&](const expr::Eval& ev) -> ExprOut {
            return ExprOut::stuck(StuckReason::Internal, "eval of free modal variable '" + ev.u + "'");
          },
          [&](const auto&) -> ExprOut { return ExprOut::stuck(StuckReason::Internal, "no rule applies"); },
      },
      e->node);
}

CompOut Stepper::comp(const Comp& c) {
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> CompOut {
            if (is_value(r.value)) return CompOut::value(c);
            ExprOut e = expr(r.value);
            if (e.kind != Kind::Stepped) return CompOut::stuck_from(e);
            return CompOut::stepped(make_comp(comp::Ret{e.next}, sp), "cong-ret");
          },
          [&](const comp::LetBox& l) -> CompOut {
            if (!is_value(l.bound)) {
              ExprOut b = expr(l.bound);
              if (b.kind != Kind::Stepped) return CompOut::stuck_from(b);
              return CompOut::stepped(make_comp(comp::LetBox{l.u, b.next, l.body}, sp), "cong-letbox");
            }
            return beta_letbox(l.u, l.bound, l.body, c);
          },
          [&](const comp::Fix& f) -> CompOut { return CompOut::stepped(unroll(f.def, f.scope), "unroll-fix"); },
          [&](const comp::If& i) -> CompOut {
            if (!is_value(i.cond)) {
              ExprOut e = expr(i.cond);
              if (e.kind != Kind::Stepped) return CompOut::stuck_from(e);
              return CompOut::stepped(make_comp(comp::If{e.next, i.then_branch, i.else_branch}, sp), "cong-if");
            }
            auto* b = as<expr::BoolLit>(i.cond);
            if (!b) return CompOut::stuck(StuckReason::Internal, "if on a non-boolean");
            return CompOut::stepped(b->value ? i.then_branch : i.else_branch, "beta-if");
          },
          [&](const comp::Bind&) -> CompOut {
            return CompOut::stuck(StuckReason::Internal, "unhandled statement at top level");
          },
          [&](const auto&) -> CompOut {
            return CompOut::stuck(StuckReason::Internal, "surface sugar reached the evaluator");
          },
      },
      c->node);
}

template <typename T>
StepResult to_result(Outcome<T> o, Stepper& s) {
  StepResult r;
  r.kind = o.kind == Kind::Stepped ? StepResult::Kind::Stepped
           : o.kind == Kind::Value ? StepResult::Kind::Value
                                   : StepResult::Kind::Stuck;
  if (o.next) r.term = o.next;
  r.rule = std::move(o.rule);
  r.reason = o.reason;
  r.message = std::move(o.message);
  r.events = std::move(s.events);
  r.handles = std::move(s.handles);
  return r;
}

}  // namespace

StepResult step(const Term& t, const StepOptions& options) {
  Stepper s(options);
  StepResult r;
  try {
    if (auto* e = std::get_if<Expr>(&t)) {
      r = to_result(s.expr(*e), s);
    } else {
      r = to_result(s.comp(std::get<Comp>(t)), s);
    }
  } catch (const InternalError& err) {
    r = StepResult{};
    r.kind = StepResult::Kind::Stuck;
    r.reason = StuckReason::Internal;
    r.message = err.what();
  } catch (const SubstFuelExhausted& err) {
    r = StepResult{};
    r.kind = StepResult::Kind::OutOfFuel;
    r.message = err.what();
  }
  if (r.kind != StepResult::Kind::Stepped) r.term = t;
  r.redex = s.redex;
  return r;
}

namespace {

// `reduces`: whether the form itself contracts once its parts are values.
void prim_parts(const std::vector<Expr>& parts, bool reduces, std::vector<std::string>& out) {
  bool all = true;
  for (const auto& p : parts) all = all && is_value(p);
  if (!all) out.push_back("cong-prim");
  else if (reduces) out.push_back("prim");
}

void add_candidates(const Expr& e, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const expr::App& a) {
                   if (!is_value(a.fun)) out.push_back("cong-app-l");
                   if (is_value(a.fun) && !is_value(a.arg)) out.push_back("cong-app-r");
                   if (as<expr::Lam>(a.fun) && is_value(a.arg)) out.push_back("beta-app");
                 },
                 [&](const expr::LetBox& l) {
                   if (!is_value(l.bound)) out.push_back("cong-letbox");
                   if (as<expr::Box>(l.bound)) out.push_back("beta-letbox");
                 },
                 [&](const expr::Fix&) { out.push_back("unroll-fix"); },
                 [&](const expr::If& i) {
                   if (!is_value(i.cond)) out.push_back("cong-if");
                   if (as<expr::BoolLit>(i.cond)) out.push_back("beta-if");
                 },
                 [&](const expr::Pair& p) { prim_parts({p.left, p.right}, false, out); },
                 [&](const expr::List& l) { prim_parts(l.items, false, out); },
                 [&](const expr::Proj& p) { prim_parts({p.pair}, true, out); },
                 [&](const expr::Append& a) { prim_parts({a.left, a.right}, true, out); },
                 [&](const expr::Arith& a) { prim_parts({a.lhs, a.rhs}, true, out); },
                 [&](const expr::Cmp& c) { prim_parts({c.lhs, c.rhs}, true, out); },
                 [&](const auto&) {},
             },
             e->node);
}

}  // namespace

std::vector<std::string> rule_candidates(const Term& t) {
  std::vector<std::string> out;
  if (auto* e = std::get_if<Expr>(&t)) {
    add_candidates(*e, out);
    return out;
  }
  const Comp& c = std::get<Comp>(t);
  std::visit(overloaded{
                 [&](const comp::Ret& r) {
                   if (!is_value(r.value)) out.push_back("cong-ret");
                 },
                 [&](const comp::LetBox& l) {
                   if (!is_value(l.bound)) out.push_back("cong-letbox");
                   if (as<expr::Box>(l.bound)) out.push_back("beta-letbox");
                 },
                 [&](const comp::Fix&) { out.push_back("unroll-fix"); },
                 [&](const comp::If& i) {
                   if (!is_value(i.cond)) out.push_back("cong-if");
                   if (as<expr::BoolLit>(i.cond)) out.push_back("beta-if");
                 },
                 [&](const auto&) {},
             },
             c->node);
  return out;
}

std::uint64_t default_fuel() {
  if (const char* env = std::getenv("ECMTT_MAX_STEPS")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 1'000'000;
}

Trace evaluate(const Term& t, const EvalOptions& options) {
  Trace trace;
  trace.initial = t;
  Term current = t;
  StepOptions so{options.subst, options.observe};
  for (;;) {
    if (trace.count >= options.fuel) {
      // A value at the fuel limit still counts as a value.
      StepResult last = step(current, so);
      if (last.kind == StepResult::Kind::Value) {
        trace.outcome = Trace::Outcome::Value;
      } else {
        trace.outcome = Trace::Outcome::FuelExhausted;
      }
      trace.final = current;
      return trace;
    }
    StepResult r = step(current, so);
    if (r.kind == StepResult::Kind::Value) {
      trace.outcome = Trace::Outcome::Value;
      trace.final = current;
      return trace;
    }
    if (r.kind == StepResult::Kind::OutOfFuel) {
      trace.outcome = Trace::Outcome::FuelExhausted;
      trace.message = r.message;
      trace.final = current;
      return trace;
    }
    if (r.kind == StepResult::Kind::Stuck) {
      trace.outcome = Trace::Outcome::Stuck;
      trace.reason = r.reason;
      trace.message = r.message;
      trace.final = current;
      return trace;
    }
    ++trace.count;
    current = r.term;
    if (options.record)
      trace.steps.push_back(TraceStep{r.rule, current, std::move(r.redex), std::move(r.events),
                                      std::move(r.handles)});
  }
}

Trace evaluate(const Term& t, std::uint64_t fuel) {
  EvalOptions options;
  options.fuel = fuel;
  return evaluate(t, options);
}

std::string render_step(std::uint64_t n, const std::string& rule, const Term& term) {
  return "#" + std::to_string(n) + " [" + rule + "] \xE2\x9F\xB6 " + pretty(term);
}

}  // namespace ecmtt
