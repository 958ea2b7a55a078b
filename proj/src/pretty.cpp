#include <sstream>

#include "ecmtt/surface.hpp"
#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

namespace {

// Type levels: 0 arrow, 1 product, 2 prefix (list, box), 3 atom.
std::string type_at(const Type& t, int level) {
  auto wrap = [&](int own, std::string s) { return own < level ? "(" + s + ")" : s; };
  return std::visit(
      overloaded{
          [](const types::Base& b) { return b.name; },
          [](const types::Unit&) { return std::string("unit"); },
          [](const types::Int&) { return std::string("int"); },
          [](const types::Bool&) { return std::string("bool"); },
          [](const types::Bottom&) { return std::string("bot"); },
          [&](const types::Prod& p) {
            return wrap(1, type_at(p.left, 1) + " * " + type_at(p.right, 2));
          },
          [&](const types::List& l) { return wrap(2, "list " + type_at(l.elem, 2)); },
          [&](const types::Arrow& a) {
            return wrap(0, type_at(a.dom, 1) + " -> " + type_at(a.cod, 0));
          },
          [&](const types::Box& b) {
            return wrap(2, "[ " + pretty(b.theory) + " ] " + type_at(b.body, 2));
          },
      },
      t->node);
}

// Expression levels: 0 open forms, 1 comparison, 2 append, 3 additive,
// 4 multiplicative, 5 application and projection, 6 atoms.
class Printer {
 public:
  std::string expr(const Expr& e, int level);
  std::string comp(const Comp& c);
  std::string stmt(const Stmt& s);
  std::string handler(const Handler& h);
  std::string seq(const HandlingSequence& s);

 private:
  std::string fix_head(const FixDef& d) {
    return "let fix " + d.f + "(" + d.x + ":" + pretty(d.annot) + "):[ " + pretty(d.theory) +
           " ] " + pretty(d.ret) + " = " + comp(d.body) + " in ";
  }
};

std::string arith_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

std::string Printer::expr(const Expr& e, int level) {
  auto wrap = [&](int own, std::string s) { return own < level ? "(" + s + ")" : s; };
  return std::visit(
      overloaded{
          [&](const expr::Var& v) { return v.name; },
          [&](const expr::Lam& l) {
            return wrap(0, "fn " + l.x + ":" + pretty(l.annot) + ". " + expr(l.body, 0));
          },
          [&](const expr::App& a) { return wrap(5, expr(a.fun, 5) + " " + expr(a.arg, 6)); },
          [&](const expr::Box& b) {
            return wrap(0, "box " + pretty(b.theory) + ". " + comp(b.body));
          },
          [&](const expr::LetBox& l) {
            return wrap(0, "let box " + l.u + " = " + expr(l.bound, 0) + " in " + expr(l.body, 0));
          },
          [&](const expr::Eval& ev) {
            return ev.seq.empty() ? "eval " + ev.u : "eval " + seq(ev.seq) + " " + ev.u;
          },
          [&](const expr::Fix& f) { return wrap(0, fix_head(f.def) + expr(f.scope, 0)); },
          [&](const expr::IntLit& i) {
            return i.value < 0 ? "(" + std::to_string(i.value) + ")" : std::to_string(i.value);
          },
          [&](const expr::BoolLit& b) { return std::string(b.value ? "true" : "false"); },
          [&](const expr::UnitLit&) { return std::string("()"); },
          [&](const expr::Pair& p) {
            return "(" + expr(p.left, 0) + ", " + expr(p.right, 0) + ")";
          },
          [&](const expr::Proj& p) {
            return wrap(5, std::string(p.index == 1 ? "fst " : "snd ") + expr(p.pair, 6));
          },
          [&](const expr::List& l) {
            if (l.items.empty()) return "[]:" + type_at(*l.elem, 2);
            std::string out = "[";
            for (std::size_t i = 0; i < l.items.size(); ++i) {
              if (i) out += ", ";
              out += expr(l.items[i], 0);
            }
            return out + "]";
          },
          [&](const expr::Append& a) {
            return wrap(2, expr(a.left, 3) + " ++ " + expr(a.right, 2));
          },
          [&](const expr::Arith& a) {
            bool mul = a.op == ArithOp::Mul || a.op == ArithOp::Div;
            int own = mul ? 4 : 3;
            return wrap(own, expr(a.lhs, own) + " " + arith_symbol(a.op) + " " + expr(a.rhs, own + 1));
          },
          [&](const expr::Cmp& c) {
            return wrap(1, expr(c.lhs, 2) + (c.op == CmpOp::Eq ? " = " : " < ") + expr(c.rhs, 2));
          },
          [&](const expr::If& i) {
            return wrap(0, "if " + expr(i.cond, 0) + " then " + expr(i.then_branch, 0) + " else " +
                               expr(i.else_branch, 0));
          },
      },
      e->node);
}

std::string Printer::comp(const Comp& c) {
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) { return "ret " + expr(r.value, 6); },
          [&](const comp::Bind& b) { return b.x + " <- " + stmt(b.stmt) + "; " + comp(b.rest); },
          [&](const comp::LetBox& l) {
            return "let box " + l.u + " = " + expr(l.bound, 0) + " in " + comp(l.body);
          },
          [&](const comp::Fix& f) { return fix_head(f.def) + comp(f.scope); },
          [&](const comp::If& i) {
            return "if " + expr(i.cond, 0) + " then " + comp(i.then_branch) + " else " +
                   comp(i.else_branch);
          },
          [&](const comp::Perform& p) { return stmt(p.stmt); },
          [&](const comp::BindRet& b) {
            return b.x + " <- ret " + expr(b.value, 6) + "; " + comp(b.rest);
          },
      },
      c->node);
}

std::string Printer::stmt(const Stmt& s) {
  return std::visit(
      overloaded{
          [&](const stmt::OpCall& o) {
            if (as<expr::UnitLit>(o.arg)) return o.op + "()";
            return o.op + "(" + expr(o.arg, 0) + ")";
          },
          [&](const stmt::ContCall& k) {
            return k.k + "(" + expr(k.arg, 0) + "; " + expr(k.state, 0) + ")";
          },
          [&](const stmt::Handle& h) {
            std::string out = "handle " + h.u;
            if (!h.seq.empty()) out += " " + seq(h.seq);
            return out + " with " + handler(h.handler) + " init " + expr(h.init, 6);
          },
      },
      s->node);
}

std::string Printer::handler(const Handler& h) {
  std::string out = "handler for " + pretty(h.theory) + " { ";
  for (const auto& c : h.clauses)
    out += c.op + "(" + c.x + "; " + c.k + "; " + c.z + ") -> " + comp(c.body) + ", ";
  out += "return(" + h.ret.x + "; " + h.ret.z + ") -> " + comp(h.ret.body) + " }";
  return out;
}

std::string Printer::seq(const HandlingSequence& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "; ";
    out += handler(s[i].handler) + " init " + expr(s[i].init, 6) + " as " + s[i].x + ". " +
           comp(s[i].cont);
  }
  return out + "]";
}

}  // namespace

std::string pretty(const Type& t) { return type_at(t, 0); }

std::string pretty(const Theory& t) {
  std::string out = "{";
  for (std::size_t i = 0; i < t.ops.size(); ++i) {
    if (i) out += ", ";
    out += t.ops[i].name + ":" + pretty(t.ops[i].in) + "=>" + pretty(t.ops[i].out);
  }
  return out + "}";
}

std::string pretty(const Expr& e) { return Printer{}.expr(e, 0); }
std::string pretty(const Comp& c) { return Printer{}.comp(c); }
std::string pretty(const Stmt& s) { return Printer{}.stmt(s); }
std::string pretty(const Handler& h) { return Printer{}.handler(h); }
std::string pretty(const HandlingSequence& seq) { return Printer{}.seq(seq); }
std::string pretty(const Term& t) {
  return std::visit([](const auto& x) { return pretty(x); }, t);
}

}  // namespace ecmtt
