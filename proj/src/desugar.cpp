#include "ecmtt/surface.hpp"
#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

namespace {

HandlingSequence desugar_seq(const HandlingSequence& seq) {
  HandlingSequence out;
  for (const auto& c : seq)
    out.push_back(SeqClause{desugar(c.handler), desugar(c.init), c.x, desugar(c.cont)});
  return out;
}

FixDef desugar_fix(const FixDef& d) {
  FixDef out = d;
  out.body = desugar(d.body);
  return out;
}

Stmt desugar_stmt(const Stmt& s) {
  return std::visit(
      overloaded{
          [&](const stmt::OpCall& o) { return make_stmt(stmt::OpCall{o.op, desugar(o.arg)}, s->span); },
          [&](const stmt::ContCall& k) {
            return make_stmt(stmt::ContCall{k.k, desugar(k.arg), desugar(k.state)}, s->span);
          },
          [&](const stmt::Handle& h) {
            return make_stmt(stmt::Handle{h.u, desugar_seq(h.seq), desugar(h.handler), desugar(h.init)},
                             s->span);
          },
      },
      s->node);
}

// handler for {} { return(x;z) -> ret x }
Handler empty_identity() {
  Handler h;
  h.ret = ReturnClause{"x", "z", ret(var("x"))};
  return h;
}

}  // namespace

Handler desugar(const Handler& h) {
  Handler out = h;
  for (auto& c : out.clauses) c.body = desugar(c.body);
  out.ret.body = desugar(h.ret.body);
  return out;
}

Expr desugar(const Expr& e) {
  Span sp = e->span;
  return std::visit(
      overloaded{
          [&](const expr::Var&) { return e; },
          [&](const expr::Lam& l) { return make_expr(expr::Lam{l.x, l.annot, desugar(l.body)}, sp); },
          [&](const expr::App& a) { return make_expr(expr::App{desugar(a.fun), desugar(a.arg)}, sp); },
          [&](const expr::Box& b) { return make_expr(expr::Box{b.theory, desugar(b.body)}, sp); },
          [&](const expr::LetBox& l) {
            return make_expr(expr::LetBox{l.u, desugar(l.bound), desugar(l.body)}, sp);
          },
          [&](const expr::Eval& ev) { return make_expr(expr::Eval{desugar_seq(ev.seq), ev.u}, sp); },
          [&](const expr::Fix& f) {
            return make_expr(expr::Fix{desugar_fix(f.def), desugar(f.scope)}, sp);
          },
          [&](const expr::Pair& p) { return make_expr(expr::Pair{desugar(p.left), desugar(p.right)}, sp); },
          [&](const expr::Proj& p) { return make_expr(expr::Proj{p.index, desugar(p.pair)}, sp); },
          [&](const expr::List& l) {
            expr::List out{l.elem, {}};
            for (const auto& item : l.items) out.items.push_back(desugar(item));
            return make_expr(std::move(out), sp);
          },
          [&](const expr::Append& a) {
            return make_expr(expr::Append{desugar(a.left), desugar(a.right)}, sp);
          },
          [&](const expr::Arith& a) {
            return make_expr(expr::Arith{a.op, desugar(a.lhs), desugar(a.rhs)}, sp);
          },
          [&](const expr::Cmp& c) { return make_expr(expr::Cmp{c.op, desugar(c.lhs), desugar(c.rhs)}, sp); },
          [&](const expr::If& i) {
            return make_expr(
                expr::If{desugar(i.cond), desugar(i.then_branch), desugar(i.else_branch)}, sp);
          },
          [&](const auto&) { return e; },
      },
      e->node);
}

Comp desugar(const Comp& c) {
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) { return make_comp(comp::Ret{desugar(r.value)}, sp); },
          [&](const comp::Bind& b) {
            return make_comp(comp::Bind{desugar_stmt(b.stmt), b.x, desugar(b.rest)}, sp);
          },
          [&](const comp::LetBox& l) {
            return make_comp(comp::LetBox{l.u, desugar(l.bound), desugar(l.body)}, sp);
          },
          [&](const comp::Fix& f) {
            return make_comp(comp::Fix{desugar_fix(f.def), desugar(f.scope)}, sp);
          },
          [&](const comp::If& i) {
            return make_comp(
                comp::If{desugar(i.cond), desugar(i.then_branch), desugar(i.else_branch)}, sp);
          },
          [&](const comp::Perform& p) {
            Stmt s = desugar_stmt(p.stmt);
            std::string x = fresh_name("x", free_vars(s).values);
            return make_comp(comp::Bind{s, x, make_comp(comp::Ret{var(x)}, sp)}, sp);
          },
          [&](const comp::BindRet& b) {
            Expr value = desugar(b.value);
            Comp rest = desugar(b.rest);
            NameSet avoid = free_vars(rest).modals;
            NameSet in_value = free_vars(value).modals;
            avoid.insert(in_value.begin(), in_value.end());
            std::string u = fresh_name("u", avoid);
            Stmt handle = make_stmt(stmt::Handle{u, {}, empty_identity(), unit_lit()}, sp);
            Expr boxed = make_expr(expr::Box{Theory{}, make_comp(comp::Ret{value}, sp)}, sp);
            return make_comp(comp::LetBox{u, boxed, make_comp(comp::Bind{handle, b.x, rest}, sp)}, sp);
          },
      },
      c->node);
}

Term desugar(const Term& t) {
  return std::visit([](const auto& x) -> Term { return desugar(x); }, t);
}

}  // namespace ecmtt
