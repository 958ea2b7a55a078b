#include "ecmtt/subst.hpp"

#include <map>

#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

std::optional<std::int64_t> arith(ArithOp op, std::int64_t a, std::int64_t b) {
  auto ua = static_cast<std::uint64_t>(a);
  auto ub = static_cast<std::uint64_t>(b);
  switch (op) {
    case ArithOp::Add: return static_cast<std::int64_t>(ua + ub);
    case ArithOp::Sub: return static_cast<std::int64_t>(ua - ub);
    case ArithOp::Mul: return static_cast<std::int64_t>(ua * ub);
    case ArithOp::Div:
      if (b == 0) return std::nullopt;
      if (b == -1) return static_cast<std::int64_t>(0 - ua);
      return a / b;
  }
  return std::nullopt;
}

namespace {

// ---------------------------------------------------------------------------
// Pure built-in redexes

// Values and variables: dropping one of these from a projected pair cannot
// discard a computation.
bool inert(const Expr& e) {
  if (as<expr::Var>(e)) return true;
  if (auto* p = as<expr::Pair>(e)) return inert(p->left) && inert(p->right);
  if (auto* l = as<expr::List>(e)) {
    for (const auto& item : l->items)
      if (!inert(item)) return false;
    return true;
  }
  return is_value(e);
}

Expr norm_expr(const Expr& e) {
  if (auto* a = as<expr::Arith>(e)) {
    auto* l = as<expr::IntLit>(a->lhs);
    auto* r = as<expr::IntLit>(a->rhs);
    if (l && r) {
      if (auto v = arith(a->op, l->value, r->value)) return make_expr(expr::IntLit{*v}, e->span);
    }
    return e;
  }
  if (auto* c = as<expr::Cmp>(e)) {
    auto* li = as<expr::IntLit>(c->lhs);
    auto* ri = as<expr::IntLit>(c->rhs);
    if (li && ri)
      return make_expr(
          expr::BoolLit{c->op == CmpOp::Eq ? li->value == ri->value : li->value < ri->value}, e->span);
    auto* lb = as<expr::BoolLit>(c->lhs);
    auto* rb = as<expr::BoolLit>(c->rhs);
    if (lb && rb && c->op == CmpOp::Eq) return make_expr(expr::BoolLit{lb->value == rb->value}, e->span);
    return e;
  }
  if (auto* p = as<expr::Proj>(e)) {
    auto* pr = as<expr::Pair>(p->pair);
    if (pr && inert(pr->left) && inert(pr->right)) return p->index == 1 ? pr->left : pr->right;
    return e;
  }
  if (auto* a = as<expr::Append>(e)) {
    auto* l = as<expr::List>(a->left);
    auto* r = as<expr::List>(a->right);
    if (l && r) {
      if (l->items.empty()) return a->right;
      if (r->items.empty()) return a->left;
      expr::List out{std::nullopt, l->items};
      out.items.insert(out.items.end(), r->items.begin(), r->items.end());
      return make_expr(std::move(out), e->span);
    }
    return e;
  }
  if (auto* i = as<expr::If>(e)) {
    if (auto* b = as<expr::BoolLit>(i->cond)) return b->value ? i->then_branch : i->else_branch;
    return e;
  }
  return e;
}

Comp norm_comp(const Comp& c) {
  if (auto* i = as<comp::If>(c)) {
    if (auto* b = as<expr::BoolLit>(i->cond)) return b->value ? i->then_branch : i->else_branch;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Simultaneous substitution

enum class Ns { Val, Mod, Cont };

struct Subst {
  std::map<std::string, Expr> values;
  std::map<std::string, std::string> modals;
  std::map<std::string, std::string> conts;
  // Modal substitution target [[theory.payload/u]].
  std::optional<std::string> target;
  Theory theory;
  Comp payload;
  // Free names of everything that may be inserted.
  NameSet range_values;
  NameSet range_modals;
  NameSet range_conts;

  bool empty() const { return values.empty() && modals.empty() && conts.empty() && !target; }

  void add_value(const std::string& x, const Expr& e) {
    values[x] = e;
    FreeNames fv = free_vars(e);
    range_values.insert(fv.values.begin(), fv.values.end());
    range_modals.insert(fv.modals.begin(), fv.modals.end());
    range_conts.insert(fv.conts.begin(), fv.conts.end());
  }

  const NameSet& range(Ns ns) const {
    return ns == Ns::Val ? range_values : ns == Ns::Mod ? range_modals : range_conts;
  }

  void erase(Ns ns, const std::string& b) {
    if (ns == Ns::Val) values.erase(b);
    if (ns == Ns::Mod) {
      modals.erase(b);
      if (target == b) target.reset();
    }
    if (ns == Ns::Cont) conts.erase(b);
  }

  void rename(Ns ns, const std::string& from, const std::string& to) {
    if (ns == Ns::Val) {
      values[from] = var(to);
      range_values.insert(to);
    } else if (ns == Ns::Mod) {
      modals[from] = to;
      range_modals.insert(to);
    } else {
      conts[from] = to;
      range_conts.insert(to);
    }
  }
};

Subst value_subst(std::initializer_list<std::pair<std::string, Expr>> items) {
  Subst s;
  for (const auto& [x, e] : items) s.add_value(x, e);
  return s;
}

Subst rename_subst(Ns ns, const std::string& from, const std::string& to) {
  Subst s;
  s.rename(ns, from, to);
  return s;
}

const NameSet& names_in(const FreeNames& fv, Ns ns) {
  return ns == Ns::Val ? fv.values : ns == Ns::Mod ? fv.modals : fv.conts;
}

NameSet unite(NameSet a, const NameSet& b) {
  a.insert(b.begin(), b.end());
  return a;
}

struct ContPayload {
  std::string bx;
  std::string by;
  Comp body;
  std::string k;
  FreeNames range;  // free names of body other than bx, by
};

class Worker {
 public:
  Worker(const SubstOptions& options, std::uint64_t& used) : options_(options), used_(used) {
    used_ = 0;
  }

  Expr apply(const Expr& e, const Subst& s);
  Comp apply(const Comp& c, const Subst& s);
  Stmt apply(const Stmt& st, const Subst& s);
  Handler apply(const Handler& h, const Subst& s);
  HandlingSequence apply(const HandlingSequence& seq, const Subst& s);

  Comp monadic(const Comp& c, const std::string& x, const Comp& cont);
  Comp cont(const Comp& t, const ContPayload& p);
  Handler cont(const Handler& h, const ContPayload& p);
  Comp handle(const Comp& c, const Handler& h, const Expr& state);
  Comp handle_seq(const Comp& c, const HandlingSequence& theta);
  Expr eval_meta(const Comp& c);

  Expr norm(const Expr& e) const { return options_.normalize ? norm_expr(e) : e; }
  Comp norm(const Comp& c) const { return options_.normalize ? norm_comp(c) : c; }

 private:
  const SubstOptions& options_;
  std::uint64_t& used_;

  void tick() {
    if (++used_ > options_.fuel) throw SubstFuelExhausted("substitution fuel exhausted");
  }

  // Removes `binders` from the domain of `s` and renames those that would
  // capture a name of its range. `body_names` yields the free names of the
  // scope in namespace `ns` and is only consulted when a rename happens.
  template <typename F>
  Subst cross(const Subst& s, Ns ns, std::vector<std::string*> binders, F body_names) {
    Subst out = s;
    for (auto* b : binders) out.erase(ns, *b);
    if (out.empty()) return out;
    std::optional<NameSet> scope;
    for (std::size_t i = 0; i < binders.size(); ++i) {
      std::string& b = *binders[i];
      if (!out.range(ns).count(b)) continue;
      if (!scope) scope = body_names();
      NameSet avoid = unite(out.range(ns), *scope);
      for (auto* other : binders) avoid.insert(*other);
      std::string fresh = fresh_name(name_stem(b), avoid);
      out.rename(ns, b, fresh);
      b = fresh;
    }
    return out;
  }

  std::pair<FixDef, Subst> apply_fix(const FixDef& d, const NameSet& scope_values, const Subst& s);

  // Renames binder `b` of namespace `ns` in `scope` when it belongs to
  // `danger`. Returns the new binder name.
  std::string avoid(Ns ns, const std::string& b, Comp& scope, const NameSet& danger,
                    const NameSet& extra = {}) {
    if (!danger.count(b)) return b;
    NameSet av = unite(unite(danger, names_in(free_vars(scope), ns)), extra);
    std::string fresh = fresh_name(name_stem(b), av);
    scope = apply(scope, rename_subst(ns, b, fresh));
    return fresh;
  }

  // Renames the recursive function name of a fix when it belongs to `danger`.
  void avoid_fix(FixDef& def, Comp& scope, const NameSet& danger, const NameSet& extra = {}) {
    if (!danger.count(def.f)) return;
    NameSet av = unite(unite(danger, free_vars(scope).values), extra);
    av = unite(av, free_vars(def.body).values);
    av.insert(def.x);
    std::string fresh = fresh_name(name_stem(def.f), av);
    if (def.x != def.f) def.body = apply(def.body, rename_subst(Ns::Val, def.f, fresh));
    scope = apply(scope, rename_subst(Ns::Val, def.f, fresh));
    def.f = fresh;
  }

  Comp handle_impl(const Comp& c, const Handler& h, const FreeNames& fh, const Expr& state);
  Comp monadic_impl(const Comp& c, const std::string& x, const Comp& cont, const NameSet& danger_values,
                    const NameSet& danger_modals);
};

std::pair<FixDef, Subst> Worker::apply_fix(const FixDef& d, const NameSet& scope_values,
                                           const Subst& s) {
  FixDef out = d;
  Subst body_s = s;
  Subst scope_s = s;
  body_s.erase(Ns::Val, d.f);
  body_s.erase(Ns::Val, d.x);
  scope_s.erase(Ns::Val, d.f);
  if (s.range_values.count(d.f)) {
    NameSet av = unite(unite(s.range_values, free_vars(d.body).values), scope_values);
    av.insert(d.x);
    std::string fresh = fresh_name(name_stem(d.f), av);
    if (d.x != d.f) body_s.rename(Ns::Val, d.f, fresh);
    scope_s.rename(Ns::Val, d.f, fresh);
    out.f = fresh;
  }
  if (body_s.range_values.count(d.x) && !body_s.empty()) {
    NameSet av = unite(body_s.range_values, free_vars(d.body).values);
    av.insert(out.f);
    std::string fresh = fresh_name(name_stem(d.x), av);
    body_s.rename(Ns::Val, d.x, fresh);
    out.x = fresh;
  }
  if (!body_s.empty()) out.body = apply(d.body, body_s);
  return {out, scope_s};
}

Expr Worker::apply(const Expr& e, const Subst& s) {
  if (s.empty()) return e;
  tick();
  Span sp = e->span;
  auto same = [](const auto&... pairs) { return ((pairs.first == pairs.second) && ...); };
  return std::visit(
      overloaded{
          [&](const expr::Var& v) -> Expr {
            auto it = s.values.find(v.name);
            return it == s.values.end() ? e : it->second;
          },
          [&](const expr::Lam& l) -> Expr {
            std::string x = l.x;
            Subst inner = cross(s, Ns::Val, {&x}, [&] { return free_vars(l.body).values; });
            Expr body = apply(l.body, inner);
            if (x == l.x && body == l.body) return e;
            return make_expr(expr::Lam{x, l.annot, body}, sp);
          },
          [&](const expr::App& a) -> Expr {
            Expr f = apply(a.fun, s);
            Expr x = apply(a.arg, s);
            if (same(std::pair{f, a.fun}, std::pair{x, a.arg})) return e;
            return make_expr(expr::App{f, x}, sp);
          },
          [&](const expr::Box& b) -> Expr {
            Comp body = apply(b.body, s);
            if (body == b.body) return e;
            return make_expr(expr::Box{b.theory, body}, sp);
          },
          [&](const expr::LetBox& l) -> Expr {
            Expr bound = apply(l.bound, s);
            std::string u = l.u;
            Subst inner = cross(s, Ns::Mod, {&u}, [&] { return free_vars(l.body).modals; });
            Expr body = apply(l.body, inner);
            if (bound == l.bound && u == l.u && body == l.body) return e;
            return make_expr(expr::LetBox{u, bound, body}, sp);
          },
          [&](const expr::Eval& ev) -> Expr {
            HandlingSequence seq = apply(ev.seq, s);
            if (s.target == ev.u) return eval_meta(handle_seq(s.payload, seq));
            auto it = s.modals.find(ev.u);
            std::string u = it == s.modals.end() ? ev.u : it->second;
            return make_expr(expr::Eval{seq, u}, sp);
          },
          [&](const expr::Fix& f) -> Expr {
            auto [def, scope_s] = apply_fix(f.def, free_vars(f.scope).values, s);
            Expr scope = apply(f.scope, scope_s);
            return make_expr(expr::Fix{def, scope}, sp);
          },
          [&](const expr::Pair& p) -> Expr {
            Expr l = apply(p.left, s);
            Expr r = apply(p.right, s);
            if (same(std::pair{l, p.left}, std::pair{r, p.right})) return e;
            return make_expr(expr::Pair{l, r}, sp);
          },
          [&](const expr::Proj& p) -> Expr {
            Expr x = apply(p.pair, s);
            if (x == p.pair) return e;
            return norm(make_expr(expr::Proj{p.index, x}, sp));
          },
          [&](const expr::List& l) -> Expr {
            expr::List out{l.elem, {}};
            bool changed = false;
            for (const auto& item : l.items) {
              out.items.push_back(apply(item, s));
              changed |= out.items.back() != item;
            }
            if (!changed) return e;
            return make_expr(std::move(out), sp);
          },
          [&](const expr::Append& a) -> Expr {
            Expr l = apply(a.left, s);
            Expr r = apply(a.right, s);
            if (same(std::pair{l, a.left}, std::pair{r, a.right})) return e;
            return norm(make_expr(expr::Append{l, r}, sp));
          },
          [&](const expr::Arith& a) -> Expr {
            Expr l = apply(a.lhs, s);
            Expr r = apply(a.rhs, s);
            if (same(std::pair{l, a.lhs}, std::pair{r, a.rhs})) return e;
            return norm(make_expr(expr::Arith{a.op, l, r}, sp));
          },
          [&](const expr::Cmp& c) -> Expr {
            Expr l = apply(c.lhs, s);
            Expr r = apply(c.rhs, s);
            if (same(std::pair{l, c.lhs}, std::pair{r, c.rhs})) return e;
            return norm(make_expr(expr::Cmp{c.op, l, r}, sp));
          },
          [&](const expr::If& i) -> Expr {
            Expr c = apply(i.cond, s);
            Expr a = apply(i.then_branch, s);
            Expr b = apply(i.else_branch, s);
            if (same(std::pair{c, i.cond}, std::pair{a, i.then_branch}, std::pair{b, i.else_branch}))
              return e;
            return norm(make_expr(expr::If{c, a, b}, sp));
          },
          [&](const auto&) -> Expr { return e; },
      },
      e->node);
}

Comp Worker::apply(const Comp& c, const Subst& s) {
  if (s.empty()) return c;
  tick();
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> Comp {
            Expr v = apply(r.value, s);
            if (v == r.value) return c;
            return make_comp(comp::Ret{v}, sp);
          },
          [&](const comp::Bind& b) -> Comp {
            auto* h = as<stmt::Handle>(b.stmt);
            if (h && s.target == h->u) {
              HandlingSequence seq = apply(h->seq, s);
              Handler handler = apply(h->handler, s);
              Expr init = apply(h->init, s);
              std::string x = b.x;
              Subst inner = cross(s, Ns::Val, {&x}, [&] { return free_vars(b.rest).values; });
              Comp rest = apply(b.rest, inner);
              if (options_.observer)
                options_.observer(ModalHandleEvent{s.theory, s.payload, seq, handler, init, x, rest});
              return monadic(handle(handle_seq(s.payload, seq), handler, init), x, rest);
            }
            Stmt st = apply(b.stmt, s);
            std::string x = b.x;
            Subst inner = cross(s, Ns::Val, {&x}, [&] { return free_vars(b.rest).values; });
            Comp rest = apply(b.rest, inner);
            if (st == b.stmt && x == b.x && rest == b.rest) return c;
            return make_comp(comp::Bind{st, x, rest}, sp);
          },
          [&](const comp::LetBox& l) -> Comp {
            Expr bound = apply(l.bound, s);
            std::string u = l.u;
            Subst inner = cross(s, Ns::Mod, {&u}, [&] { return free_vars(l.body).modals; });
            Comp body = apply(l.body, inner);
            if (bound == l.bound && u == l.u && body == l.body) return c;
            return make_comp(comp::LetBox{u, bound, body}, sp);
          },
          [&](const comp::Fix& f) -> Comp {
            auto [def, scope_s] = apply_fix(f.def, free_vars(f.scope).values, s);
            Comp scope = apply(f.scope, scope_s);
            return make_comp(comp::Fix{def, scope}, sp);
          },
          [&](const comp::If& i) -> Comp {
            Expr cond = apply(i.cond, s);
            Comp a = apply(i.then_branch, s);
            Comp b = apply(i.else_branch, s);
            if (cond == i.cond && a == i.then_branch && b == i.else_branch) return c;
            return norm(make_comp(comp::If{cond, a, b}, sp));
          },
          [&](const auto&) -> Comp {
            throw InternalError("surface sugar reached the substitution engine");
          },
      },
      c->node);
}

Stmt Worker::apply(const Stmt& st, const Subst& s) {
  if (s.empty()) return st;
  tick();
  Span sp = st->span;
  return std::visit(
      overloaded{
          [&](const stmt::OpCall& o) -> Stmt {
            Expr arg = apply(o.arg, s);
            if (arg == o.arg) return st;
            return make_stmt(stmt::OpCall{o.op, arg}, sp);
          },
          [&](const stmt::ContCall& k) -> Stmt {
            Expr arg = apply(k.arg, s);
            Expr state = apply(k.state, s);
            auto it = s.conts.find(k.k);
            std::string name = it == s.conts.end() ? k.k : it->second;
            if (arg == k.arg && state == k.state && name == k.k) return st;
            return make_stmt(stmt::ContCall{name, arg, state}, sp);
          },
          [&](const stmt::Handle& h) -> Stmt {
            if (s.target == h.u)
              throw InternalError("modal substitution target in a statement without continuation");
            auto it = s.modals.find(h.u);
            std::string u = it == s.modals.end() ? h.u : it->second;
            return make_stmt(stmt::Handle{u, apply(h.seq, s), apply(h.handler, s), apply(h.init, s)},
                             sp);
          },
      },
      st->node);
}

Handler Worker::apply(const Handler& h, const Subst& s) {
  if (s.empty()) return h;
  tick();
  Handler out = h;
  {
    ReturnClause& r = out.ret;
    Subst inner = cross(s, Ns::Val, {&r.x, &r.z}, [&] { return free_vars(h.ret.body).values; });
    r.body = apply(h.ret.body, inner);
  }
  for (std::size_t i = 0; i < out.clauses.size(); ++i) {
    OpClause& c = out.clauses[i];
    const Comp& body = h.clauses[i].body;
    Subst vals = cross(s, Ns::Val, {&c.x, &c.z}, [&] { return free_vars(body).values; });
    Subst inner = cross(vals, Ns::Cont, {&c.k}, [&] { return free_vars(body).conts; });
    c.body = apply(body, inner);
  }
  return out;
}

HandlingSequence Worker::apply(const HandlingSequence& seq, const Subst& s) {
  if (s.empty()) return seq;
  HandlingSequence out;
  for (const auto& clause : seq) {
    SeqClause c = clause;
    c.handler = apply(clause.handler, s);
    c.init = apply(clause.init, s);
    Subst inner = cross(s, Ns::Val, {&c.x}, [&] { return free_vars(clause.cont).values; });
    c.cont = apply(clause.cont, inner);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

Comp Worker::monadic(const Comp& c, const std::string& x, const Comp& cont) {
  FreeNames fc = free_vars(cont);
  NameSet danger = fc.values;
  danger.erase(x);
  return monadic_impl(c, x, cont, danger, fc.modals);
}

Comp Worker::monadic_impl(const Comp& c, const std::string& x, const Comp& cont,
                          const NameSet& danger_values, const NameSet& danger_modals) {
  tick();
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> Comp { return apply(cont, value_subst({{x, r.value}})); },
          [&](const comp::Bind& b) -> Comp {
            Comp rest = b.rest;
            std::string y = avoid(Ns::Val, b.x, rest, danger_values, {x});
            return make_comp(
                comp::Bind{b.stmt, y, monadic_impl(rest, x, cont, danger_values, danger_modals)}, sp);
          },
          [&](const comp::LetBox& l) -> Comp {
            Comp body = l.body;
            std::string u = avoid(Ns::Mod, l.u, body, danger_modals);
            return make_comp(
                comp::LetBox{u, l.bound, monadic_impl(body, x, cont, danger_values, danger_modals)}, sp);
          },
          [&](const comp::Fix& f) -> Comp {
            FixDef def = f.def;
            Comp scope = f.scope;
            avoid_fix(def, scope, danger_values, {x});
            return make_comp(
                comp::Fix{def, monadic_impl(scope, x, cont, danger_values, danger_modals)}, sp);
          },
          [&](const comp::If& i) -> Comp {
            return norm(make_comp(
                comp::If{i.cond, monadic_impl(i.then_branch, x, cont, danger_values, danger_modals),
                         monadic_impl(i.else_branch, x, cont, danger_values, danger_modals)},
                sp));
          },
          [&](const auto&) -> Comp {
            throw InternalError("surface sugar reached the substitution engine");
          },
      },
      c->node);
}

Comp Worker::cont(const Comp& t, const ContPayload& p) {
  tick();
  Span sp = t->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret&) -> Comp { return t; },
          [&](const comp::Bind& b) -> Comp {
            Comp rest = b.rest;
            std::string y = avoid(Ns::Val, b.x, rest, p.range.values);
            if (auto* k = as<stmt::ContCall>(b.stmt); k && k->k == p.k) {
              Comp inst = apply(p.body, value_subst({{p.bx, k->arg}, {p.by, k->state}}));
              return monadic(inst, y, cont(rest, p));
            }
            Stmt st = b.stmt;
            if (auto* h = as<stmt::Handle>(b.stmt))
              st = make_stmt(stmt::Handle{h->u, h->seq, cont(h->handler, p), h->init}, b.stmt->span);
            return make_comp(comp::Bind{st, y, cont(rest, p)}, sp);
          },
          [&](const comp::LetBox& l) -> Comp {
            Comp body = l.body;
            std::string u = avoid(Ns::Mod, l.u, body, p.range.modals);
            return make_comp(comp::LetBox{u, l.bound, cont(body, p)}, sp);
          },
          [&](const comp::Fix& f) -> Comp {
            FixDef def = f.def;
            Comp scope = f.scope;
            avoid_fix(def, scope, p.range.values);
            return make_comp(comp::Fix{def, cont(scope, p)}, sp);
          },
          [&](const comp::If& i) -> Comp {
            return make_comp(comp::If{i.cond, cont(i.then_branch, p), cont(i.else_branch, p)}, sp);
          },
          [&](const auto&) -> Comp {
            throw InternalError("surface sugar reached the substitution engine");
          },
      },
      t->node);
}

Handler Worker::cont(const Handler& h, const ContPayload& p) {
  tick();
  Handler out = h;
  {
    ReturnClause& r = out.ret;
    Comp body = r.body;
    std::string x = avoid(Ns::Val, r.x, body, p.range.values, {r.z});
    std::string z = avoid(Ns::Val, r.z, body, p.range.values, {x});
    r.x = x;
    r.z = z;
    r.body = cont(body, p);
  }
  for (auto& c : out.clauses) {
    if (c.k == p.k) continue;
    Comp body = c.body;
    c.x = avoid(Ns::Val, c.x, body, p.range.values, {c.z});
    c.z = avoid(Ns::Val, c.z, body, p.range.values, {c.x});
    c.k = avoid(Ns::Cont, c.k, body, p.range.conts, {p.k});
    c.body = cont(body, p);
  }
  return out;
}

Comp Worker::handle(const Comp& c, const Handler& h, const Expr& state) {
  return handle_impl(c, h, free_vars(h), state);
}

Comp Worker::handle_impl(const Comp& c, const Handler& h, const FreeNames& fh, const Expr& state) {
  tick();
  if (options_.handle_observer) options_.handle_observer(HandleCall{c, h, state});
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> Comp {
            return apply(h.ret.body, value_subst({{h.ret.x, r.value}, {h.ret.z, state}}));
          },
          [&](const comp::Bind& b) -> Comp {
            if (auto* op = as<stmt::OpCall>(b.stmt)) {
              const OpClause* clause = h.find(op->op);
              if (!clause) throw InternalError("handler has no clause for operation '" + op->op + "'");
              Comp rest = b.rest;
              std::string y = avoid(Ns::Val, b.x, rest, fh.values);
              NameSet taken = unite(free_vars(rest).values, fh.values);
              taken.insert(y);
              std::string z = fresh_name(name_stem(clause->z), taken);
              Comp inner = handle_impl(rest, h, fh, var(z));
              Comp body = apply(clause->body, value_subst({{clause->z, state}, {clause->x, op->arg}}));
              ContPayload p{y, z, inner, clause->k, free_vars(inner)};
              p.range.values.erase(y);
              p.range.values.erase(z);
              return cont(body, p);
            }
            if (auto* inner = as<stmt::Handle>(b.stmt)) {
              HandlingSequence seq = inner->seq;
              seq.push_back(SeqClause{inner->handler, inner->init, b.x, b.rest});
              Stmt outer = make_stmt(stmt::Handle{inner->u, seq, h, state}, b.stmt->span);
              return make_comp(comp::Bind{outer, "x", make_comp(comp::Ret{var("x")}, sp)}, sp);
            }
            throw InternalError("continuation call in handled computation");
          },
          [&](const comp::LetBox& l) -> Comp {
            Comp body = l.body;
            std::string u = avoid(Ns::Mod, l.u, body, unite(fh.modals, free_vars(state).modals));
            return make_comp(comp::LetBox{u, l.bound, handle_impl(body, h, fh, state)}, sp);
          },
          [&](const comp::Fix& f) -> Comp {
            FixDef def = f.def;
            Comp scope = f.scope;
            avoid_fix(def, scope, unite(fh.values, free_vars(state).values));
            return make_comp(comp::Fix{def, handle_impl(scope, h, fh, state)}, sp);
          },
          [&](const comp::If& i) -> Comp {
            return make_comp(
                comp::If{i.cond, handle_impl(i.then_branch, h, fh, state),
                         handle_impl(i.else_branch, h, fh, state)},
                sp);
          },
          [&](const auto&) -> Comp {
            throw InternalError("surface sugar reached the substitution engine");
          },
      },
      c->node);
}

Comp Worker::handle_seq(const Comp& c, const HandlingSequence& theta) {
  Comp out = c;
  for (const auto& clause : theta) out = monadic(handle(out, clause.handler, clause.init), clause.x, clause.cont);
  return out;
}

Expr Worker::eval_meta(const Comp& c) {
  tick();
  Span sp = c->span;
  return std::visit(
      overloaded{
          [&](const comp::Ret& r) -> Expr { return r.value; },
          [&](const comp::Bind& b) -> Expr {
            auto* h = as<stmt::Handle>(b.stmt);
            if (!h) throw InternalError("eval of a computation that performs an effect");
            HandlingSequence seq = h->seq;
            seq.push_back(SeqClause{h->handler, h->init, b.x, b.rest});
            return make_expr(expr::Eval{seq, h->u}, sp);
          },
          [&](const comp::LetBox& l) -> Expr {
            return make_expr(expr::LetBox{l.u, l.bound, eval_meta(l.body)}, sp);
          },
          [&](const comp::Fix& f) -> Expr { return make_expr(expr::Fix{f.def, eval_meta(f.scope)}, sp); },
          [&](const comp::If& i) -> Expr {
            return norm(make_expr(expr::If{i.cond, eval_meta(i.then_branch), eval_meta(i.else_branch)}, sp));
          },
          [&](const auto&) -> Expr {
            throw InternalError("surface sugar reached the substitution engine");
          },
      },
      c->node);
}

Subst modal_target(const Theory& theory, const Comp& c, const std::string& u) {
  Subst s;
  s.target = u;
  s.theory = theory;
  s.payload = c;
  FreeNames fv = free_vars(c);
  s.range_values = fv.values;
  s.range_modals = fv.modals;
  s.range_conts = fv.conts;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

SubstEngine::SubstEngine(SubstOptions options) : options_(std::move(options)) {}

Expr SubstEngine::subst_expr(const Expr& target, const Expr& e, const std::string& x) {
  return Worker(options_, used_).apply(target, value_subst({{x, e}}));
}
Comp SubstEngine::subst_expr(const Comp& target, const Expr& e, const std::string& x) {
  return Worker(options_, used_).apply(target, value_subst({{x, e}}));
}
Stmt SubstEngine::subst_expr(const Stmt& target, const Expr& e, const std::string& x) {
  return Worker(options_, used_).apply(target, value_subst({{x, e}}));
}
Handler SubstEngine::subst_expr(const Handler& target, const Expr& e, const std::string& x) {
  return Worker(options_, used_).apply(target, value_subst({{x, e}}));
}

Comp SubstEngine::subst_monadic(const Comp& c, const std::string& x, const Comp& cont) {
  return Worker(options_, used_).monadic(c, x, cont);
}

namespace {
ContPayload make_payload(const std::string& bx, const std::string& by, const Comp& body,
                         const std::string& k) {
  ContPayload p{bx, by, body, k, free_vars(body)};
  p.range.values.erase(bx);
  p.range.values.erase(by);
  return p;
}
}  // namespace

Comp SubstEngine::subst_cont(const Comp& target, const std::string& bx, const std::string& by,
                             const Comp& body, const std::string& k) {
  return Worker(options_, used_).cont(target, make_payload(bx, by, body, k));
}

Handler SubstEngine::subst_cont(const Handler& target, const std::string& bx, const std::string& by,
                                const Comp& body, const std::string& k) {
  return Worker(options_, used_).cont(target, make_payload(bx, by, body, k));
}

Comp SubstEngine::handle_with(const Comp& c, const Handler& h, const Expr& state) {
  return Worker(options_, used_).handle(c, h, state);
}

Comp SubstEngine::handle_seq(const Comp& c, const HandlingSequence& theta) {
  return Worker(options_, used_).handle_seq(c, theta);
}

Expr SubstEngine::modal_subst(const Expr& target, const Theory& theory, const Comp& c,
                              const std::string& u) {
  return Worker(options_, used_).apply(target, modal_target(theory, c, u));
}
Comp SubstEngine::modal_subst(const Comp& target, const Theory& theory, const Comp& c,
                              const std::string& u) {
  return Worker(options_, used_).apply(target, modal_target(theory, c, u));
}
Handler SubstEngine::modal_subst(const Handler& target, const Theory& theory, const Comp& c,
                                 const std::string& u) {
  return Worker(options_, used_).apply(target, modal_target(theory, c, u));
}
HandlingSequence SubstEngine::modal_subst(const HandlingSequence& target, const Theory& theory,
                                          const Comp& c, const std::string& u) {
  return Worker(options_, used_).apply(target, modal_target(theory, c, u));
}

Expr SubstEngine::eval_meta(const Comp& c) { return Worker(options_, used_).eval_meta(c); }

Expr SubstEngine::normalize_root(const Expr& e) const { return norm_expr(e); }
Comp SubstEngine::normalize_root(const Comp& c) const { return norm_comp(c); }

Handler id_handler(const Theory& theory) {
  Handler h;
  h.theory = theory;
  for (const auto& op : theory.ops) {
    Comp body = ecmtt::bind(op_call(op.name, var("x")), "y",
                     ecmtt::bind(cont_call("k", var("y"), var("z")), "r", ret(var("r"))));
    h.clauses.push_back(OpClause{op.name, "x", "k", "z", body});
  }
  h.ret = ReturnClause{"x", "z", ret(var("x"))};
  return h;
}

Expr eta_expand(const Expr& e, const Theory& theory) {
  Stmt handle = make_stmt(stmt::Handle{"u", {}, id_handler(theory), unit_lit()});
  Expr boxed = make_expr(expr::Box{theory, ecmtt::bind(handle, "x", ret(var("x")))});
  return make_expr(expr::LetBox{"u", e, boxed});
}

}  // namespace ecmtt
