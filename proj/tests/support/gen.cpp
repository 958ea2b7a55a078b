#include "gen.hpp"

#include <algorithm>

namespace ecmtt::testing {

namespace {

const std::vector<std::string> kValueNames = {"x", "y", "z", "a", "b", "n"};
const std::vector<std::string> kModalNames = {"u", "v", "w"};
const std::vector<std::string> kContNames = {"k", "k1"};

const Type kHidden = base_type("hidden");

bool inhabited(const Type& t) { return !as<types::Bottom>(t); }

}  // namespace

const std::vector<OpDecl>& op_pool() {
  static const std::vector<OpDecl> pool = {
      {"get", unit_type(), int_type()},   {"set", int_type(), unit_type()},
      {"flip", unit_type(), bool_type()}, {"raise", unit_type(), bottom_type()},
      {"pick", int_type(), int_type()},
  };
  return pool;
}

Env Env::with_value(std::string name, Type t) const {
  Env out = *this;
  out.values.push_back(ValBind{std::move(name), std::move(t)});
  return out;
}

Env Env::with_modal(std::string name, Type t, Theory th) const {
  Env out = *this;
  out.modals.push_back(ModalBind{std::move(name), std::move(t), std::move(th)});
  return out;
}

ModalContext Env::delta() const {
  ModalContext d;
  for (const auto& v : values) d = d.with_value(v.name, v.type);
  for (const auto& m : modals) d = d.with_modal(m.name, m.type, m.theory);
  return d;
}

Effects Effects::with_cont(ContDecl k) const {
  Effects out = *this;
  out.conts.push_back(std::move(k));
  return out;
}

EffectContext Effects::gamma() const {
  EffectContext g(ops);
  for (const auto& k : conts) g = g.with_cont(k);
  return g;
}

Gen::Gen(std::uint64_t seed, GenLimits limits) : rng_(seed), limits_(limits) {}

int Gen::below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

bool Gen::chance(int percent) { return below(100) < percent; }

std::string Gen::value_name() { return kValueNames[below(static_cast<int>(kValueNames.size()))]; }
std::string Gen::modal_name() { return kModalNames[below(static_cast<int>(kModalNames.size()))]; }
std::string Gen::cont_name() { return kContNames[below(static_cast<int>(kContNames.size()))]; }

Theory Gen::theory() {
  std::vector<OpDecl> pool = op_pool();
  std::shuffle(pool.begin(), pool.end(), rng_);
  std::size_t n = static_cast<std::size_t>(below(static_cast<int>(limits_.max_ops) + 1));
  Theory out;
  out.ops.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Theory Gen::nonempty_theory() {
  Theory t;
  while (t.empty()) t = theory();
  return t;
}

Type Gen::small_type() {
  switch (below(4)) {
    case 0:
      return int_type();
    case 1:
      return bool_type();
    case 2:
      return unit_type();
    default:
      return prod_type(int_type(), bool_type());
  }
}

Type Gen::type(int depth) {
  if (depth <= 0) return small_type();
  switch (below(8)) {
    case 0:
    case 1:
    case 2:
      return small_type();
    case 3:
      return prod_type(type(depth - 1), type(depth - 1));
    case 4:
      return list_type(type(depth - 1));
    case 5:
      return arrow_type(small_type(), type(depth - 1));
    default:
      return box_type(theory(), type(depth - 1));
  }
}

std::vector<std::string> Gen::vars_of(const Env& env, const Type& t) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    const auto& v = env.values[i];
    bool shadowed = false;
    for (std::size_t j = i + 1; j < env.values.size(); ++j)
      if (env.values[j].name == v.name) shadowed = true;
    if (!shadowed && type_equal(v.type, t)) out.push_back(v.name);
  }
  return out;
}

std::vector<const ModalBind*> Gen::visible_modals(const Env& env) const {
  std::vector<const ModalBind*> out;
  for (std::size_t i = 0; i < env.modals.size(); ++i) {
    bool shadowed = false;
    for (std::size_t j = i + 1; j < env.modals.size(); ++j)
      if (env.modals[j].name == env.modals[i].name) shadowed = true;
    if (!shadowed) out.push_back(&env.modals[i]);
  }
  return out;
}

std::vector<const ContDecl*> Gen::visible_conts(const Effects& fx) const {
  std::vector<const ContDecl*> out;
  for (std::size_t i = 0; i < fx.conts.size(); ++i) {
    bool shadowed = false;
    for (std::size_t j = i + 1; j < fx.conts.size(); ++j)
      if (fx.conts[j].name == fx.conts[i].name) shadowed = true;
    if (!shadowed) out.push_back(&fx.conts[i]);
  }
  return out;
}

Expr Gen::base_expr(const Env& env, const Type& t, int depth) {
  if (as<types::Int>(t)) return int_lit(below(20));
  if (as<types::Bool>(t)) return bool_lit(chance(50));
  if (as<types::Unit>(t)) return unit_lit();
  if (auto* p = as<types::Prod>(t))
    return pair(expr(env, p->left, depth - 1), expr(env, p->right, depth - 1));
  if (auto* l = as<types::List>(t)) {
    expr::List list;
    int n = depth > 0 ? below(3) : 0;
    if (n == 0) list.elem = l->elem;
    for (int i = 0; i < n; ++i) list.items.push_back(expr(env, l->elem, depth - 1));
    return make_expr(std::move(list));
  }
  if (auto* a = as<types::Arrow>(t)) {
    std::string x = value_name();
    return make_expr(expr::Lam{x, a->dom, expr(env.with_value(x, a->dom), a->cod, depth - 1)});
  }
  if (auto* b = as<types::Box>(t)) {
    // Boxed bodies only see the box theory.
    return make_expr(expr::Box{b->theory, comp(env, Effects{b->theory, {}}, b->body, depth - 1)});
  }
  throw std::logic_error("uninhabited type requested from the generator");
}

Expr Gen::expr(const Env& env, const Type& t, int depth) {
  auto vars = vars_of(env, t);
  if (!vars.empty() && chance(depth <= 0 ? 70 : 25)) return var(vars[below(static_cast<int>(vars.size()))]);
  if (depth <= 0) return base_expr(env, t, 0);
  switch (below(11)) {
    case 0: {
      // beta redex
      Type a = small_type();
      std::string x = value_name();
      Expr fn = make_expr(expr::Lam{x, a, expr(env.with_value(x, a), t, depth - 1)});
      return make_expr(expr::App{fn, expr(env, a, depth - 1)});
    }
    case 1:
      return make_expr(expr::If{expr(env, bool_type(), depth - 1), expr(env, t, depth - 1),
                                expr(env, t, depth - 1)});
    case 2: {
      Type a = type(1);
      Theory th = theory();
      std::string u = modal_name();
      Expr bound = expr(env, box_type(th, a), depth - 1);
      return make_expr(expr::LetBox{u, bound, expr(env.with_modal(u, a, th), t, depth - 1)});
    }
    case 3: {
      // eval over a freshly bound box, sometimes through a handling sequence
      Theory th = chance(50) ? Theory{} : nonempty_theory();
      Type a = type(1);
      std::string u = modal_name();
      Expr bound = expr(env, box_type(th, a), depth - 1);
      Env inner = env.with_modal(u, a, th);
      expr::Eval ev;
      ev.u = u;
      if (!th.empty() || chance(30)) ev.seq = hseq(inner, Theory{}, th, a, t, depth - 1);
      else if (!type_equal(a, t)) {
        return make_expr(expr::LetBox{u, bound, expr(inner, t, depth - 1)});
      }
      return make_expr(expr::LetBox{u, bound, make_expr(std::move(ev))});
    }
    case 4: {
      FixDef def;
      def.f = value_name();
      def.x = value_name();
      def.annot = small_type();
      def.theory = theory();
      def.ret = type(1);
      Type ft = arrow_type(def.annot, box_type(def.theory, def.ret));
      // f shadows like the checker expects but is never picked, so bodies
      // do not recurse.
      def.body = comp(env.with_value(def.f, kHidden).with_value(def.x, def.annot),
                      Effects{def.theory, {}}, def.ret, depth - 1);
      Expr scope = expr(env.with_value(def.f, ft), t, depth - 1);
      return make_expr(expr::Fix{std::move(def), scope});
    }
    case 5: {
      // projection out of a pair
      Type other = small_type();
      bool first = chance(50);
      Type pt = first ? prod_type(t, other) : prod_type(other, t);
      return make_expr(expr::Proj{first ? 1 : 2, expr(env, pt, depth - 1)});
    }
    default:
      break;
  }
  if (as<types::Int>(t) && chance(60)) {
    int op = below(4);
    if (op == 3) {
      return make_expr(expr::Arith{ArithOp::Div, expr(env, t, depth - 1), int_lit(1 + below(5))});
    }
    static const ArithOp kOps[] = {ArithOp::Add, ArithOp::Sub, ArithOp::Mul};
    return make_expr(expr::Arith{kOps[op], expr(env, t, depth - 1), expr(env, t, depth - 1)});
  }
  if (as<types::Bool>(t) && chance(60)) {
    return make_expr(expr::Cmp{chance(50) ? CmpOp::Eq : CmpOp::Lt, expr(env, int_type(), depth - 1),
                               expr(env, int_type(), depth - 1)});
  }
  if (as<types::List>(t) && chance(40)) {
    return make_expr(expr::Append{expr(env, t, depth - 1), expr(env, t, depth - 1)});
  }
  return base_expr(env, t, depth);
}

Handler Gen::handler(const Env& env, const Effects& fx, const Theory& psi, const Type& a,
                     const Type& s, const Type& b, int depth) {
  Handler h;
  h.theory = psi;
  h.ret.x = value_name();
  do {
    h.ret.z = value_name();
  } while (h.ret.z == h.ret.x);
  h.ret.body = comp(env.with_value(h.ret.x, a).with_value(h.ret.z, s), fx, b, depth - 1);
  for (const auto& op : psi.ops) {
    OpClause c;
    c.op = op.name;
    c.x = value_name();
    do {
      c.z = value_name();
    } while (c.z == c.x);
    c.k = cont_name();
    Env inner = env.with_value(c.x, op.in).with_value(c.z, s);
    Effects inner_fx = fx.with_cont(ContDecl{c.k, op.out, s, b});
    if (fx.ops.find("raise") && chance(10)) {
      // aborting clause typed at bot
      std::string y = value_name();
      c.body = ecmtt::bind(op_call("raise", unit_lit()), y, ret(var(y)));
    } else if (inhabited(op.out) && chance(60)) {
      // resume at least once
      std::string y = value_name();
      Stmt call = cont_call(c.k, expr(inner, op.out, depth - 2), expr(inner, s, depth - 2));
      if (chance(50)) {
        c.body = ecmtt::bind(call, y, ret(var(y)));
      } else {
        c.body = ecmtt::bind(call, y, comp(inner.with_value(y, b), inner_fx, b, depth - 2));
      }
    } else {
      c.body = comp(inner, inner_fx, b, depth - 1);
    }
    h.clauses.push_back(std::move(c));
  }
  return h;
}

HandlingSequence Gen::hseq(const Env& env, const Theory& into, const Theory& psi, const Type& a,
                           const Type& out, int depth) {
  // [h init s as x. c] : a => psi ~> out, with h and c over `into`.
  SeqClause c;
  Type s = small_type();
  Type b = type(1);
  c.handler = handler(env, Effects{into, {}}, psi, a, s, b, depth - 1);
  c.init = expr(env, s, depth - 1);
  c.x = value_name();
  c.cont = comp(env.with_value(c.x, b), Effects{into, {}}, out, depth - 1);
  return {c};
}

Comp Gen::handle_comp(const Env& env, const Effects& fx, const Type& t, int depth) {
  // x <- handle u [seq] with h init s; rest
  Env inner = env;
  const ModalBind* target = nullptr;
  auto modals = visible_modals(env);
  std::string bound_u;
  Expr bound;
  if (!modals.empty() && chance(50)) {
    target = modals[below(static_cast<int>(modals.size()))];
  } else {
    bound_u = modal_name();
    Theory th = theory();
    Type a = type(1);
    bound = expr(env, box_type(th, a), depth - 1);
    inner = env.with_modal(bound_u, a, th);
    target = &inner.modals.back();
  }
  std::string u = target->name;
  Type a = target->type;
  Theory psi = target->theory;
  Type s = small_type();
  Type b = type(1);
  Theory handled = psi;
  HandlingSequence seq;
  Type hin = a;
  if (chance(25)) {
    handled = theory();
    hin = type(1);
    seq = hseq(inner, handled, psi, a, hin, depth - 1);
  }
  Handler h = handler(inner, fx, handled, hin, s, b, depth - 1);
  stmt::Handle hs{u, seq, h, expr(inner, s, depth - 1)};
  std::string x = value_name();
  Comp rest = type_equal(b, t) && chance(40) ? ret(var(x))
                                              : comp(inner.with_value(x, b), fx, t, depth - 1);
  Comp out = ecmtt::bind(make_stmt(std::move(hs)), x, rest);
  if (!bound_u.empty()) out = make_comp(comp::LetBox{bound_u, bound, out});
  return out;
}

Comp Gen::comp(const Env& env, const Effects& fx, const Type& t, int depth) {
  if (depth <= 0) return ret(expr(env, t, 0));
  switch (below(9)) {
    case 0:
    case 1: {
      if (fx.ops.empty()) break;
      const OpDecl& op = fx.ops.ops[below(static_cast<int>(fx.ops.size()))];
      std::string x = value_name();
      return ecmtt::bind(op_call(op.name, expr(env, op.in, depth - 1)), x,
                         comp(env.with_value(x, op.out), fx, t, depth - 1));
    }
    case 2: {
      auto conts = visible_conts(fx);
      if (conts.empty()) break;
      const ContDecl& k = *conts[below(static_cast<int>(conts.size()))];
      if (!inhabited(k.in)) break;
      std::string x = value_name();
      return ecmtt::bind(cont_call(k.name, expr(env, k.in, depth - 1), expr(env, k.state, depth - 1)), x,
                         comp(env.with_value(x, k.out), fx, t, depth - 1));
    }
    case 3: {
      Type a = type(1);
      Theory th = theory();
      std::string u = modal_name();
      Expr bound = expr(env, box_type(th, a), depth - 1);
      return make_comp(comp::LetBox{u, bound, comp(env.with_modal(u, a, th), fx, t, depth - 1)});
    }
    case 4:
      return make_comp(comp::If{expr(env, bool_type(), depth - 1), comp(env, fx, t, depth - 1),
                                comp(env, fx, t, depth - 1)});
    case 5:
    case 6:
      return handle_comp(env, fx, t, depth);
    case 7: {
      FixDef def;
      def.f = value_name();
      def.x = value_name();
      def.annot = small_type();
      def.theory = theory();
      def.ret = type(1);
      Type ft = arrow_type(def.annot, box_type(def.theory, def.ret));
      // f shadows like the checker expects but is never picked, so bodies
      // do not recurse.
      def.body = comp(env.with_value(def.f, kHidden).with_value(def.x, def.annot),
                      Effects{def.theory, {}}, def.ret, depth - 1);
      Comp scope = comp(env.with_value(def.f, ft), fx, t, depth - 1);
      return make_comp(comp::Fix{std::move(def), scope});
    }
    default:
      break;
  }
  return ret(expr(env, t, depth - 1));
}

Term Gen::program() {
  int depth = limits_.depth;
  if (chance(50)) {
    last_type_ = type(2);
    return expr(Env{}, last_type_, depth);
  }
  last_type_ = type(2);
  return comp(Env{}, Effects{}, last_type_, depth);
}

}  // namespace ecmtt::testing
