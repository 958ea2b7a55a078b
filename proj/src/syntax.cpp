#include "ecmtt/syntax.hpp"

#include <algorithm>
#include <cctype>

#include "overloaded.hpp"

namespace ecmtt {

using detail::overloaded;

// ---------------------------------------------------------------------------
// Theories and types

const OpDecl* Theory::find(std::string_view name) const {
  for (const auto& op : ops)
    if (op.name == name) return &op;
  return nullptr;
}

std::optional<std::string> Theory::duplicate() const {
  NameSet seen;
  for (const auto& op : ops)
    if (!seen.insert(op.name).second) return op.name;
  return std::nullopt;
}

Theory concat(const Theory& a, const Theory& b) {
  Theory out = a;
  out.ops.insert(out.ops.end(), b.ops.begin(), b.ops.end());
  return out;
}

namespace {
Type mk(TypeVariant v) { return std::make_shared<const TypeNode>(TypeNode{std::move(v)}); }
}  // namespace

Type base_type(std::string name) { return mk(types::Base{std::move(name)}); }
Type unit_type() {
  static const Type t = mk(types::Unit{});
  return t;
}
Type int_type() {
  static const Type t = mk(types::Int{});
  return t;
}
Type bool_type() {
  static const Type t = mk(types::Bool{});
  return t;
}
Type bottom_type() {
  static const Type t = mk(types::Bottom{});
  return t;
}
Type prod_type(Type left, Type right) { return mk(types::Prod{std::move(left), std::move(right)}); }
Type list_type(Type elem) { return mk(types::List{std::move(elem)}); }
Type arrow_type(Type dom, Type cod) { return mk(types::Arrow{std::move(dom), std::move(cod)}); }
Type box_type(Theory theory, Type body) { return mk(types::Box{std::move(theory), std::move(body)}); }

bool theory_subset(const Theory& small, const Theory& big) {
  for (const auto& op : small.ops) {
    const OpDecl* other = big.find(op.name);
    if (!other || !type_equal(op.in, other->in) || !type_equal(op.out, other->out)) return false;
  }
  return true;
}

bool theory_equal(const Theory& a, const Theory& b) {
  if (a.ops.size() != b.ops.size()) return false;
  return theory_subset(a, b) && theory_subset(b, a);
}

bool type_equal(const Type& a, const Type& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const types::Base& x) { return x.name == as<types::Base>(b)->name; },
          [&](const types::Prod& x) {
            auto* y = as<types::Prod>(b);
            return type_equal(x.left, y->left) && type_equal(x.right, y->right);
          },
          [&](const types::List& x) { return type_equal(x.elem, as<types::List>(b)->elem); },
          [&](const types::Arrow& x) {
            auto* y = as<types::Arrow>(b);
            return type_equal(x.dom, y->dom) && type_equal(x.cod, y->cod);
          },
          [&](const types::Box& x) {
            auto* y = as<types::Box>(b);
            return theory_equal(x.theory, y->theory) && type_equal(x.body, y->body);
          },
          [](const auto&) { return true; },
      },
      a->node);
}

// ---------------------------------------------------------------------------
// Term constructors

const OpClause* Handler::find(std::string_view op) const {
  for (const auto& c : clauses)
    if (c.op == op) return &c;
  return nullptr;
}

Expr var(std::string name) { return make_expr(expr::Var{std::move(name)}); }
Expr int_lit(std::int64_t v) { return make_expr(expr::IntLit{v}); }
Expr bool_lit(bool v) { return make_expr(expr::BoolLit{v}); }
Expr unit_lit() { return make_expr(expr::UnitLit{}); }
Expr pair(Expr a, Expr b) { return make_expr(expr::Pair{std::move(a), std::move(b)}); }
Comp ret(Expr e) { return make_comp(comp::Ret{std::move(e)}); }
Comp bind(Stmt s, std::string x, Comp rest) {
  return make_comp(comp::Bind{std::move(s), std::move(x), std::move(rest)});
}
Stmt op_call(std::string op, Expr arg) { return make_stmt(stmt::OpCall{std::move(op), std::move(arg)}); }
Stmt cont_call(std::string k, Expr arg, Expr state) {
  return make_stmt(stmt::ContCall{std::move(k), std::move(arg), std::move(state)});
}

// ---------------------------------------------------------------------------
// Contexts

EffectContext::EffectContext(const Theory& theory) {
  for (const auto& op : theory.ops) entries_.emplace_back(op);
}

EffectContext EffectContext::with_op(OpDecl op) const {
  EffectContext out = *this;
  out.entries_.emplace_back(std::move(op));
  return out;
}

EffectContext EffectContext::with_cont(ContDecl k) const {
  EffectContext out = *this;
  out.entries_.emplace_back(std::move(k));
  return out;
}

const OpDecl* EffectContext::find_op(std::string_view name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (auto* op = std::get_if<OpDecl>(&*it); op && op->name == name) return op;
  return nullptr;
}

const ContDecl* EffectContext::find_cont(std::string_view name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (auto* k = std::get_if<ContDecl>(&*it); k && k->name == name) return k;
  return nullptr;
}

bool EffectContext::is_theory() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return std::holds_alternative<OpDecl>(e); });
}

Theory EffectContext::as_theory() const {
  Theory out;
  for (const auto& e : entries_)
    if (auto* op = std::get_if<OpDecl>(&e)) out.ops.push_back(*op);
  return out;
}

ModalContext ModalContext::with_value(std::string name, Type type) const {
  ModalContext out = *this;
  out.entries_.emplace_back(ValBind{std::move(name), std::move(type)});
  return out;
}

ModalContext ModalContext::with_modal(std::string name, Type type, Theory theory) const {
  ModalContext out = *this;
  out.entries_.emplace_back(ModalBind{std::move(name), std::move(type), std::move(theory)});
  return out;
}

const ValBind* ModalContext::find_value(std::string_view name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (auto* b = std::get_if<ValBind>(&*it); b && b->name == name) return b;
  return nullptr;
}

const ModalBind* ModalContext::find_modal(std::string_view name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (auto* b = std::get_if<ModalBind>(&*it); b && b->name == name) return b;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Free names

namespace {

void merge(FreeNames& into, const FreeNames& from) {
  into.values.insert(from.values.begin(), from.values.end());
  into.modals.insert(from.modals.begin(), from.modals.end());
  into.ops.insert(from.ops.begin(), from.ops.end());
  into.conts.insert(from.conts.begin(), from.conts.end());
}

void drop_theory(FreeNames& fv, const Theory& theory) {
  for (const auto& op : theory.ops) fv.ops.erase(op.name);
}

FreeNames fv_fix(const FixDef& def) {
  FreeNames body = free_vars(def.body);
  body.values.erase(def.f);
  body.values.erase(def.x);
  drop_theory(body, def.theory);
  return body;
}

}  // namespace

FreeNames free_vars(const Expr& e) {
  return std::visit(
      overloaded{
          [](const expr::Var& v) {
            FreeNames fv;
            fv.values.insert(v.name);
            return fv;
          },
          [](const expr::Lam& l) {
            FreeNames fv = free_vars(l.body);
            fv.values.erase(l.x);
            return fv;
          },
          [](const expr::App& a) {
            FreeNames fv = free_vars(a.fun);
            merge(fv, free_vars(a.arg));
            return fv;
          },
          [](const expr::Box& b) {
            FreeNames fv = free_vars(b.body);
            drop_theory(fv, b.theory);
            return fv;
          },
          [](const expr::LetBox& l) {
            FreeNames fv = free_vars(l.body);
            fv.modals.erase(l.u);
            merge(fv, free_vars(l.bound));
            return fv;
          },
          [](const expr::Eval& ev) {
            FreeNames fv = free_vars(ev.seq);
            fv.modals.insert(ev.u);
            return fv;
          },
          [](const expr::Fix& f) {
            FreeNames fv = free_vars(f.scope);
            fv.values.erase(f.def.f);
            merge(fv, fv_fix(f.def));
            return fv;
          },
          [](const expr::Pair& p) {
            FreeNames fv = free_vars(p.left);
            merge(fv, free_vars(p.right));
            return fv;
          },
          [](const expr::Proj& p) { return free_vars(p.pair); },
          [](const expr::List& l) {
            FreeNames fv;
            for (const auto& item : l.items) merge(fv, free_vars(item));
            return fv;
          },
          [](const expr::Append& a) {
            FreeNames fv = free_vars(a.left);
            merge(fv, free_vars(a.right));
            return fv;
          },
          [](const expr::Arith& a) {
            FreeNames fv = free_vars(a.lhs);
            merge(fv, free_vars(a.rhs));
            return fv;
          },
          [](const expr::Cmp& c) {
            FreeNames fv = free_vars(c.lhs);
            merge(fv, free_vars(c.rhs));
            return fv;
          },
          [](const expr::If& i) {
            FreeNames fv = free_vars(i.cond);
            merge(fv, free_vars(i.then_branch));
            merge(fv, free_vars(i.else_branch));
            return fv;
          },
          [](const auto&) { return FreeNames{}; },
      },
      e->node);
}

FreeNames free_vars(const Comp& c) {
  return std::visit(
      overloaded{
          [](const comp::Ret& r) { return free_vars(r.value); },
          [](const comp::Bind& b) {
            FreeNames fv = free_vars(b.rest);
            fv.values.erase(b.x);
            merge(fv, free_vars(b.stmt));
            return fv;
          },
          [](const comp::LetBox& l) {
            FreeNames fv = free_vars(l.body);
            fv.modals.erase(l.u);
            merge(fv, free_vars(l.bound));
            return fv;
          },
          [](const comp::Fix& f) {
            FreeNames fv = free_vars(f.scope);
            fv.values.erase(f.def.f);
            merge(fv, fv_fix(f.def));
            return fv;
          },
          [](const comp::If& i) {
            FreeNames fv = free_vars(i.cond);
            merge(fv, free_vars(i.then_branch));
            merge(fv, free_vars(i.else_branch));
            return fv;
          },
          [](const comp::Perform& p) { return free_vars(p.stmt); },
          [](const comp::BindRet& b) {
            FreeNames fv = free_vars(b.rest);
            fv.values.erase(b.x);
            merge(fv, free_vars(b.value));
            return fv;
          },
      },
      c->node);
}

FreeNames free_vars(const Stmt& s) {
  return std::visit(
      overloaded{
          [](const stmt::OpCall& o) {
            FreeNames fv = free_vars(o.arg);
            fv.ops.insert(o.op);
            return fv;
          },
          [](const stmt::ContCall& k) {
            FreeNames fv = free_vars(k.arg);
            merge(fv, free_vars(k.state));
            fv.conts.insert(k.k);
            return fv;
          },
          [](const stmt::Handle& h) {
            FreeNames fv = free_vars(h.seq);
            merge(fv, free_vars(h.handler));
            merge(fv, free_vars(h.init));
            fv.modals.insert(h.u);
            return fv;
          },
      },
      s->node);
}

FreeNames free_vars(const Handler& h) {
  FreeNames fv = free_vars(h.ret.body);
  fv.values.erase(h.ret.x);
  fv.values.erase(h.ret.z);
  for (const auto& clause : h.clauses) {
    FreeNames body = free_vars(clause.body);
    body.values.erase(clause.x);
    body.values.erase(clause.z);
    body.conts.erase(clause.k);
    merge(fv, body);
  }
  return fv;
}

FreeNames free_vars(const HandlingSequence& seq) {
  FreeNames fv;
  for (const auto& clause : seq) {
    merge(fv, free_vars(clause.handler));
    merge(fv, free_vars(clause.init));
    FreeNames cont = free_vars(clause.cont);
    cont.values.erase(clause.x);
    merge(fv, cont);
  }
  return fv;
}

FreeNames free_vars(const Term& t) {
  return std::visit([](const auto& x) { return free_vars(x); }, t);
}

std::string fresh_name(std::string_view base, const NameSet& avoid) {
  std::string candidate(base);
  if (!avoid.count(candidate)) return candidate;
  for (unsigned long i = 1;; ++i) {
    candidate = std::string(base) + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

std::string name_stem(std::string_view name) {
  std::size_t end = name.size();
  while (end > 1 && std::isdigit(static_cast<unsigned char>(name[end - 1]))) --end;
  return std::string(name.substr(0, end));
}

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

// Bound names of each side are mapped to binding depths; a bound occurrence
// matches only the occurrence bound by the same binder on the other side.
class Alpha {
 public:
  bool expr(const Expr& a, const Expr& b);
  bool comp(const Comp& a, const Comp& b);
  bool stmt(const Stmt& a, const Stmt& b);
  bool handler(const Handler& a, const Handler& b);
  bool seq(const HandlingSequence& a, const HandlingSequence& b);

 private:
  enum Ns { Val = 0, Mod = 1, Cont = 2 };
  using Scope = std::vector<std::pair<std::string, int>>;
  Scope left_[3];
  Scope right_[3];
  int depth_ = 0;

  static std::optional<int> lookup(const Scope& s, const std::string& n) {
    for (auto it = s.rbegin(); it != s.rend(); ++it)
      if (it->first == n) return it->second;
    return std::nullopt;
  }

  bool same(Ns ns, const std::string& a, const std::string& b) const {
    auto la = lookup(left_[ns], a);
    auto lb = lookup(right_[ns], b);
    if (la || lb) return la == lb;
    return a == b;
  }

  void push(Ns ns, const std::string& a, const std::string& b) {
    ++depth_;
    left_[ns].emplace_back(a, depth_);
    right_[ns].emplace_back(b, depth_);
  }

  void pop(Ns ns, int count = 1) {
    for (int i = 0; i < count; ++i) {
      left_[ns].pop_back();
      right_[ns].pop_back();
    }
  }

  bool fix_def(const FixDef& a, const FixDef& b) {
    if (!type_equal(a.annot, b.annot) || !type_equal(a.ret, b.ret) ||
        !theory_equal(a.theory, b.theory))
      return false;
    push(Val, a.f, b.f);
    push(Val, a.x, b.x);
    bool ok = comp(a.body, b.body);
    pop(Val, 2);
    return ok;
  }
};

bool Alpha::expr(const Expr& a, const Expr& b) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const expr::Var& x) { return same(Val, x.name, as<expr::Var>(b)->name); },
          [&](const expr::Lam& x) {
            auto* y = as<expr::Lam>(b);
            if (!type_equal(x.annot, y->annot)) return false;
            push(Val, x.x, y->x);
            bool ok = expr(x.body, y->body);
            pop(Val);
            return ok;
          },
          [&](const expr::App& x) {
            auto* y = as<expr::App>(b);
            return expr(x.fun, y->fun) && expr(x.arg, y->arg);
          },
          [&](const expr::Box& x) {
            auto* y = as<expr::Box>(b);
            return theory_equal(x.theory, y->theory) && comp(x.body, y->body);
          },
          [&](const expr::LetBox& x) {
            auto* y = as<expr::LetBox>(b);
            if (!expr(x.bound, y->bound)) return false;
            push(Mod, x.u, y->u);
            bool ok = expr(x.body, y->body);
            pop(Mod);
            return ok;
          },
          [&](const expr::Eval& x) {
            auto* y = as<expr::Eval>(b);
            return same(Mod, x.u, y->u) && seq(x.seq, y->seq);
          },
          [&](const expr::Fix& x) {
            auto* y = as<expr::Fix>(b);
            if (!fix_def(x.def, y->def)) return false;
            push(Val, x.def.f, y->def.f);
            bool ok = expr(x.scope, y->scope);
            pop(Val);
            return ok;
          },
          [&](const expr::IntLit& x) { return x.value == as<expr::IntLit>(b)->value; },
          [&](const expr::BoolLit& x) { return x.value == as<expr::BoolLit>(b)->value; },
          [&](const expr::UnitLit&) { return true; },
          [&](const expr::Pair& x) {
            auto* y = as<expr::Pair>(b);
            return expr(x.left, y->left) && expr(x.right, y->right);
          },
          [&](const expr::Proj& x) {
            auto* y = as<expr::Proj>(b);
            return x.index == y->index && expr(x.pair, y->pair);
          },
          [&](const expr::List& x) {
            auto* y = as<expr::List>(b);
            if (x.items.size() != y->items.size()) return false;
            if (x.elem.has_value() != y->elem.has_value()) return false;
            if (x.elem && !type_equal(*x.elem, *y->elem)) return false;
            for (std::size_t i = 0; i < x.items.size(); ++i)
              if (!expr(x.items[i], y->items[i])) return false;
            return true;
          },
          [&](const expr::Append& x) {
            auto* y = as<expr::Append>(b);
            return expr(x.left, y->left) && expr(x.right, y->right);
          },
          [&](const expr::Arith& x) {
            auto* y = as<expr::Arith>(b);
            return x.op == y->op && expr(x.lhs, y->lhs) && expr(x.rhs, y->rhs);
          },
          [&](const expr::Cmp& x) {
            auto* y = as<expr::Cmp>(b);
            return x.op == y->op && expr(x.lhs, y->lhs) && expr(x.rhs, y->rhs);
          },
          [&](const expr::If& x) {
            auto* y = as<expr::If>(b);
            return expr(x.cond, y->cond) && expr(x.then_branch, y->then_branch) &&
                   expr(x.else_branch, y->else_branch);
          },
      },
      a->node);
}

bool Alpha::comp(const Comp& a, const Comp& b) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const comp::Ret& x) { return expr(x.value, as<comp::Ret>(b)->value); },
          [&](const comp::Bind& x) {
            auto* y = as<comp::Bind>(b);
            if (!stmt(x.stmt, y->stmt)) return false;
            push(Val, x.x, y->x);
            bool ok = comp(x.rest, y->rest);
            pop(Val);
            return ok;
          },
          [&](const comp::LetBox& x) {
            auto* y = as<comp::LetBox>(b);
            if (!expr(x.bound, y->bound)) return false;
            push(Mod, x.u, y->u);
            bool ok = comp(x.body, y->body);
            pop(Mod);
            return ok;
          },
          [&](const comp::Fix& x) {
            auto* y = as<comp::Fix>(b);
            if (!fix_def(x.def, y->def)) return false;
            push(Val, x.def.f, y->def.f);
            bool ok = comp(x.scope, y->scope);
            pop(Val);
            return ok;
          },
          [&](const comp::If& x) {
            auto* y = as<comp::If>(b);
            return expr(x.cond, y->cond) && comp(x.then_branch, y->then_branch) &&
                   comp(x.else_branch, y->else_branch);
          },
          [&](const comp::Perform& x) { return stmt(x.stmt, as<comp::Perform>(b)->stmt); },
          [&](const comp::BindRet& x) {
            auto* y = as<comp::BindRet>(b);
            if (!expr(x.value, y->value)) return false;
            push(Val, x.x, y->x);
            bool ok = comp(x.rest, y->rest);
            pop(Val);
            return ok;
          },
      },
      a->node);
}

bool Alpha::stmt(const Stmt& a, const Stmt& b) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const stmt::OpCall& x) {
            auto* y = as<stmt::OpCall>(b);
            return x.op == y->op && expr(x.arg, y->arg);
          },
          [&](const stmt::ContCall& x) {
            auto* y = as<stmt::ContCall>(b);
            return same(Cont, x.k, y->k) && expr(x.arg, y->arg) && expr(x.state, y->state);
          },
          [&](const stmt::Handle& x) {
            auto* y = as<stmt::Handle>(b);
            return same(Mod, x.u, y->u) && seq(x.seq, y->seq) && handler(x.handler, y->handler) &&
                   expr(x.init, y->init);
          },
      },
      a->node);
}

bool Alpha::handler(const Handler& a, const Handler& b) {
  if (!theory_equal(a.theory, b.theory) || a.clauses.size() != b.clauses.size()) return false;
  push(Val, a.ret.x, b.ret.x);
  push(Val, a.ret.z, b.ret.z);
  bool ok = comp(a.ret.body, b.ret.body);
  pop(Val, 2);
  if (!ok) return false;
  for (const auto& ca : a.clauses) {
    const OpClause* cb = b.find(ca.op);
    if (!cb) return false;
    push(Val, ca.x, cb->x);
    push(Val, ca.z, cb->z);
    push(Cont, ca.k, cb->k);
    ok = comp(ca.body, cb->body);
    pop(Cont);
    pop(Val, 2);
    if (!ok) return false;
  }
  return true;
}

bool Alpha::seq(const HandlingSequence& a, const HandlingSequence& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!handler(a[i].handler, b[i].handler) || !expr(a[i].init, b[i].init)) return false;
    push(Val, a[i].x, b[i].x);
    bool ok = comp(a[i].cont, b[i].cont);
    pop(Val);
    if (!ok) return false;
  }
  return true;
}

}  // namespace

bool alpha_equal(const Expr& a, const Expr& b) { return Alpha{}.expr(a, b); }
bool alpha_equal(const Comp& a, const Comp& b) { return Alpha{}.comp(a, b); }
bool alpha_equal(const Stmt& a, const Stmt& b) { return Alpha{}.stmt(a, b); }
bool alpha_equal(const Handler& a, const Handler& b) { return Alpha{}.handler(a, b); }
bool alpha_equal(const HandlingSequence& a, const HandlingSequence& b) { return Alpha{}.seq(a, b); }
bool alpha_equal(const Term& a, const Term& b) {
  if (a.index() != b.index()) return false;
  if (auto* e = std::get_if<Expr>(&a)) return alpha_equal(*e, std::get<Expr>(b));
  return alpha_equal(std::get<Comp>(a), std::get<Comp>(b));
}

// ---------------------------------------------------------------------------
// Values

bool is_value(const Expr& e) {
  return std::visit(
      overloaded{
          [](const expr::Lam&) { return true; },
          [](const expr::Box&) { return true; },
          [](const expr::IntLit&) { return true; },
          [](const expr::BoolLit&) { return true; },
          [](const expr::UnitLit&) { return true; },
          [](const expr::Pair& p) { return is_value(p.left) && is_value(p.right); },
          [](const expr::List& l) {
            return std::all_of(l.items.begin(), l.items.end(),
                               [](const Expr& x) { return is_value(x); });
          },
          [](const auto&) { return false; },
      },
      e->node);
}

bool is_value(const Comp& c) {
  auto* r = as<comp::Ret>(c);
  return r && is_value(r->value);
}

}  // namespace ecmtt
