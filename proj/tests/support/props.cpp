#include "support/props.hpp"

#include <functional>
#include <sstream>

#include "ecmtt/eval.hpp"
#include "ecmtt/subst.hpp"
#include "ecmtt/surface.hpp"
#include "ecmtt/typecheck.hpp"
#include "support/gen.hpp"

namespace ecmtt::testing {

namespace {

constexpr int kDepth = 5;
// Per-program step cap; generated programs never recurse, so this is slack.
constexpr std::uint64_t kStepCap = 100'000;

struct Verdict {
  enum class Kind { Ok, Fail, Skip };
  Kind kind = Kind::Ok;
  bool nontrivial = true;
  std::string message;

  static Verdict ok(bool nontrivial = true) { return {Kind::Ok, nontrivial, {}}; }
  static Verdict fail(std::string m) { return {Kind::Fail, false, std::move(m)}; }
  static Verdict skip() { return {Kind::Skip, false, {}}; }
};

using Instance = std::function<Verdict(Gen&, std::uint64_t)>;

PropReport run(std::uint64_t seed, int wanted, const Instance& f) {
  PropReport r;
  const std::uint64_t attempts = static_cast<std::uint64_t>(wanted) * 3;
  for (std::uint64_t i = 0; i < attempts && r.checked < wanted; ++i) {
    Gen g(seed + i);
    Verdict v;
    try {
      v = f(g, seed + i);
    } catch (const SubstFuelExhausted&) {
      v = Verdict::skip();
    } catch (const TypeError& e) {
      v = Verdict::fail("type error: " + e.render());
    } catch (const InternalError& e) {
      v = Verdict::fail(std::string("internal: ") + e.what());
    }
    switch (v.kind) {
      case Verdict::Kind::Ok:
        ++r.checked;
        if (v.nontrivial) ++r.nontrivial;
        break;
      case Verdict::Kind::Skip:
        ++r.inconclusive;
        break;
      case Verdict::Kind::Fail:
        ++r.checked;
        ++r.failures;
        if (r.first_failure.empty())
          r.first_failure = "seed " + std::to_string(seed + i) + ": " + v.message;
        break;
    }
  }
  return r;
}

Env random_env(Gen& g) {
  Env env;
  int values = g.below(3);
  for (int i = 0; i < values; ++i) env = env.with_value(g.value_name(), g.small_type());
  if (g.chance(40)) env = env.with_modal(g.modal_name(), g.type(1), g.theory());
  return env;
}

Effects random_effects(Gen& g) {
  Effects fx{g.theory(), {}};
  if (g.chance(30)) fx = fx.with_cont(ContDecl{g.cont_name(), g.small_type(), g.small_type(),
                                               g.type(1)});
  return fx;
}

std::string mismatch(const std::string& what, const Type& got, const Type& want) {
  return what + ": " + pretty(got) + " is not below " + pretty(want);
}

// Premise check: the generator's claim must hold before the operation is tried.
Verdict premise(const Type& got, const Type& want, const std::string& what) {
  if (!is_subtype(got, want)) return Verdict::fail("premise " + mismatch(what, got, want));
  return Verdict::ok();
}

}  // namespace

std::string PropReport::summary() const {
  std::ostringstream out;
  out << checked << " checked, " << nontrivial << " nontrivial, " << inconclusive
      << " inconclusive, " << failures << " failed";
  if (!first_failure.empty()) out << " (first: " << first_failure << ")";
  return out.str();
}

PropReport check_preservation(std::uint64_t seed, int programs) {
  return run(seed, programs, [](Gen& g, std::uint64_t) -> Verdict {
    Term t = g.program();
    Type t0 = infer_term(t);
    if (Verdict v = premise(t0, g.program_type(), "program"); v.kind != Verdict::Kind::Ok)
      return v;
    Term cur = t;
    for (std::uint64_t n = 0; n < kStepCap; ++n) {
      StepResult r = step(cur);
      switch (r.kind) {
        case StepResult::Kind::Value:
          return Verdict::ok();
        case StepResult::Kind::OutOfFuel:
          return Verdict::skip();
        case StepResult::Kind::Stuck:
          if (r.reason == StuckReason::Internal)
            return Verdict::fail("stuck(internal) at step " + std::to_string(n) + ": " + r.message);
          return Verdict::ok();
        case StepResult::Kind::Stepped:
          break;
      }
      Type tn;
      try {
        tn = infer_term(r.term);
      } catch (const TypeError& e) {
        return Verdict::fail("reduct " + std::to_string(n + 1) + " [" + r.rule +
                             "] is ill-typed: " + e.render());
      }
      if (!is_subtype(tn, t0))
        return Verdict::fail(mismatch("reduct " + std::to_string(n + 1) + " [" + r.rule + "]", tn, t0));
      cur = r.term;
    }
    return Verdict::skip();
  });
}

PropReport check_monadic(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    Env env = random_env(g);
    Effects fx = random_effects(g);
    Type a = g.type(1);
    Type b = g.type(1);
    std::string x = g.value_name();
    Comp c = g.comp(env, fx, a, kDepth);
    Comp c2 = g.comp(env.with_value(x, a), fx, b, kDepth);
    ModalContext delta = env.delta();
    EffectContext gamma = fx.gamma();
    if (auto v = premise(infer_comp(delta, gamma, c), a, "c"); v.kind != Verdict::Kind::Ok) return v;
    if (auto v = premise(infer_comp(env.with_value(x, a).delta(), gamma, c2), b, "c'");
        v.kind != Verdict::Kind::Ok)
      return v;
    SubstEngine eng;
    Comp out = eng.subst_monadic(c, x, c2);
    Type got = infer_comp(delta, gamma, out);
    if (!is_subtype(got, b)) return Verdict::fail(mismatch("<<c/x>>c'", got, b));
    return Verdict::ok();
  });
}

namespace {

struct ContPremise {
  Env env;
  Effects fx;
  ContDecl k;
  std::string bx;
  std::string by;
  Comp body;
};

ContPremise cont_premise(Gen& g) {
  ContPremise p;
  p.env = random_env(g);
  p.fx = Effects{g.theory(), {}};
  p.k = ContDecl{g.cont_name(), g.small_type(), g.small_type(), g.type(1)};
  p.bx = g.value_name();
  do {
    p.by = g.value_name();
  } while (p.by == p.bx);
  p.body = g.comp(p.env.with_value(p.bx, p.k.in).with_value(p.by, p.k.state), p.fx, p.k.out, kDepth);
  return p;
}

Verdict check_body(const ContPremise& p) {
  Type got = infer_comp(p.env.with_value(p.bx, p.k.in).with_value(p.by, p.k.state).delta(),
                        p.fx.gamma(), p.body);
  return premise(got, p.k.out, "continuation body");
}

}  // namespace

PropReport check_cont_comp(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    ContPremise p = cont_premise(g);
    if (auto v = check_body(p); v.kind != Verdict::Kind::Ok) return v;
    Type b = g.type(1);
    Effects with_k = p.fx.with_cont(p.k);
    Comp c;
    bool uses_k = false;
    for (int tries = 0; tries < 10 && !uses_k; ++tries) {
      c = g.comp(p.env, with_k, b, kDepth);
      uses_k = free_vars(c).conts.count(p.k.name) > 0;
    }
    ModalContext delta = p.env.delta();
    if (auto v = premise(infer_comp(delta, with_k.gamma(), c), b, "c"); v.kind != Verdict::Kind::Ok)
      return v;
    SubstEngine eng;
    Comp out = eng.subst_cont(c, p.bx, p.by, p.body, p.k.name);
    if (free_vars(out).conts.count(p.k.name)) return Verdict::fail("k still free after substitution");
    Type got = infer_comp(delta, p.fx.gamma(), out);
    if (!is_subtype(got, b)) return Verdict::fail(mismatch("<<(x,y).c'/k>>c", got, b));
    return Verdict::ok(uses_k);
  });
}

PropReport check_cont_handler(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    ContPremise p = cont_premise(g);
    if (auto v = check_body(p); v.kind != Verdict::Kind::Ok) return v;
    Effects with_k = p.fx.with_cont(p.k);
    Theory psi = g.theory();
    Type in = g.type(1);
    Type s = g.small_type();
    Type out_t = g.type(1);
    Handler h;
    bool uses_k = false;
    for (int tries = 0; tries < 10 && !uses_k; ++tries) {
      h = g.handler(p.env, with_k, psi, in, s, out_t, kDepth);
      uses_k = free_vars(h).conts.count(p.k.name) > 0;
    }
    ModalContext delta = p.env.delta();
    HandlerSig before = check_handler(delta, with_k.gamma(), h, in, s);
    if (auto v = premise(before.out, out_t, "h"); v.kind != Verdict::Kind::Ok) return v;
    SubstEngine eng;
    Handler out = eng.subst_cont(h, p.bx, p.by, p.body, p.k.name);
    HandlerSig after = check_handler(delta, p.fx.gamma(), out, in, s);
    if (!is_subtype(after.out, out_t)) return Verdict::fail(mismatch("<<(x,y).c'/k>>h", after.out, out_t));
    if (!theory_equal(after.theory, psi)) return Verdict::fail("handler theory changed");
    return Verdict::ok(uses_k);
  });
}

PropReport check_handle_with(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    Env env = random_env(g);
    Theory psi = g.theory();
    Effects outer = random_effects(g);
    Type a = g.type(1);
    Type s = g.small_type();
    Type c_t = g.type(1);
    Comp c = g.comp(env, Effects{psi, {}}, a, kDepth);
    Handler h = g.handler(env, outer, psi, a, s, c_t, kDepth);
    Expr e = g.expr(env, s, kDepth - 2);
    ModalContext delta = env.delta();
    if (auto v = premise(infer_comp(delta, EffectContext(psi), c), a, "c"); v.kind != Verdict::Kind::Ok)
      return v;
    if (auto v = premise(check_handler(delta, outer.gamma(), h, a, s).out, c_t, "h");
        v.kind != Verdict::Kind::Ok)
      return v;
    if (auto v = premise(infer_expr(delta, e), s, "e"); v.kind != Verdict::Kind::Ok) return v;
    SubstEngine eng;
    Comp out = eng.handle_with(c, h, e);
    Type got = infer_comp(delta, outer.gamma(), out);
    if (!is_subtype(got, c_t)) return Verdict::fail(mismatch("handle(c, h, e)", got, c_t));
    return Verdict::ok();
  });
}

PropReport check_handle_seq(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    Env env = random_env(g);
    Theory psi = g.theory();
    Type a = g.type(1);
    Comp c = g.comp(env, Effects{psi, {}}, a, kDepth);
    Theory target;
    Type b;
    HandlingSequence theta;
    switch (g.below(5)) {
      case 0:
        // empty sequence: source below target
        target = concat(psi, Theory{});
        b = a;
        break;
      case 1:
      case 2:
        target = g.theory();
        b = g.type(1);
        theta = g.hseq(env, target, psi, a, b, kDepth);
        break;
      default: {
        target = g.theory();
        b = g.type(1);
        Theory mid = g.theory();
        Type mid_t = g.type(1);
        HandlingSequence first = g.hseq(env, mid, psi, a, mid_t, kDepth - 1);
        HandlingSequence second = g.hseq(env, target, mid, mid_t, b, kDepth - 1);
        theta = first;
        theta.insert(theta.end(), second.begin(), second.end());
        break;
      }
    }
    ModalContext delta = env.delta();
    if (auto v = premise(infer_comp(delta, EffectContext(psi), c), a, "c"); v.kind != Verdict::Kind::Ok)
      return v;
    if (auto v = premise(infer_hseq(delta, target, theta, a, psi), b, "theta");
        v.kind != Verdict::Kind::Ok)
      return v;
    SubstEngine eng;
    Comp out = eng.handle_seq(c, theta);
    Type got = infer_comp(delta, EffectContext(target), out);
    if (!is_subtype(got, b)) return Verdict::fail(mismatch("handleseq(c, theta)", got, b));
    return Verdict::ok(!theta.empty());
  });
}

PropReport check_modal(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    Env env = random_env(g);
    Theory psi = g.theory();
    Type a = g.type(1);
    Comp c = g.comp(env, Effects{psi, {}}, a, kDepth);
    std::string u = g.modal_name();
    Env with_u = env.with_modal(u, a, psi);
    Effects fx = random_effects(g);
    Type b = g.type(1);
    bool as_expr = g.chance(40);
    Term t;
    bool uses_u = false;
    for (int tries = 0; tries < 10 && !uses_u; ++tries) {
      t = as_expr ? Term{g.expr(with_u, b, kDepth)} : Term{g.comp(with_u, fx, b, kDepth)};
      uses_u = free_vars(t).modals.count(u) > 0;
    }
    ModalContext delta = env.delta();
    if (auto v = premise(infer_comp(delta, EffectContext(psi), c), a, "c"); v.kind != Verdict::Kind::Ok)
      return v;
    SubstEngine eng;
    Type got;
    if (as_expr) {
      Expr e = std::get<Expr>(t);
      if (auto v = premise(infer_expr(with_u.delta(), e), b, "t"); v.kind != Verdict::Kind::Ok) return v;
      got = infer_expr(delta, eng.modal_subst(e, psi, c, u));
    } else {
      Comp body = std::get<Comp>(t);
      if (auto v = premise(infer_comp(with_u.delta(), fx.gamma(), body), b, "t");
          v.kind != Verdict::Kind::Ok)
        return v;
      got = infer_comp(delta, fx.gamma(), eng.modal_subst(body, psi, c, u));
    }
    if (!is_subtype(got, b)) return Verdict::fail(mismatch("[[psi.c/u]]t", got, b));
    return Verdict::ok(uses_u);
  });
}

PropReport check_eval_meta(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    Env env = random_env(g);
    Type a = g.type(1);
    Comp c = g.comp(env, Effects{}, a, kDepth);
    ModalContext delta = env.delta();
    if (auto v = premise(infer_comp(delta, EffectContext{}, c), a, "c"); v.kind != Verdict::Kind::Ok)
      return v;
    SubstEngine eng;
    Expr out = eng.eval_meta(c);
    Type got = infer_expr(delta, out);
    if (!is_subtype(got, a)) return Verdict::fail(mismatch("(| c |)", got, a));
    return Verdict::ok(!as<comp::Ret>(c));
  });
}

PropReport check_capture(std::uint64_t seed, int instances) {
  return run(seed, instances, [](Gen& g, std::uint64_t) -> Verdict {
    // Payloads mention names from the generator's pools, so binders in the
    // target regularly collide with them.
    Env env;
    for (int i = 0; i < 3; ++i) env = env.with_value(g.value_name(), g.small_type());
    Type a = g.small_type();
    Expr e = g.expr(env, a, 3);
    std::string x = g.value_name();
    Comp t = g.comp(env.with_value(x, a), random_effects(g), g.type(1), kDepth);
    FreeNames ft = free_vars(t);
    if (!ft.values.count(x)) return Verdict::ok(false);
    SubstOptions plain;
    plain.normalize = false;
    SubstEngine eng(plain);
    Comp out = eng.subst_expr(t, e, x);
    FreeNames fo = free_vars(out);
    NameSet want = free_vars(e).values;
    for (const auto& n : ft.values)
      if (n != x) want.insert(n);
    if (fo.values != want) {
      std::string got;
      for (const auto& n : fo.values) got += n + " ";
      std::string exp;
      for (const auto& n : want) exp += n + " ";
      return Verdict::fail("free values {" + got + "} instead of {" + exp + "}");
    }
    return Verdict::ok();
  });
}

PropReport check_round_trip(std::uint64_t seed, int terms) {
  return run(seed, terms, [](Gen& g, std::uint64_t) -> Verdict {
    Term t = g.program();
    std::string text = pretty(t);
    Term back;
    try {
      back = parse_term(text);
    } catch (const ParseError& e) {
      return Verdict::fail("reparse failed: " + e.diagnostics().front().render() + " in " + text);
    }
    if (!alpha_equal(back, t)) return Verdict::fail("not alpha-equal after round trip: " + text);
    return Verdict::ok();
  });
}

}  // namespace ecmtt::testing
