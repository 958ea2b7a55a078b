#include "doctest.h"

#include <string>

#include "ecmtt/cli.hpp"
#include "ecmtt/surface.hpp"
#include "ecmtt/typecheck.hpp"
#include "support/fixtures.hpp"

using namespace ecmtt;
using testing::comp_of;
using testing::expr_of;
using testing::handler_named;
using testing::theory_named;
using testing::type_of;

namespace {

ErrorKind error_of(const Term& t) {
  try {
    infer_term(t);
  } catch (const TypeError& e) {
    return e.kind();
  }
  FAIL("expected a type error");
  return ErrorKind::UnboundVariable;
}

bool same(const Type& a, std::string_view b) { return type_equal(a, type_of(b)); }

Theory St() { return theory_named("St"); }
Theory Exn() { return theory_named("Exn"); }

}  // namespace

TEST_CASE("subtyping with bottom") {
  CHECK(is_subtype(bottom_type(), int_type()));
  CHECK(is_subtype(bottom_type(), type_of("[St] int -> bool")));
  CHECK_FALSE(is_subtype(int_type(), bottom_type()));
  CHECK(is_subtype(type_of("bot * int"), type_of("bool * int")));
  CHECK(is_subtype(type_of("list bot"), type_of("list int")));
  CHECK(is_subtype(type_of("[St] bot"), type_of("[St] int")));
  CHECK_FALSE(is_subtype(type_of("[St] int"), type_of("[Exn] int")));
  // contravariant domain
  CHECK(is_subtype(type_of("int -> bot"), type_of("int -> int")));
  CHECK(is_subtype(type_of("int -> int"), type_of("bot -> int")));
  CHECK_FALSE(is_subtype(type_of("bot -> int"), type_of("int -> int")));
}

TEST_CASE("join") {
  CHECK(same(*join(bottom_type(), int_type()), "int"));
  CHECK(same(*join(type_of("bot * int"), type_of("bool * bot")), "bool * int"));
  CHECK(same(*join(type_of("int -> bot"), type_of("bot -> int")), "bot -> int"));
  CHECK(same(*join(type_of("int -> int"), type_of("bool -> int")), "bot -> int"));
  CHECK_FALSE(join(int_type(), bool_type()));
  CHECK_FALSE(join(type_of("[St] int"), type_of("[Exn] int")));
}

TEST_CASE("expressions and computations of the running examples") {
  CHECK(same(infer_expr({}, testing::expr_named("incr")), "[St] int"));
  CHECK(same(infer_expr({}, testing::expr_named("incr_n")), "int -> [St] int"));
  CHECK(same(infer_expr({}, testing::expr_named("explode")), "int -> [Exn] int"));
  CHECK(same(infer_expr({}, testing::expr_named("eval_f")), "[{}] int -> int"));
  CHECK(same(infer_comp({}, EffectContext(St()), comp_of("x <- get(); _ <- set(x + 1); ret x")),
             "int"));
  CHECK(same(infer_stmt({}, EffectContext(St()), op_call("get", unit_lit())), "int"));
}

TEST_CASE("operations outside the theory are rejected") {
  Term t = desugar(parse_term("box {}. get()", testing::examples()));
  CHECK(error_of(t) == ErrorKind::OpNotInContext);
}

TEST_CASE("handler signatures") {
  HandlerSig st = check_handler({}, EffectContext(), handler_named("handlerSt"), int_type(), int_type());
  CHECK(theory_equal(st.theory, St()));
  CHECK(same(st.out, "int * int"));
  CHECK(same(st.state, "int"));

  HandlerSig exn = check_handler({}, EffectContext(), handler_named("handlerExn"), int_type(), unit_type());
  CHECK(same(exn.out, "int"));

  HandlerSig boom = check_handler({}, EffectContext(Exn()), handler_named("handlerExplosiveSt"),
                                  int_type(), int_type());
  CHECK(same(boom.out, "int * int"));
  // raise is not available without Exn in the ambient context
  CHECK_THROWS_AS(check_handler({}, EffectContext(), handler_named("handlerExplosiveSt"), int_type(),
                                int_type()),
                  TypeError);

  Handler seven = desugar(parse_handler("handler for {} { return(x; z) -> ret 7 }"));
  HandlerSig s7 = check_handler({}, EffectContext(), seven, int_type(), int_type());
  CHECK(same(s7.out, "int"));
  CHECK(s7.theory.empty());
}

TEST_CASE("handler output and state are least fixpoints") {
  // the return clause alone gives bot * bot; the op clause raises it
  Handler h = desugar(parse_handler(
      "handler for {op: unit => int} { op(x; k; z) -> ret (1, true), return(x; z) -> ret (raise_, z) }"));
  ModalContext d = ModalContext{}.with_value("raise_", bottom_type());
  HandlerSig sig = check_handler(d, EffectContext(), h, int_type(), type_of("bot"));
  CHECK(same(sig.out, "int * bool"));

  // init gives int * bot, the clause passes int * bool to its own k
  Handler g = desugar(parse_handler(
      "handler for {op: unit => int} { op(x; k; z) -> k(1; (1, true)), return(x; z) -> ret z }"));
  HandlerSig gs = check_handler({}, EffectContext(), g, int_type(), type_of("int * bot"));
  CHECK(same(gs.state, "int * bool"));
  CHECK(same(gs.out, "int * bool"));

  CHECK(error_of(desugar(parse_term(
            "let box u = box {op: unit => int}. op() in handle u with handler for {op: unit => int} "
            "{ op(x; k; z) -> k(1; true), return(x; z) -> ret x } init 0"))) ==
        ErrorKind::StateTypeMismatch);
}

TEST_CASE("handling sequences") {
  HandlingSequence empty;
  CHECK(same(infer_hseq({}, St(), empty, int_type(), St()), "int"));

  Comp c = comp_of("handle u [handlerExplosiveSt init 12 as x. ret (fst x)] with handlerExn init ()");
  auto* h = as<stmt::Handle>(as<comp::Bind>(c)->stmt);
  REQUIRE(h);
  CHECK(same(infer_hseq({}, Exn(), h->seq, int_type(), St()), "int"));
  // the source theory must be what the first handler handles
  CHECK_THROWS_AS(infer_hseq({}, Exn(), h->seq, int_type(), Exn()), TypeError);
}

TEST_CASE("type error rendering") {
  try {
    infer_term(desugar(parse_term("(fn x: int. x)\n  true")));
    FAIL("no error");
  } catch (const TypeError& e) {
    CHECK(e.kind() == ErrorKind::ArgumentMismatch);
    CHECK(e.render() == "1:1: argument-mismatch: expected int, found bool");
    CHECK(e.judgment() == "expression");
  }
  try {
    infer_term(desugar(parse_term("fn x: int. y")));
    FAIL("no error");
  } catch (const TypeError& e) {
    CHECK(e.render().find("unbound-variable") != std::string::npos);
    CHECK(e.span().line == 1);
  }
  CHECK(kind_name(ErrorKind::ClauseCoverage) == "clause-coverage");
  CHECK(kind_name(ErrorKind::BottomIntroduction) == "bottom-introduction");
}

TEST_CASE("every corpus typing expectation holds") {
  for (const auto& c : corpus()) {
    if (c.expect != CorpusCase::Expect::TypeIs && c.expect != CorpusCase::Expect::TypeErrorExpected)
      continue;
    CAPTURE(c.name);
    CaseResult r = run_case(c);
    CHECK_MESSAGE(r.pass, r.observed);
  }
}

TEST_CASE("weakening: extra bindings do not change a closed type") {
  ModalContext d = ModalContext{}
                       .with_value("unused", int_type())
                       .with_modal("w", bool_type(), St());
  EffectContext g = EffectContext(Exn());
  for (const char* name : {"incr", "incr_n", "explode", "eval_f"}) {
    CAPTURE(name);
    Expr e = testing::expr_named(name);
    CHECK(type_equal(infer_expr(d, e), infer_expr({}, e)));
  }
  Comp c = comp_of("x <- raise(); ret x");
  CHECK(same(infer_comp({}, g, c), "bot"));
  CHECK(same(infer_comp(d, g.with_op(OpDecl{"other", unit_type(), int_type()}), c), "bot"));
}
