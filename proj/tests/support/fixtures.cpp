#include "support/fixtures.hpp"

#include <stdexcept>

namespace ecmtt::testing {

namespace {

constexpr std::string_view kExamples = R"ecmtt(
def St = {get: unit => int, set: int => unit};;
def Exn = {raise: unit => bot};;
def NDet = {choice: unit => bool};;
def OpT = {op: unit => int};;
def OpStop = {op: unit => int, stop: unit => int};;
def handlerSt = handler for St { get(x; k; z) -> k(z; z), set(x; k; z) -> k((); x), return(x; z) -> ret (x, z) };;
def handlerExn = handler for Exn { raise(x; k; z) -> ret 42, return(x; z) -> ret x };;
def handlerExplosiveSt = handler for St { get(x; k; z) -> k(z; z), set(x; k; z) -> if x = 13 then raise() else k((); x), return(x; z) -> ret (x, z) };;
def simple = handler for {} { return(x; z) -> ret (x, z) };;
def simpleStar = handler for OpT { op(x; k; z) -> k(1; z + 4), return(x; z) -> ret (x, z) };;
def simpleDagger = handler for OpStop { op(x; k; z) -> k(1; z + 4), stop(x; k; z) -> ret (42, z), return(x; z) -> ret (x, z) };;
def handlerCount = handler for OpStop {
  op(x; k; z) -> y <- k(1; z); ret (fst y + 1, snd y),
  stop(x; k; z) -> y <- k(1; z); ret (fst y, snd y + 1),
  return(x; z) -> ret (0, 0)
};;
def handlerNDet = handler for NDet {
  choice(x; k; z) -> y1 <- k(true; z); y2 <- k(false; z); ret (y1 ++ y2),
  return(x; z) -> ret [x]
};;
def incr = box St. y <- get(); _ <- set(y + 1); ret y;;
def incr_n = fn n: int. box St. y <- get(); _ <- set(y + n); ret y;;
def explode = fn m: int. let box u = incr_n 1 in box Exn. x <- handle u with handlerExplosiveSt init m; ret (fst x);;
def eval_f = fn x: [{}] int. let box u = x in eval u;;
()
)ecmtt";

const NamedDef& find(std::string_view name) {
  for (const auto& d : examples().all())
    if (d.name == name) return d;
  throw std::out_of_range("no example named " + std::string(name));
}

}  // namespace

std::string_view examples_source() { return kExamples; }

const Definitions& examples() {
  static const Definitions defs = [] {
    Definitions out;
    for (const auto& d : parse(kExamples).defs) out.add(d);
    return out;
  }();
  return defs;
}

Theory theory_named(std::string_view name) { return std::get<Theory>(find(name).value); }

Handler handler_named(std::string_view name) {
  return desugar(std::get<Handler>(find(name).value));
}

Expr expr_named(std::string_view name) {
  return desugar(std::get<Expr>(std::get<Term>(find(name).value)));
}

Expr expr_of(std::string_view text) { return desugar(parse_expr(text, examples())); }
Comp comp_of(std::string_view text) { return desugar(parse_comp(text, examples())); }
Type type_of(std::string_view text) { return parse_type(text, examples()); }

Comp box_body(const Expr& box) {
  auto* b = as<expr::Box>(box);
  if (!b) throw std::invalid_argument("not a box expression");
  return b->body;
}

}  // namespace ecmtt::testing
