#pragma once

// The running examples (state, exceptions and their handlers) as parsed
// definitions, shared by the unit tests and the acceptance driver.

#include <string>
#include <string_view>

#include "ecmtt/surface.hpp"
#include "ecmtt/syntax.hpp"

namespace ecmtt::testing {

/// St, Exn, NDet, OpT, OpStop; handlerSt, handlerExn, handlerExplosiveSt,
/// simple, simpleStar, simpleDagger, handlerCount, handlerNDet; incr,
/// incr_n, explode, eval_f.
const Definitions& examples();
std::string_view examples_source();

Theory theory_named(std::string_view name);
Handler handler_named(std::string_view name);
Expr expr_named(std::string_view name);

Expr expr_of(std::string_view text);
Comp comp_of(std::string_view text);
Type type_of(std::string_view text);

/// Body of a box expression.
Comp box_body(const Expr& box);

}  // namespace ecmtt::testing
