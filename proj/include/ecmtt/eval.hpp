#pragma once

// Call-by-value small-step semantics with a fueled multi-step driver.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecmtt/subst.hpp"
#include "ecmtt/syntax.hpp"

namespace ecmtt {

enum class StuckReason { DivisionByZero, Internal };

std::string_view stuck_name(StuckReason reason);

struct StepResult {
  enum class Kind { Stepped, Value, Stuck, OutOfFuel };
  Kind kind = Kind::Value;
  Term term;          // next term (Stepped) or the value itself (Value)
  std::string rule;   // outermost rule applied (Stepped)
  StuckReason reason = StuckReason::Internal;
  std::string message;  // Stuck or OutOfFuel detail
  /// The let-box redex contracted by a beta-letbox step.
  std::optional<Term> redex;
  /// Modal-substitution events recorded while contracting that redex.
  std::vector<ModalHandleEvent> events;
  /// handle(c, h, state) calls made while contracting that redex.
  std::vector<HandleCall> handles;
};

struct StepOptions {
  SubstOptions subst;
  /// Record ModalHandleEvents in StepResult::events.
  bool observe = false;
};

/// One step of the closed-term semantics.
StepResult step(const Term& t, const StepOptions& options = {});

/// Names of every rule whose conclusion matches `t` at the root (used to
/// check that the semantics is deterministic).
std::vector<std::string> rule_candidates(const Term& t);

struct TraceStep {
  std::string rule;
  Term term;
  /// The redex contracted by a beta-letbox step (let-box with a box value).
  std::optional<Term> redex;
  std::vector<ModalHandleEvent> events;
  std::vector<HandleCall> handles;
};

struct Trace {
  enum class Outcome { Value, Stuck, FuelExhausted };
  Term initial;
  std::vector<TraceStep> steps;  // empty unless recording
  Outcome outcome = Outcome::Value;
  Term final;
  StuckReason reason = StuckReason::Internal;
  std::string message;
  std::uint64_t count = 0;
};

struct EvalOptions {
  std::uint64_t fuel = 1'000'000;
  bool record = false;
  bool observe = false;
  SubstOptions subst;
};

/// 10^6, or the value of ECMTT_MAX_STEPS when it is a positive integer.
std::uint64_t default_fuel();

Trace evaluate(const Term& t, const EvalOptions& options);
Trace evaluate(const Term& t, std::uint64_t fuel = default_fuel());

/// "#N [rule] ⟶ term"
std::string render_step(std::uint64_t n, const std::string& rule, const Term& term);

}  // namespace ecmtt
