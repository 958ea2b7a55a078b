#pragma once

// Executable metatheory: each check draws instances from the generator,
// verifies the premises with the checker, runs the operation and retypes
// the result. Instances whose substitution runs out of fuel are counted
// as inconclusive and replaced by fresh ones.

#include <cstdint>
#include <string>

namespace ecmtt::testing {

struct PropReport {
  int checked = 0;
  /// Instances that exercised the interesting case (u or k actually free).
  int nontrivial = 0;
  int inconclusive = 0;
  int failures = 0;
  std::string first_failure;

  bool ok(int wanted) const { return failures == 0 && checked >= wanted; }
  std::string summary() const;
};

/// Preservation and progress: every step of every program keeps a type
/// below the synthesized one and no step is Stuck(internal).
PropReport check_preservation(std::uint64_t seed, int programs);

PropReport check_monadic(std::uint64_t seed, int instances);
/// Both parts: computations and handlers with k free.
PropReport check_cont_comp(std::uint64_t seed, int instances);
PropReport check_cont_handler(std::uint64_t seed, int instances);
PropReport check_handle_with(std::uint64_t seed, int instances);
PropReport check_handle_seq(std::uint64_t seed, int instances);
PropReport check_modal(std::uint64_t seed, int instances);
PropReport check_eval_meta(std::uint64_t seed, int instances);

/// [e/x]t with normalization off loses no free variable of e.
PropReport check_capture(std::uint64_t seed, int instances);

/// parse(pretty(t)) is alpha-equal to t.
PropReport check_round_trip(std::uint64_t seed, int terms);

}  // namespace ecmtt::testing
