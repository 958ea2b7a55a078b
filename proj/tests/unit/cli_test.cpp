#include "doctest.h"

#include <sstream>
#include <string>

#include "ecmtt/cli.hpp"
#include "json.hpp"

using namespace ecmtt;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

constexpr std::string_view kIncr = R"(
def St = {get: unit => int, set: int => unit};;
def handlerSt = handler for St { get(x; k; z) -> k(z; z), set(x; k; z) -> k((); x), return(x; z) -> ret (x, z) };;
def incr = box St. x <- get(); _ <- set(x + 1); ret x;;
let box u = incr in x' <- handle u with handlerSt init 0; ret x'
)";

Run check(std::string_view src) {
  Run r;
  std::ostringstream out, err;
  r.code = check_source(src, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Run run(std::string_view src, std::uint64_t steps = 1000000, bool json = false) {
  Run r;
  std::ostringstream out, err;
  r.code = run_source(src, steps, json, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& s, std::string_view part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("check prints the type") {
  Run r = check(kIncr);
  CHECK(r.code == kExitOk);
  CHECK(r.out == "int * int\n");
}

TEST_CASE("check reports type errors with their kind") {
  Run r = check("box {}. get()");
  CHECK(r.code == kExitTypeError);
  CHECK(contains(r.err, "op-not-in-context"));
  Run a = check("(fn x: int. x) true");
  CHECK(a.code == kExitTypeError);
  CHECK(contains(a.err, "1:1: argument-mismatch: expected int, found bool"));
}

TEST_CASE("parse errors exit with 2") {
  Run r = check("fn x. x");
  CHECK(r.code == kExitParseError);
  CHECK(contains(r.err, "1:5: error:"));
  CHECK(run("(1").code == kExitParseError);
}

TEST_CASE("run prints the value") {
  Run r = run(kIncr);
  CHECK(r.code == kExitOk);
  CHECK(r.out == "ret (0, 1)\n");
  CHECK(run("1 + 2").out == "3\n");
}

TEST_CASE("run with json output") {
  Run r = run(kIncr, 1000000, true);
  REQUIRE(r.code == kExitOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["value"] == "ret (0, 1)");
  CHECK(j["result"] == "value");
  CHECK(j["steps"].get<int>() >= 1);
}

TEST_CASE("run runtime outcomes") {
  CHECK(run("1 / 0").code == kExitRuntimeError);
  Run f = run(kIncr, 0);
  CHECK(f.code == kExitFuelExhausted);
  CHECK(contains(f.err, "fuel"));
  // ill-typed programs are not run
  CHECK(run("(fn x: int. x) true").code == kExitTypeError);
}

TEST_CASE("trace numbers the steps") {
  std::ostringstream out, err;
  int code = trace_source(kIncr, 1000, false, out, err);
  CHECK(code == kExitOk);
  std::string s = out.str();
  CHECK(s.rfind("#0 initial ", 0) == 0);
  CHECK(contains(s, "#1 [beta-letbox] \xE2\x9F\xB6 ret (0, 1)"));
  CHECK_FALSE(contains(s, "payload:"));

  std::ostringstream eout, eerr;
  CHECK(trace_source(kIncr, 1000, true, eout, eerr) == kExitOk);
  CHECK(contains(eout.str(), "      payload: x <- get(); _ <- set(x + 1); ret x"));
  CHECK(contains(eout.str(), "    handle(ret x, "));
}

TEST_CASE("repl session") {
  std::istringstream in("def one = 1;;\n:t one\none + 41\nbox {}. get()\n(\n:q\nnever reached\n");
  std::ostringstream out;
  CHECK(cmd_repl(in, out, false) == kExitOk);
  std::string s = out.str();
  CHECK(contains(s, "defined one\n"));
  CHECK(contains(s, "int\n"));
  CHECK(contains(s, "42\n"));
  CHECK(contains(s, "op-not-in-context"));
  CHECK_FALSE(contains(s, "never"));
}

TEST_CASE("corpus command") {
  std::ostringstream out, err;
  CHECK(cmd_corpus(out, err) == kExitOk);
  CHECK(contains(out.str(), "passed"));
  CHECK(corpus().size() == corpus_sources().size());
}

TEST_CASE("corpus headers") {
  CorpusCase v = make_case("x", "-- expect: value ret 3\nret 3");
  CHECK(v.expect == CorpusCase::Expect::EvaluatesTo);
  CHECK(v.text == "ret 3");
  CorpusCase e = make_case("y", "-- expect: type-error not-a-box\nlet box u = 3 in box {}. ret 1");
  CHECK(e.expect == CorpusCase::Expect::TypeErrorExpected);
  CHECK(run_case(e).pass);
  CHECK_FALSE(run_case(make_case("z", "-- expect: value ret 4\nret 3")).pass);
}

TEST_CASE("file commands report missing files") {
  std::ostringstream out, err;
  CHECK(cmd_check("/nonexistent/file.ecmtt", out, err) == kExitIoError);
  CHECK(cmd_run("/nonexistent/file.ecmtt", 10, false, out, err) == kExitIoError);
}
