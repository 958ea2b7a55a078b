#pragma once

// Command implementations behind the `ecmtt` executable. Every command
// writes to the given streams and returns the process exit status.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecmtt/surface.hpp"
#include "ecmtt/syntax.hpp"

namespace ecmtt {

enum ExitCode : int {
  kExitOk = 0,
  kExitTypeError = 1,
  kExitParseError = 2,
  kExitFuelExhausted = 3,
  kExitIoError = 4,
  kExitRuntimeError = 5,
};

struct CliConfig {
  enum class Command { Check, Run, Trace, Repl, Corpus };
  enum class Format { Pretty, Json };
  Command command = Command::Check;
  std::string input_path;
  std::uint64_t max_steps = 1'000'000;
  Format format = Format::Pretty;
  bool explain = false;
};

/// A parsed and desugared source file.
struct Program {
  SourceFile file;
  Definitions defs;
  Term main;
};

/// Throws ParseError.
Program load_program(std::string_view text);

int cmd_check(const std::string& path, std::ostream& out, std::ostream& err);
int cmd_run(const std::string& path, std::uint64_t max_steps, bool json, std::ostream& out,
            std::ostream& err);
int cmd_trace(const std::string& path, std::uint64_t max_steps, bool explain, std::ostream& out,
              std::ostream& err);
int cmd_repl(std::istream& in, std::ostream& out, bool prompt);
int cmd_corpus(std::ostream& out, std::ostream& err);

int run_cli(const CliConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

// The same commands over source text instead of a file.
int check_source(std::string_view text, std::ostream& out, std::ostream& err);
int run_source(std::string_view text, std::uint64_t max_steps, bool json, std::ostream& out,
               std::ostream& err);
int trace_source(std::string_view text, std::uint64_t max_steps, bool explain, std::ostream& out,
                 std::ostream& err);

struct CorpusCase {
  enum class Expect { TypeIs, TypeErrorExpected, EvaluatesTo, ParseErrorExpected };
  std::string name;
  std::string source;
  Expect expect = Expect::TypeIs;
  /// Type text, error kind, or value text.
  std::string text;
};

struct CaseResult {
  bool pass = false;
  std::string observed;
};

/// (name, text) of every embedded corpus file.
const std::vector<std::pair<std::string, std::string>>& corpus_sources();

/// Reads the `-- expect:` header of a corpus file.
CorpusCase make_case(const std::string& name, const std::string& source);
const std::vector<CorpusCase>& corpus();
CaseResult run_case(const CorpusCase& c);

std::string_view expect_name(CorpusCase::Expect e);

}  // namespace ecmtt
