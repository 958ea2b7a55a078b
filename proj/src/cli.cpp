#include "ecmtt/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "ecmtt/eval.hpp"
#include "ecmtt/subst.hpp"
#include "ecmtt/typecheck.hpp"

namespace ecmtt {

namespace {

bool read_file(const std::string& path, std::string& text, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << path << "\n";
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  text = buf.str();
  return true;
}

void print_parse_error(const ParseError& e, std::ostream& err) {
  for (const auto& d : e.diagnostics()) err << d.render() << "\n";
  if (e.diagnostics().empty()) err << "error: " << e.what() << "\n";
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Parses and typechecks; on failure prints and returns the exit code.
std::optional<int> front(std::string_view text, Program& prog, Type& type, std::ostream& err) {
  try {
    prog = load_program(text);
  } catch (const ParseError& e) {
    print_parse_error(e, err);
    return kExitParseError;
  }
  try {
    type = infer_term(prog.main);
  } catch (const TypeError& e) {
    err << e.render() << "\n";
    return kExitTypeError;
  }
  return std::nullopt;
}

int outcome_code(const Trace& t) {
  switch (t.outcome) {
    case Trace::Outcome::Value:
      return kExitOk;
    case Trace::Outcome::FuelExhausted:
      return kExitFuelExhausted;
    case Trace::Outcome::Stuck:
      return kExitRuntimeError;
  }
  return kExitRuntimeError;
}

void report_failure(const Trace& t, std::ostream& err) {
  if (t.outcome == Trace::Outcome::FuelExhausted) {
    if (!t.message.empty())
      err << "error: " << t.message << " at step " << t.count + 1 << "\n";
    else
      err << "error: fuel exhausted after " << t.count << " steps\n";
  } else if (t.outcome == Trace::Outcome::Stuck) {
    err << "error: " << stuck_name(t.reason);
    if (!t.message.empty()) err << ": " << t.message;
    err << "\n";
  }
}

void explain(const TraceStep& s, std::ostream& out) {
  if (!s.redex) return;
  const auto* c = std::get_if<Comp>(&*s.redex);
  const auto* e = std::get_if<Expr>(&*s.redex);
  std::string u;
  const expr::Box* box = nullptr;
  std::string body;
  if (c) {
    if (auto* lb = as<comp::LetBox>(*c)) {
      u = lb->u;
      box = as<expr::Box>(lb->bound);
      body = pretty(lb->body);
    }
  } else if (e) {
    if (auto* lb = as<expr::LetBox>(*e)) {
      u = lb->u;
      box = as<expr::Box>(lb->bound);
      body = pretty(lb->body);
    }
  }
  if (!box) return;
  out << "    [[" << pretty(box->theory) << ". " << pretty(box->body) << " / " << u << "]] "
      << body << "\n";
  out << "      theory:  " << pretty(box->theory) << "\n";
  out << "      payload: " << pretty(box->body) << "\n";
  out << "      target:  " << u << "\n";
  out << "      body:    " << body << "\n";
  for (const auto& ev : s.events) {
    out << "    <<handle(handleseq(" << pretty(ev.payload) << ", " << pretty(ev.seq) << "), "
        << pretty(ev.handler) << ", " << pretty(ev.init) << ") / " << ev.x << ">> "
        << pretty(ev.cont) << "\n";
    out << "      payload: " << pretty(ev.payload) << "\n";
    out << "      seq:     " << pretty(ev.seq) << "\n";
    out << "      handler: " << pretty(ev.handler) << "\n";
    out << "      init:    " << pretty(ev.init) << "\n";
    out << "      binder:  " << ev.x << "\n";
    out << "      cont:    " << pretty(ev.cont) << "\n";
  }
  for (const auto& call : s.handles) {
    out << "    handle(" << pretty(call.comp) << ", " << pretty(call.handler) << ", "
        << pretty(call.state) << ")\n";
  }
}

}  // namespace

Program load_program(std::string_view text) {
  Program p;
  p.file = parse(text);
  for (const auto& d : p.file.defs) p.defs.add(d);
  p.main = desugar(p.file.main);
  return p;
}

int check_source(std::string_view text, std::ostream& out, std::ostream& err) {
  Program prog;
  Type type;
  if (auto code = front(text, prog, type, err)) return *code;
  out << pretty(type) << "\n";
  return kExitOk;
}

int run_source(std::string_view text, std::uint64_t max_steps, bool json, std::ostream& out,
               std::ostream& err) {
  Program prog;
  Type type;
  if (auto code = front(text, prog, type, err)) return *code;
  Trace t = evaluate(prog.main, max_steps);
  int code = outcome_code(t);
  if (json) {
    nlohmann::json j;
    switch (t.outcome) {
      case Trace::Outcome::Value:
        j["result"] = "value";
        break;
      case Trace::Outcome::FuelExhausted:
        j["result"] = "fuel-exhausted";
        break;
      case Trace::Outcome::Stuck:
        j["result"] = std::string(stuck_name(t.reason));
        break;
    }
    j["value"] = pretty(t.final);
    j["steps"] = t.count;
    out << j.dump() << "\n";
    return code;
  }
  if (code == kExitOk) {
    out << pretty(t.final) << "\n";
  } else {
    report_failure(t, err);
  }
  return code;
}

int trace_source(std::string_view text, std::uint64_t max_steps, bool explain_steps,
                 std::ostream& out, std::ostream& err) {
  Program prog;
  Type type;
  if (auto code = front(text, prog, type, err)) return *code;
  out << "#0 initial " << pretty(prog.main) << "\n";
  StepOptions so;
  so.observe = explain_steps;
  Term cur = prog.main;
  std::uint64_t n = 0;
  while (true) {
    StepResult r = step(cur, so);
    if (r.kind == StepResult::Kind::Value) {
      out << pretty(cur) << "\n";
      return kExitOk;
    }
    if (r.kind == StepResult::Kind::Stuck) {
      err << "error: " << stuck_name(r.reason);
      if (!r.message.empty()) err << ": " << r.message;
      err << "\n";
      return kExitRuntimeError;
    }
    if (r.kind == StepResult::Kind::OutOfFuel) {
      err << "error: " << r.message << " at step " << n + 1 << "\n";
      return kExitFuelExhausted;
    }
    if (n == max_steps) {
      err << "error: fuel exhausted after " << n << " steps\n";
      return kExitFuelExhausted;
    }
    ++n;
    cur = r.term;
    out << render_step(n, r.rule, cur) << "\n";
    if (explain_steps && r.rule == "beta-letbox") {
      TraceStep ts{r.rule, cur, r.redex, r.events, r.handles};
      explain(ts, out);
    }
  }
}

int cmd_check(const std::string& path, std::ostream& out, std::ostream& err) {
  std::string text;
  if (!read_file(path, text, err)) return kExitIoError;
  return check_source(text, out, err);
}

int cmd_run(const std::string& path, std::uint64_t max_steps, bool json, std::ostream& out,
            std::ostream& err) {
  std::string text;
  if (!read_file(path, text, err)) return kExitIoError;
  return run_source(text, max_steps, json, out, err);
}

int cmd_trace(const std::string& path, std::uint64_t max_steps, bool explain_steps,
              std::ostream& out, std::ostream& err) {
  std::string text;
  if (!read_file(path, text, err)) return kExitIoError;
  return trace_source(text, max_steps, explain_steps, out, err);
}

int cmd_repl(std::istream& in, std::ostream& out, bool prompt) {
  Definitions defs;
  std::string line;
  while (true) {
    if (prompt) out << "ecmtt> " << std::flush;
    if (!std::getline(in, line)) break;
    try {
      ReplInput r = parse_repl_line(line, defs);
      switch (r.kind) {
        case ReplInput::Kind::Quit:
          return kExitOk;
        case ReplInput::Kind::Empty:
          break;
        case ReplInput::Kind::Define:
          defs.add(r.def);
          out << "defined " << r.def.name << "\n";
          break;
        case ReplInput::Kind::TypeOf:
          out << pretty(infer_term(desugar(r.term))) << "\n";
          break;
        case ReplInput::Kind::Run: {
          Term t = desugar(r.term);
          infer_term(t);
          Trace tr = evaluate(t, default_fuel());
          if (tr.outcome == Trace::Outcome::Value) {
            out << pretty(tr.final) << "\n";
          } else {
            report_failure(tr, out);
          }
          break;
        }
      }
    } catch (const ParseError& e) {
      print_parse_error(e, out);
    } catch (const TypeError& e) {
      out << e.render() << "\n";
    }
  }
  return kExitOk;
}

std::string_view expect_name(CorpusCase::Expect e) {
  switch (e) {
    case CorpusCase::Expect::TypeIs:
      return "type";
    case CorpusCase::Expect::TypeErrorExpected:
      return "type-error";
    case CorpusCase::Expect::EvaluatesTo:
      return "value";
    case CorpusCase::Expect::ParseErrorExpected:
      return "parse-error";
  }
  return "?";
}

CorpusCase make_case(const std::string& name, const std::string& source) {
  CorpusCase c;
  c.name = name;
  c.source = source;
  std::string first = source.substr(0, source.find('\n'));
  const std::string tag = "-- expect:";
  if (first.rfind(tag, 0) != 0) throw std::invalid_argument(name + ": missing expect header");
  std::string rest = trim(std::string_view(first).substr(tag.size()));
  auto sp = rest.find(' ');
  std::string kind = rest.substr(0, sp);
  c.text = sp == std::string::npos ? "" : trim(std::string_view(rest).substr(sp));
  if (kind == "type") {
    c.expect = CorpusCase::Expect::TypeIs;
  } else if (kind == "type-error") {
    c.expect = CorpusCase::Expect::TypeErrorExpected;
  } else if (kind == "value") {
    c.expect = CorpusCase::Expect::EvaluatesTo;
  } else if (kind == "parse-error") {
    c.expect = CorpusCase::Expect::ParseErrorExpected;
  } else {
    throw std::invalid_argument(name + ": unknown expectation " + kind);
  }
  return c;
}

const std::vector<CorpusCase>& corpus() {
  static const std::vector<CorpusCase> cases = [] {
    std::vector<CorpusCase> v;
    for (const auto& [name, text] : corpus_sources()) v.push_back(make_case(name, text));
    return v;
  }();
  return cases;
}

CaseResult run_case(const CorpusCase& c) {
  CaseResult r;
  Program prog;
  try {
    prog = load_program(c.source);
  } catch (const ParseError& e) {
    r.observed = "parse-error";
    if (!e.diagnostics().empty()) r.observed += " " + e.diagnostics().front().render();
    r.pass = c.expect == CorpusCase::Expect::ParseErrorExpected;
    return r;
  }
  if (c.expect == CorpusCase::Expect::ParseErrorExpected) {
    r.observed = "parsed";
    return r;
  }
  Type type;
  try {
    type = infer_term(prog.main);
  } catch (const TypeError& e) {
    r.observed = std::string("type-error ") + std::string(kind_name(e.kind()));
    r.pass = c.expect == CorpusCase::Expect::TypeErrorExpected &&
             kind_name(e.kind()) == c.text;
    return r;
  }
  switch (c.expect) {
    case CorpusCase::Expect::TypeIs: {
      r.observed = pretty(type);
      try {
        r.pass = type_equal(type, parse_type(c.text));
      } catch (const ParseError&) {
        r.pass = false;
      }
      return r;
    }
    case CorpusCase::Expect::EvaluatesTo: {
      Trace t = evaluate(prog.main, default_fuel());
      if (t.outcome != Trace::Outcome::Value) {
        r.observed = t.outcome == Trace::Outcome::FuelExhausted
                         ? "fuel-exhausted"
                         : std::string(stuck_name(t.reason));
        return r;
      }
      r.observed = pretty(t.final);
      r.pass = r.observed == c.text;
      return r;
    }
    default:
      r.observed = pretty(type);
      return r;
  }
}

int cmd_corpus(std::ostream& out, std::ostream& err) {
  const std::vector<CorpusCase>* cases = nullptr;
  try {
    cases = &corpus();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIoError;
  }
  std::size_t width = 4;
  for (const auto& c : *cases) width = std::max(width, c.name.size());
  std::size_t failed = 0;
  out << std::left << std::setw(static_cast<int>(width)) << "case"
      << "  result  expectation / observed\n";
  for (const auto& c : *cases) {
    CaseResult r = run_case(c);
    if (!r.pass) ++failed;
    out << std::left << std::setw(static_cast<int>(width)) << c.name << "  "
        << (r.pass ? "PASS  " : "FAIL  ") << "  " << expect_name(c.expect);
    if (!c.text.empty()) out << " " << c.text;
    out << " / " << r.observed << "\n";
  }
  out << (cases->size() - failed) << "/" << cases->size() << " passed\n";
  return failed == 0 ? kExitOk : kExitTypeError;
}

int run_cli(const CliConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
  bool json = config.format == CliConfig::Format::Json;
  switch (config.command) {
    case CliConfig::Command::Check:
      return cmd_check(config.input_path, out, err);
    case CliConfig::Command::Run:
      return cmd_run(config.input_path, config.max_steps, json, out, err);
    case CliConfig::Command::Trace:
      return cmd_trace(config.input_path, config.max_steps, config.explain, out, err);
    case CliConfig::Command::Repl:
      return cmd_repl(in, out, &in == &std::cin);
    case CliConfig::Command::Corpus:
      return cmd_corpus(out, err);
  }
  return kExitRuntimeError;
}

}  // namespace ecmtt
