#include <charconv>
#include <optional>

#include "ecmtt/surface.hpp"
#include "lexer.hpp"

namespace ecmtt {

using detail::Tok;
using detail::Token;

std::string Diagnostic::render() const {
  std::string sev = severity == Severity::Error ? "error" : "warning";
  return std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + sev + ": " +
         message;
}

namespace {
std::string first_message(const std::vector<Diagnostic>& ds) {
  return ds.empty() ? std::string("parse error") : ds.front().render();
}
}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(first_message(diagnostics)), diagnostics_(std::move(diagnostics)) {}

void Definitions::add(const NamedDef& def) {
  auto it = index_.find(def.name);
  if (it != index_.end()) {
    defs_[it->second] = def;
    return;
  }
  index_.emplace(def.name, defs_.size());
  defs_.push_back(def);
}

const Definition* Definitions::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &defs_[it->second].value;
}

namespace {

bool later(const Span& a, const Span& b) {
  return a.line != b.line ? a.line > b.line : a.column > b.column;
}

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

class Parser {
 public:
  Parser(std::string_view text, Definitions defs) : toks_(detail::lex(text)), defs_(std::move(defs)) {}

  SourceFile file() {
    SourceFile out;
    while (is_kw("def")) {
      NamedDef d = definition(true);
      out.defs.push_back(d);
    }
    if (peek().kind == Tok::End) fail(peek(), "expected a main term");
    out.main = ambiguous_term({";;"});
    accept(";;");
    expect_end();
    return out;
  }

  ReplInput repl() {
    ReplInput out;
    if (peek().kind == Tok::End) return out;
    if (is_kw("def")) {
      out.kind = ReplInput::Kind::Define;
      out.def = definition(false);
      expect_end();
      return out;
    }
    out.kind = ReplInput::Kind::Run;
    out.term = ambiguous_term({";;"});
    accept(";;");
    expect_end();
    return out;
  }

  Term whole_term() {
    Term t = ambiguous_term({});
    expect_end();
    return t;
  }

  Expr whole_expr() {
    Expr e = expr();
    expect_end();
    return e;
  }

  Comp whole_comp() {
    Comp c = comp();
    expect_end();
    return c;
  }

  Type whole_type() {
    Type t = type();
    expect_end();
    return t;
  }

  Theory whole_theory() {
    Theory t = theory();
    expect_end();
    return t;
  }

  Handler whole_handler() {
    Handler h = handler();
    expect_end();
    return h;
  }

  const Definitions& defs() const { return defs_; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Definitions defs_;
  std::vector<std::string> scope_;  // locally bound value names

  // -- token helpers ---------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Sym && t.text == s;
  }
  bool is_kw(std::string_view s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Keyword && t.text == s;
  }
  bool accept(std::string_view s) {
    if (is_sym(s) || is_kw(s)) {
      next();
      return true;
    }
    return false;
  }
  const Token& expect(std::string_view s) {
    if (!is_sym(s) && !is_kw(s))
      fail(peek(), "expected '" + std::string(s) + "', found " + describe(peek()));
    return next();
  }
  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident)
      fail(peek(), std::string("expected ") + what + ", found " + describe(peek()));
    return next().text;
  }
  void expect_end() {
    if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()));
  }

  [[noreturn]] static void fail(const Token& at, std::string msg) {
    throw ParseError({Diagnostic{Diagnostic::Severity::Error, std::move(msg), at.span}});
  }
  [[noreturn]] static void fail(Span at, std::string msg) {
    throw ParseError({Diagnostic{Diagnostic::Severity::Error, std::move(msg), at}});
  }

  bool locally_bound(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (*it == name) return true;
    return false;
  }

  struct ScopeGuard {
    Parser& p;
    std::size_t size;
    explicit ScopeGuard(Parser& parser) : p(parser), size(parser.scope_.size()) {}
    ~ScopeGuard() { p.scope_.resize(size); }
  };

  bool at_any(const std::vector<std::string>& stops) const {
    if (peek().kind == Tok::End) return true;
    for (const auto& s : stops)
      if (is_sym(s)) return true;
    return false;
  }

  // -- definitions -------------------------------------------------------------

  NamedDef definition(bool require_terminator) {
    const Token& kw = expect("def");
    NamedDef d;
    d.span = kw.span;
    const Token& name_tok = peek();
    d.name = ident("definition name");
    expect("=");
    if (is_kw("handler")) {
      d.value = handler();
    } else if (is_sym("{") || starts_theory_def()) {
      d.value = theory();
    } else {
      d.value = ambiguous_term({";;"});
    }
    if (require_terminator) {
      expect(";;");
    } else {
      accept(";;");
    }
    if (defs_.contains(d.name) && require_terminator)
      fail(name_tok, "duplicate definition '" + d.name + "'");
    defs_.add(d);
    return d;
  }

  bool starts_theory_def() const {
    if (peek().kind != Tok::Ident) return false;
    const Definition* d = defs_.find(peek().text);
    return d && std::holds_alternative<Theory>(*d);
  }

  // -- types and theories --------------------------------------------------------

  Type type() {
    Type left = prod_type_();
    if (accept("->")) return arrow_type(left, type());
    return left;
  }

  Type prod_type_() {
    Type left = prefix_type();
    while (accept("*")) left = prod_type(left, prefix_type());
    return left;
  }

  Type prefix_type() {
    if (accept("list")) return list_type(prefix_type());
    if (accept("[")) {
      Theory th = theory();
      expect("]");
      return box_type(std::move(th), prefix_type());
    }
    return atom_type();
  }

  Type atom_type() {
    const Token& t = peek();
    if (accept("unit")) return unit_type();
    if (accept("int")) return int_type();
    if (accept("bool")) return bool_type();
    if (accept("bot")) return bottom_type();
    if (accept("(")) {
      Type inner = type();
      expect(")");
      return inner;
    }
    if (t.kind == Tok::Ident) return base_type(next().text);
    fail(t, "expected a type, found " + describe(t));
  }

  Theory theory() {
    Theory out;
    Span start = peek().span;
    do {
      out = concat(out, theory_atom());
    } while (accept(","));
    if (auto dup = out.duplicate()) fail(start, "duplicate operation '" + *dup + "' in theory");
    return out;
  }

  Theory theory_atom() {
    const Token& t = peek();
    if (accept("{")) {
      Theory out;
      if (!is_sym("}")) {
        do {
          OpDecl op;
          op.name = ident("operation name");
          expect(":");
          op.in = type();
          expect("=>");
          op.out = type();
          out.ops.push_back(std::move(op));
        } while (accept(","));
      }
      expect("}");
      return out;
    }
    if (t.kind == Tok::Ident) {
      const Definition* d = defs_.find(t.text);
      if (!d) fail(t, "unbound definition '" + t.text + "'");
      if (!std::holds_alternative<Theory>(*d)) fail(t, "definition '" + t.text + "' is not a theory");
      next();
      return std::get<Theory>(*d);
    }
    fail(t, "expected a theory, found " + describe(t));
  }

  // -- handlers and handling sequences ---------------------------------------------

  Handler handler() {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      const Definition* d = defs_.find(t.text);
      if (!d) fail(t, "unbound definition '" + t.text + "'");
      if (!std::holds_alternative<Handler>(*d))
        fail(t, "definition '" + t.text + "' is not a handler");
      next();
      return std::get<Handler>(*d);
    }
    if (!is_kw("handler")) fail(t, "expected a handler, found " + describe(t));
    next();
    Handler h;
    h.span = t.span;
    expect("for");
    h.theory = theory();
    expect("{");
    bool have_return = false;
    NameSet seen;
    if (!is_sym("}")) {
      do {
        const Token& head = peek();
        if (accept("return")) {
          if (have_return) fail(head, "duplicate return clause");
          have_return = true;
          expect("(");
          h.ret.x = ident("parameter");
          expect(";");
          h.ret.z = ident("parameter");
          expect(")");
          if (h.ret.x == h.ret.z) fail(head, "return clause parameters must be distinct");
          expect("->");
          ScopeGuard g(*this);
          scope_.push_back(h.ret.x);
          scope_.push_back(h.ret.z);
          h.ret.body = comp();
        } else {
          OpClause c;
          c.op = ident("operation clause");
          if (!seen.insert(c.op).second) fail(head, "duplicate clause for operation '" + c.op + "'");
          expect("(");
          c.x = ident("parameter");
          expect(";");
          c.k = ident("continuation");
          expect(";");
          c.z = ident("parameter");
          expect(")");
          if (c.x == c.z) fail(head, "clause parameters must be distinct");
          expect("->");
          ScopeGuard g(*this);
          scope_.push_back(c.x);
          scope_.push_back(c.z);
          c.body = comp();
          h.clauses.push_back(std::move(c));
        }
      } while (accept(","));
    }
    expect("}");
    if (!have_return) fail(t, "handler has no return clause");
    return h;
  }

  HandlingSequence hseq() {
    expect("[");
    HandlingSequence out;
    while (!is_sym("]")) {
      SeqClause c;
      c.handler = handler();
      expect("init");
      c.init = expr();
      expect("as");
      c.x = ident("binder");
      expect(".");
      {
        ScopeGuard g(*this);
        scope_.push_back(c.x);
        c.cont = comp();
      }
      out.push_back(std::move(c));
      if (!accept(";")) break;
    }
    expect("]");
    return out;
  }

  // -- computations -------------------------------------------------------------------

  Term ambiguous_term(const std::vector<std::string>& stops) {
    std::size_t start = pos_;
    std::size_t depth = scope_.size();
    std::optional<ParseError> comp_error;
    try {
      Comp c = comp();
      if (!at_any(stops)) fail(peek(), "unexpected " + describe(peek()));
      return c;
    } catch (const ParseError& e) {
      comp_error = e;
    }
    pos_ = start;
    scope_.resize(depth);
    try {
      Expr e = expr();
      if (!at_any(stops)) fail(peek(), "unexpected " + describe(peek()));
      return e;
    } catch (const ParseError& e) {
      const Span& a = comp_error->diagnostics().front().span;
      const Span& b = e.diagnostics().front().span;
      if (later(a, b)) throw *comp_error;
      throw;
    }
  }

  FixDef fix_head(Span& span) {
    FixDef d;
    span = expect("fix").span;
    d.f = ident("function name");
    expect("(");
    d.x = ident("parameter");
    expect(":");
    d.annot = type();
    expect(")");
    expect(":");
    expect("[");
    d.theory = theory();
    expect("]");
    d.ret = type();
    expect("=");
    ScopeGuard g(*this);
    scope_.push_back(d.f);
    scope_.push_back(d.x);
    d.body = comp();
    return d;
  }

  Comp comp() {
    const Token& t = peek();
    if (accept("ret")) return make_comp(comp::Ret{expr()}, t.span);
    if (is_kw("let") && is_kw("box", 1)) {
      next();
      next();
      std::string u = ident("modal variable");
      expect("=");
      Expr bound = expr();
      expect("in");
      return make_comp(comp::LetBox{u, bound, comp()}, t.span);
    }
    if (is_kw("let") && is_kw("fix", 1)) {
      next();
      Span span;
      FixDef d = fix_head(span);
      expect("in");
      ScopeGuard g(*this);
      scope_.push_back(d.f);
      Comp scope = comp();
      return make_comp(comp::Fix{std::move(d), scope}, t.span);
    }
    if (accept("if")) {
      Expr cond = expr();
      expect("then");
      Comp a = comp();
      expect("else");
      Comp b = comp();
      return make_comp(comp::If{cond, a, b}, t.span);
    }
    if (accept("(")) {
      Comp inner = comp();
      expect(")");
      return inner;
    }
    if (is_kw("handle")) return make_comp(comp::Perform{statement()}, t.span);
    if (t.kind == Tok::Ident) {
      if (is_sym("<-", 1)) {
        std::string x = next().text;
        next();
        if (accept("ret")) {
          Expr value = expr();
          expect(";");
          ScopeGuard g(*this);
          scope_.push_back(x);
          return make_comp(comp::BindRet{value, x, comp()}, t.span);
        }
        Stmt s = statement();
        expect(";");
        ScopeGuard g(*this);
        scope_.push_back(x);
        return make_comp(comp::Bind{s, x, comp()}, t.span);
      }
      if (is_sym("(", 1)) return make_comp(comp::Perform{statement()}, t.span);
      if (!locally_bound(t.text)) {
        if (const Definition* d = defs_.find(t.text)) {
          const Term* term = std::get_if<Term>(d);
          if (!term || !std::holds_alternative<Comp>(*term))
            fail(t, "definition '" + t.text + "' is not a computation");
          next();
          return std::get<Comp>(*term);
        }
      }
    }
    fail(t, "expected a computation, found " + describe(t));
  }

  Stmt statement() {
    const Token& t = peek();
    if (accept("handle")) {
      stmt::Handle h;
      h.u = ident("modal variable");
      if (is_sym("[")) h.seq = hseq();
      expect("with");
      h.handler = handler();
      expect("init");
      h.init = expr();
      return make_stmt(std::move(h), t.span);
    }
    if (t.kind != Tok::Ident) fail(t, "expected a statement, found " + describe(t));
    if (!locally_bound(t.text) && defs_.contains(t.text))
      fail(t, "definition '" + t.text + "' used as an operation");
    std::string name = next().text;
    expect("(");
    Expr arg;
    if (is_sym(")")) {
      arg = make_expr(expr::UnitLit{}, peek().span);
    } else {
      arg = expr();
    }
    if (accept(";")) {
      Expr state = expr();
      expect(")");
      return make_stmt(stmt::ContCall{name, arg, state}, t.span);
    }
    expect(")");
    return make_stmt(stmt::OpCall{name, arg}, t.span);
  }

  // -- expressions ------------------------------------------------------------------

  Expr expr() {
    const Token& t = peek();
    if (accept("fn")) {
      std::string x = ident("parameter");
      expect(":");
      Type annot = type();
      expect(".");
      ScopeGuard g(*this);
      scope_.push_back(x);
      return make_expr(expr::Lam{x, annot, expr()}, t.span);
    }
    if (is_kw("let") && is_kw("box", 1)) {
      next();
      next();
      std::string u = ident("modal variable");
      expect("=");
      Expr bound = expr();
      expect("in");
      return make_expr(expr::LetBox{u, bound, expr()}, t.span);
    }
    if (is_kw("let") && is_kw("fix", 1)) {
      next();
      Span span;
      FixDef d = fix_head(span);
      expect("in");
      ScopeGuard g(*this);
      scope_.push_back(d.f);
      Expr scope = expr();
      return make_expr(expr::Fix{std::move(d), scope}, t.span);
    }
    if (accept("if")) {
      Expr cond = expr();
      expect("then");
      Expr a = expr();
      expect("else");
      Expr b = expr();
      return make_expr(expr::If{cond, a, b}, t.span);
    }
    if (accept("box")) {
      Theory th = theory();
      expect(".");
      return make_expr(expr::Box{std::move(th), comp()}, t.span);
    }
    return cmp_expr();
  }

  Expr cmp_expr() {
    Expr left = append_expr();
    const Token& t = peek();
    if (accept("=")) return make_expr(expr::Cmp{CmpOp::Eq, left, append_expr()}, t.span);
    if (accept("<")) return make_expr(expr::Cmp{CmpOp::Lt, left, append_expr()}, t.span);
    return left;
  }

  Expr append_expr() {
    Expr left = add_expr();
    const Token& t = peek();
    if (accept("++")) return make_expr(expr::Append{left, append_expr()}, t.span);
    return left;
  }

  Expr add_expr() {
    Expr left = mul_expr();
    for (;;) {
      const Token& t = peek();
      if (accept("+")) {
        left = make_expr(expr::Arith{ArithOp::Add, left, mul_expr()}, t.span);
      } else if (accept("-")) {
        left = make_expr(expr::Arith{ArithOp::Sub, left, mul_expr()}, t.span);
      } else {
        return left;
      }
    }
  }

  Expr mul_expr() {
    Expr left = app_expr();
    for (;;) {
      const Token& t = peek();
      if (accept("*")) {
        left = make_expr(expr::Arith{ArithOp::Mul, left, app_expr()}, t.span);
      } else if (accept("/")) {
        left = make_expr(expr::Arith{ArithOp::Div, left, app_expr()}, t.span);
      } else {
        return left;
      }
    }
  }

  bool starts_atom() const {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Ident:
      case Tok::Int:
        return true;
      case Tok::Keyword:
        return t.text == "true" || t.text == "false" || t.text == "eval";
      case Tok::Sym:
        return t.text == "(" || t.text == "[";
      default:
        return false;
    }
  }

  Expr app_expr() {
    const Token& t = peek();
    Expr head;
    if (accept("fst")) {
      head = make_expr(expr::Proj{1, atom()}, t.span);
    } else if (accept("snd")) {
      head = make_expr(expr::Proj{2, atom()}, t.span);
    } else {
      head = atom();
    }
    while (starts_atom()) head = make_expr(expr::App{head, atom()}, t.span);
    return head;
  }

  std::int64_t int_value(const Token& t, bool negative) {
    std::int64_t v = 0;
    std::string digits = negative ? "-" + t.text : t.text;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      fail(t, "integer literal out of range");
    return v;
  }

  Expr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
        next();
        return make_expr(expr::IntLit{int_value(t, false)}, t.span);
      case Tok::Ident: {
        next();
        if (!locally_bound(t.text)) {
          if (const Definition* d = defs_.find(t.text)) {
            const Term* term = std::get_if<Term>(d);
            if (!term || !std::holds_alternative<Expr>(*term))
              fail(t, "definition '" + t.text + "' is not an expression");
            return std::get<Expr>(*term);
          }
        }
        return make_expr(expr::Var{t.text}, t.span);
      }
      default:
        break;
    }
    if (accept("true")) return make_expr(expr::BoolLit{true}, t.span);
    if (accept("false")) return make_expr(expr::BoolLit{false}, t.span);
    if (accept("-")) {
      const Token& n = peek();
      if (n.kind != Tok::Int) fail(n, "expected an integer literal after '-'");
      next();
      return make_expr(expr::IntLit{int_value(n, true)}, t.span);
    }
    if (accept("eval")) {
      expr::Eval ev;
      if (is_sym("[")) ev.seq = hseq();
      ev.u = ident("modal variable");
      return make_expr(std::move(ev), t.span);
    }
    if (accept("(")) {
      if (accept(")")) return make_expr(expr::UnitLit{}, t.span);
      Expr first = expr();
      if (accept(",")) {
        Expr second = expr();
        expect(")");
        return make_expr(expr::Pair{first, second}, t.span);
      }
      expect(")");
      return first;
    }
    if (accept("[")) {
      expr::List list;
      if (accept("]")) {
        if (!accept(":")) fail(t, "empty list needs an element type: []:T");
        list.elem = prefix_type();
        return make_expr(std::move(list), t.span);
      }
      do {
        list.items.push_back(expr());
      } while (accept(","));
      expect("]");
      return make_expr(std::move(list), t.span);
    }
    fail(t, "expected an expression, found " + describe(t));
  }
};

template <typename F>
auto run_parser(std::string_view text, const Definitions& defs, F f) {
  Parser p(text, defs);
  return f(p);
}

}  // namespace

SourceFile parse(std::string_view text, const Definitions& outer) {
  return run_parser(text, outer, [](Parser& p) { return p.file(); });
}

Term parse_term(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_term(); });
}

Expr parse_expr(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_expr(); });
}

Comp parse_comp(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_comp(); });
}

Type parse_type(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_type(); });
}

Theory parse_theory(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_theory(); });
}

Handler parse_handler(std::string_view text, const Definitions& defs) {
  return run_parser(text, defs, [](Parser& p) { return p.whole_handler(); });
}

ReplInput parse_repl_line(std::string_view text, const Definitions& defs) {
  std::size_t b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::string_view line = text.substr(b);
  if (line.substr(0, 2) == ":q") {
    ReplInput out;
    out.kind = ReplInput::Kind::Quit;
    return out;
  }
  if (line.substr(0, 2) == ":t") {
    // Keep columns aligned with the original line.
    std::string padded(text);
    padded[b] = ' ';
    padded[b + 1] = ' ';
    ReplInput out;
    out.kind = ReplInput::Kind::TypeOf;
    out.term = run_parser(padded, defs, [](Parser& p) {
      Term t = p.whole_term();
      return t;
    });
    return out;
  }
  return run_parser(text, defs, [](Parser& p) { return p.repl(); });
}

}  // namespace ecmtt
